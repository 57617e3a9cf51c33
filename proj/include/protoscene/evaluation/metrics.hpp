// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "protoscene/evaluation/decompose.hpp"

namespace protoscene::eval {

struct IouReport {
  double miou = 0.0;                 // percent
  std::map<int, double> per_class;   // percent, classes present in gt
};

/// Mean over classes present in `gt` of |pred & gt| / |pred | gt|; points
/// with gt = -1 are ignored. Throws ParameterError on a length mismatch and
/// DomainError when no point is labelled.
IouReport miou(const std::vector<int>& pred, const std::vector<int>& gt);

struct CountReport {
  double mre = 0.0;                  // percent
  std::vector<std::size_t> excluded; // zones with a zero true count
};

/// Mean over zones of |pred - true| / true, in percent; zones with a zero
/// true count are excluded and listed. Throws ParameterError on a length
/// mismatch and DomainError when every zone is excluded.
CountReport count_mre(const std::vector<double>& predicted, const std::vector<double>& truth);

/// Mean over inference patches of the symmetric Chamfer distance between
/// the patch and its reconstruction clipped to the patch extent (patch loss
/// space). Patches with an empty clipped reconstruction are skipped and
/// counted in `skipped`.
double decomposition_chamfer(const Decomposition& d, const geom::PointCloud& scene, std::size_t* skipped = nullptr,
                             const nn::Backend& backend = nn::default_backend());

}  // namespace protoscene::eval
