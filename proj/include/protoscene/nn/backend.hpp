// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace protoscene::nn {

/// Immutable search structure over a reference cloud.
class ReferenceIndex {
 public:
  virtual ~ReferenceIndex() = default;
  virtual std::size_t size() const = 0;
  virtual int dim() const = 0;

  /// `queries` is row-major with `dim()` columns. Writes, per query, the
  /// squared distance to and the index of the nearest reference point (ties
  /// to the lowest index). Distances are always evaluated in double precision
  /// from the chosen index, whatever precision the backend searched in.
  virtual void query(std::span<const double> queries, std::span<double> dist,
                     std::span<std::uint32_t> index) const = 0;
};

/// Exact nearest-neighbour provider.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string_view name() const = 0;
  /// Throws DomainError on an empty reference and ParameterError on dim not in 1..4.
  virtual std::unique_ptr<ReferenceIndex> build(std::span<const double> ref, int dim) const = 0;
};

/// In-process SIMD brute force.
const Backend& internal_backend();

/// Parses "internal", "shared-lib:<path>" or "subprocess:<path>".
std::unique_ptr<Backend> make_backend(std::string_view spec);

/// Backend chosen by the EP_NN_KERNEL environment variable (internal when unset).
const Backend& default_backend();

struct NearestResult {
  std::vector<double> dist;
  std::vector<std::uint32_t> index;
};

/// One-shot convenience: nearest reference point for each query.
NearestResult nearest(std::span<const double> queries, std::span<const double> ref, int dim,
                      const Backend& backend = default_backend());

}  // namespace protoscene::nn
