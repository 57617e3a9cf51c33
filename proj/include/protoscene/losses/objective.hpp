// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "protoscene/losses/coverage.hpp"
#include "protoscene/losses/target.hpp"
#include "protoscene/nn/backend.hpp"

namespace protoscene::loss {

struct LossWeights {
  double lambda_act = 1e-4;
  double lambda_slot = 0.1;
  double lambda_proto = 0.1;
  double epsilon_s = 0.1;
  double epsilon_k = 0.1;
  double lambda_translate = 1.0;

  /// Throws ParameterError on negative weights or epsilons outside (0,1].
  void validate() const;
};

struct LossReport {
  double acc = 0.0;
  double cov = 0.0;
  double act = 0.0;
  double slot = 0.0;
  double proto = 0.0;
  double translate_reg = 0.0;
  double total = 0.0;
};

struct PatchInput {
  const model::CandidateSet* candidates = nullptr;
  const PatchTarget* target = nullptr;
};

/// Batch objective: reconstruction and translation terms are batch means,
/// the usage regularisers are computed over the batch. When `grads` is
/// non-null it receives d total / d candidates for every patch.
LossReport total_loss(const std::vector<PatchInput>& batch, const LossWeights& weights,
                      CoverageMode mode = CoverageMode::kExact,
                      std::vector<model::CandidateGrad>* grads = nullptr,
                      const nn::Backend& backend = nn::default_backend());

/// acc + cov of a single patch.
double reconstruction_loss(const model::CandidateSet& cand, const PatchTarget& target,
                           CoverageMode mode = CoverageMode::kExact,
                           const nn::Backend& backend = nn::default_backend());

}  // namespace protoscene::loss
