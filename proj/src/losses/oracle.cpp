// SPDX-License-Identifier: Apache-2.0

#include "protoscene/losses/oracle.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "protoscene/errors.hpp"

namespace protoscene::loss {

namespace {

// d[(s*K + k) * N + i] by direct double loop.
std::vector<double> brute_distances(const model::CandidateSet& cand, const PatchTarget& target) {
  const std::size_t n = target.x.size();
  const int dim = target.x.dim;
  std::vector<double> out(static_cast<std::size_t>(cand.slots) * cand.prototypes * n);
  for (int s = 0; s < cand.slots; ++s) {
    for (int k = 0; k < cand.prototypes; ++k) {
      const geom::FeatureCloud y = map_candidate(cand, s, k, target.space, false);
      for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < y.size(); ++p) {
          double acc = 0.0;
          for (int c = 0; c < dim; ++c) {
            const double diff = target.x.point(i)[c] - y.point(p)[c];
            acc += diff * diff;
          }
          best = std::min(best, acc);
        }
        out[(static_cast<std::size_t>(s) * cand.prototypes + k) * n + i] = best;
      }
    }
  }
  return out;
}

// Mean over X of the nearest realised candidate; choice[s] = -1 for inactive.
double realised_cost(const std::vector<int>& choice, const std::vector<double>& d, int K, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < choice.size(); ++s) {
      if (choice[s] < 0) continue;
      best = std::min(best, d[(s * K + choice[s]) * n + i]);
    }
    if (std::isfinite(best)) total += best;
  }
  return total / static_cast<double>(n);
}

}  // namespace

double loss_cov_enumerate(const model::CandidateSet& cand, const PatchTarget& target) {
  const int S = cand.slots;
  const int K = cand.prototypes;
  if (S > kMaxEnumerateSlots) throw ParameterError("enumeration oracle supports at most 6 slots");
  const std::size_t n = target.x.size();
  if (S == 0 || n == 0) return 0.0;
  const std::vector<double> d = brute_distances(cand, target);
  std::vector<int> choice(S, -1);
  double total = 0.0;
  // Odometer over {-1, 0..K-1}^S.
  while (true) {
    double prob = 1.0;
    for (int s = 0; s < S; ++s) {
      prob *= choice[s] < 0 ? 1.0 - cand.params[s].alpha : cand.params[s].beta[choice[s]];
    }
    if (prob != 0.0) total += prob * realised_cost(choice, d, K, n);
    int s = 0;
    while (s < S && choice[s] == K - 1) choice[s++] = -1;
    if (s == S) break;
    ++choice[s];
  }
  return total;
}

MonteCarloEstimate loss_cov_montecarlo(const model::CandidateSet& cand, const PatchTarget& target,
                                       std::uint64_t samples, std::uint64_t seed) {
  if (samples < 2) throw ParameterError("Monte-Carlo oracle needs at least 2 samples");
  const int S = cand.slots;
  const int K = cand.prototypes;
  const std::size_t n = target.x.size();
  const std::vector<double> d = brute_distances(cand, target);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> choice(S);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t it = 0; it < samples; ++it) {
    for (int s = 0; s < S; ++s) {
      double u = unit(rng);
      choice[s] = -1;
      for (int k = 0; k < K; ++k) {
        u -= cand.params[s].beta[k];
        if (u < 0.0) {
          choice[s] = k;
          break;
        }
      }
    }
    const double c = realised_cost(choice, d, K, n);
    sum += c;
    sum_sq += c * c;
  }
  const double m = sum / static_cast<double>(samples);
  const double var = std::max(0.0, (sum_sq - samples * m * m) / static_cast<double>(samples - 1));
  return {m, std::sqrt(var / static_cast<double>(samples))};
}

}  // namespace protoscene::loss
