// SPDX-License-Identifier: Apache-2.0

#include "protoscene/losses/coverage.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "protoscene/errors.hpp"

namespace protoscene::loss {

namespace {

constexpr double kAlphaFloor = 1e-8;

struct Atom {
  double d;
  int s;
  int k;
};

// Gradients of one input point's expected distance.
struct PointGrad {
  std::vector<double> dd;     // S*K, w.r.t. d(x, Y_s^k)
  std::vector<double> dbeta;  // S*K
  std::vector<double> dalpha; // S
};

double exact_point(const model::CandidateSet& cand, const double* d, std::vector<Atom>& atoms,
                   PointGrad* g) {
  const int S = cand.slots;
  const int K = cand.prototypes;
  atoms.clear();
  for (int s = 0; s < S; ++s) {
    for (int k = 0; k < K; ++k) atoms.push_back({d[s * K + k], s, k});
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.s != b.s) return a.s < b.s;
    return a.k < b.k;
  });

  // c[s]: probability that slot s already realised a closer atom.
  std::vector<double> c(S, 0.0), q(S), prefix(S + 1), suffix(S + 1);
  std::vector<double> acc(g ? S : 0, 0.0), at(g ? atoms.size() : 0, 0.0);
  double e = 0.0;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    const Atom& a = atoms[j];
    const double beta = cand.params[a.s].beta[a.k];
    for (int s = 0; s < S; ++s) q[s] = s == a.s ? 1.0 : 1.0 - c[s];
    prefix[0] = 1.0;
    for (int s = 0; s < S; ++s) prefix[s + 1] = prefix[s] * q[s];
    const double w = prefix[S];
    const double t = a.d * beta;
    e += t * w;
    if (g) {
      const std::size_t idx = static_cast<std::size_t>(a.s) * K + a.k;
      g->dd[idx] += beta * w;
      g->dbeta[idx] += a.d * w;
      at[j] = acc[a.s];
      if (t != 0.0) {
        suffix[S] = 1.0;
        for (int s = S - 1; s >= 0; --s) suffix[s] = suffix[s + 1] * q[s];
        for (int s = 0; s < S; ++s) {
          if (s != a.s) acc[s] -= t * prefix[s] * suffix[s + 1];
        }
      }
    }
    c[a.s] += beta;
  }
  if (g) {
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      const Atom& a = atoms[j];
      g->dbeta[static_cast<std::size_t>(a.s) * K + a.k] += acc[a.s] - at[j];
    }
  }
  return e;
}

double slot_sorted_point(const model::CandidateSet& cand, const double* d, std::vector<int>& order,
                         std::vector<double>& A, std::vector<double>& key, PointGrad* g) {
  const int S = cand.slots;
  const int K = cand.prototypes;
  A.assign(S, 0.0);
  key.resize(S);
  for (int s = 0; s < S; ++s) {
    for (int k = 0; k < K; ++k) A[s] += cand.params[s].beta[k] * d[s * K + k];
    key[s] = A[s] / std::max(cand.params[s].alpha, kAlphaFloor);
  }
  order.resize(S);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });

  std::vector<double> w(S);
  double e = 0.0;
  double run = 1.0;
  for (int r = 0; r < S; ++r) {
    const int s = order[r];
    w[r] = run;
    e += A[s] * run;
    run *= 1.0 - cand.params[s].alpha;
  }
  if (g) {
    double G = 0.0;
    for (int r = S - 1; r >= 0; --r) {
      const int s = order[r];
      // G holds sum_{j>r} A_j prod_{r<q<j} (1 - alpha_q).
      g->dalpha[s] += -w[r] * G;
      const double dA = w[r];
      for (int k = 0; k < K; ++k) {
        g->dbeta[static_cast<std::size_t>(s) * K + k] += dA * d[s * K + k];
        g->dd[static_cast<std::size_t>(s) * K + k] += dA * cand.params[s].beta[k];
      }
      G = A[s] + (1.0 - cand.params[s].alpha) * G;
    }
  }
  return e;
}

}  // namespace

std::string_view coverage_mode_name(CoverageMode m) {
  return m == CoverageMode::kExact ? "exact" : "slot_sorted";
}

CoverageMode parse_coverage_mode(std::string_view name) {
  if (name == "exact") return CoverageMode::kExact;
  if (name == "slot_sorted") return CoverageMode::kSlotSorted;
  throw ParameterError("unknown coverage mode '" + std::string(name) + "' (expected exact|slot_sorted)");
}

CandidateDistances candidate_distances(const model::CandidateSet& cand, const PatchTarget& target,
                                       const nn::Backend& backend) {
  CandidateDistances out;
  out.n = target.x.size();
  const std::size_t m = static_cast<std::size_t>(cand.slots) * cand.prototypes;
  out.dist.resize(m * out.n);
  out.index.resize(m * out.n);
  for (int s = 0; s < cand.slots; ++s) {
    for (int k = 0; k < cand.prototypes; ++k) {
      const geom::FeatureCloud y = map_candidate(cand, s, k, target.space, false);
      const auto index = backend.build(y.coords, y.dim);
      const std::size_t off = (static_cast<std::size_t>(s) * cand.prototypes + k) * out.n;
      index->query(target.x.coords, std::span<double>(out.dist.data() + off, out.n),
                   std::span<std::uint32_t>(out.index.data() + off, out.n));
    }
  }
  return out;
}

namespace {

double cover(const model::CandidateSet& cand, const CandidateDistances& cd, CoverageMode mode,
             const PatchTarget* target, model::CandidateGrad* grad, double grad_scale) {
  const int S = cand.slots;
  const int K = cand.prototypes;
  const std::size_t n = cd.n;
  if (S == 0 || n == 0) return 0.0;
  const std::size_t m = static_cast<std::size_t>(S) * K;
  std::vector<double> d(m);
  std::vector<Atom> atoms;
  std::vector<int> order;
  std::vector<double> A, key;
  PointGrad pg;
  if (grad) {
    pg.dd.resize(m);
    pg.dbeta.resize(m);
    pg.dalpha.resize(S);
  }
  const int dim = target ? target->x.dim : 0;
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) d[j] = cd.dist[j * n + i];
    if (grad) {
      std::fill(pg.dd.begin(), pg.dd.end(), 0.0);
      std::fill(pg.dbeta.begin(), pg.dbeta.end(), 0.0);
      std::fill(pg.dalpha.begin(), pg.dalpha.end(), 0.0);
    }
    total += mode == CoverageMode::kExact
                 ? exact_point(cand, d.data(), atoms, grad ? &pg : nullptr)
                 : slot_sorted_point(cand, d.data(), order, A, key, grad ? &pg : nullptr);
    if (!grad) continue;
    const double w = grad_scale * inv_n;
    const double* xp = target->x.point(i);
    double g[4];
    for (int s = 0; s < S; ++s) {
      grad->slots[s].alpha += w * pg.dalpha[s];
      for (int k = 0; k < K; ++k) {
        const std::size_t j = static_cast<std::size_t>(s) * K + k;
        grad->slots[s].beta[k] += w * pg.dbeta[j];
        if (pg.dd[j] == 0.0) continue;
        const std::uint32_t p = cd.index[j * n + i];
        double yp[4];
        target->space.map(cand.cloud(s, k)[p], cand.intensity[k], yp);
        for (int c = 0; c < dim; ++c) g[c] = w * pg.dd[j] * 2.0 * (yp[c] - xp[c]);
        add_point_grad(target->space, k, cand.offset(s, k) + p, g, *grad);
      }
    }
  }
  return total * inv_n;
}

}  // namespace

double loss_cov(const model::CandidateSet& cand, const PatchTarget& target, CoverageMode mode,
                model::CandidateGrad* grad, double grad_scale, const nn::Backend& backend) {
  if (cand.slots == 0) return 0.0;
  const CandidateDistances cd = candidate_distances(cand, target, backend);
  return cover(cand, cd, mode, &target, grad, grad_scale);
}

double loss_cov_from_distances(const model::CandidateSet& cand, const CandidateDistances& d,
                               CoverageMode mode) {
  return cover(cand, d, mode, nullptr, nullptr, 0.0);
}

}  // namespace protoscene::loss
