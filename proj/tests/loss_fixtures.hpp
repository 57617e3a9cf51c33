// SPDX-License-Identifier: Apache-2.0
//
// Random loss instances and plain-loop reference evaluations, shared by the
// loss unit tests and the acceptance suite.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "protoscene/losses/objective.hpp"
#include "protoscene/losses/target.hpp"
#include "protoscene/model/candidates.hpp"
#include "protoscene/model/heads.hpp"
#include "protoscene/model/prototypes.hpp"

namespace testutil {

using protoscene::geom::PointCloud;
using protoscene::geom::Vec3;
namespace model = protoscene::model;
namespace loss = protoscene::loss;

struct LossInstance {
  model::CandidateSet cand;
  PointCloud patch;
  loss::PatchTarget target;
};

/// beta ~ alpha * Dirichlet(1); alpha uniform with occasional 0 and 1.
inline model::SlotParams random_probs(std::mt19937_64& rng, int K) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  model::SlotParams p;
  const double r = u(rng);
  p.alpha = r < 0.1 ? 0.0 : r < 0.2 ? 1.0 : u(rng);
  std::vector<double> e(K);
  double sum = 0.0;
  for (double& v : e) {
    v = -std::log(1.0 - u(rng));
    sum += v;
  }
  for (double v : e) p.beta.push_back(p.alpha * v / sum);
  return p;
}

inline PointCloud random_patch(std::mt19937_64& rng, std::size_t n, bool intensity) {
  std::uniform_real_distribution<double> xy(-1.0, 1.0);
  std::uniform_real_distribution<double> z(0.0, 2.0);
  std::uniform_real_distribution<double> i01(0.0, 1.0);
  PointCloud p;
  p.frame = protoscene::geom::Frame::kPatchNormalized;
  if (intensity) p.intensity = std::vector<double>{};
  for (std::size_t i = 0; i < n; ++i) {
    p.positions.emplace_back(xy(rng), xy(rng), z(rng));
    if (intensity) p.intensity->push_back(i01(rng));
  }
  return p;
}

/// Candidate points are drawn directly (no transform); about a third of the
/// candidates overhang the patch extent and some lie entirely outside it.
inline LossInstance random_instance(std::mt19937_64& rng, int S, int K, int P, std::size_t N, bool intensity) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LossInstance in;
  in.patch = random_patch(rng, N, intensity);
  in.target = loss::PatchTarget::from_patch(in.patch, intensity);
  model::CandidateSet& c = in.cand;
  c.slots = S;
  c.prototypes = K;
  c.points_per_prototype = P;
  for (int s = 0; s < S; ++s) c.params.push_back(random_probs(rng, K));
  for (int k = 0; k < K; ++k) c.intensity.push_back(u(rng));
  for (int s = 0; s < S; ++s) {
    for (int k = 0; k < K; ++k) {
      const double r = u(rng);
      const double reach = r < 0.6 ? 1.0 : 1.4;
      const double shift = r > 0.9 ? 3.0 : 0.0;
      for (int p = 0; p < P; ++p) {
        c.points.emplace_back(shift + reach * (2 * u(rng) - 1), reach * (2 * u(rng) - 1), 2.2 * u(rng) - 0.1);
      }
    }
  }
  return in;
}

/// Loss-space coordinates computed from scratch: bounding box of the patch
/// onto [0,1]^3 (flat axes unscaled), intensity scaled by 0.1 as a fourth axis.
struct RefSpace {
  Vec3 lo, ext;
  bool with_intensity;
  explicit RefSpace(const PointCloud& x, bool use_intensity) {
    lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& p : x.positions) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    ext = hi - lo;
    // A degenerate axis keeps unit scale.
    for (int d = 0; d < 3; ++d) {
      if (!(ext[d] > 1e-12)) ext[d] = 1.0;
    }
    with_intensity = use_intensity && x.intensity.has_value();
  }
  std::array<double, 4> map(const Vec3& p, double i) const {
    return {(p.x() - lo.x()) / ext.x(), (p.y() - lo.y()) / ext.y(), (p.z() - lo.z()) / ext.z(),
            with_intensity ? 0.1 * i : 0.0};
  }
};

inline double sq(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  double d = 0.0;
  for (int c = 0; c < 4; ++c) d += (a[c] - b[c]) * (a[c] - b[c]);
  return d;
}

inline std::vector<std::array<double, 4>> ref_patch(const LossInstance& in, const RefSpace& sp) {
  std::vector<std::array<double, 4>> x;
  for (std::size_t i = 0; i < in.patch.size(); ++i) {
    x.push_back(sp.map(in.patch.positions[i], in.patch.intensity ? (*in.patch.intensity)[i] : 0.0));
  }
  return x;
}

/// (1/S) sum_{s,k} beta d(clip(Y_sk), X) by direct loops.
inline double acc_expansion(const LossInstance& in, bool use_intensity) {
  const RefSpace sp(in.patch, use_intensity);
  const auto x = ref_patch(in, sp);
  const auto& c = in.cand;
  double total = 0.0;
  for (int s = 0; s < c.slots; ++s) {
    for (int k = 0; k < c.prototypes; ++k) {
      double sum = 0.0;
      int n = 0;
      for (int p = 0; p < c.points_per_prototype; ++p) {
        const Vec3& y = c.cloud(s, k)[p];
        if (std::abs(y.x()) > 1.0 || std::abs(y.y()) > 1.0) continue;
        const auto ym = sp.map(y, c.intensity[k]);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& xm : x) best = std::min(best, sq(ym, xm));
        sum += best;
        ++n;
      }
      if (n > 0) total += c.params[s].beta[k] * sum / n;
    }
  }
  return total / c.slots;
}

/// Expected coverage by enumerating every joint draw.
inline double cov_enumeration(const LossInstance& in, bool use_intensity) {
  const RefSpace sp(in.patch, use_intensity);
  const auto x = ref_patch(in, sp);
  const auto& c = in.cand;
  const int S = c.slots;
  const int K = c.prototypes;
  // dmin[(s*K+k)][i]
  std::vector<std::vector<double>> dmin(static_cast<std::size_t>(S * K), std::vector<double>(x.size()));
  for (int s = 0; s < S; ++s) {
    for (int k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int p = 0; p < c.points_per_prototype; ++p) best = std::min(best, sq(sp.map(c.cloud(s, k)[p], c.intensity[k]), x[i]));
        dmin[s * K + k][i] = best;
      }
    }
  }
  long total_draws = 1;
  for (int s = 0; s < S; ++s) total_draws *= (K + 1);
  double total = 0.0;
  for (long code = 0; code < total_draws; ++code) {
    long rest = code;
    double prob = 1.0;
    std::vector<int> pick(S);
    for (int s = 0; s < S; ++s) {
      pick[s] = static_cast<int>(rest % (K + 1)) - 1;
      rest /= (K + 1);
      prob *= pick[s] < 0 ? 1.0 - c.params[s].alpha : c.params[s].beta[pick[s]];
    }
    if (prob == 0.0) continue;
    double cost = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int s = 0; s < S; ++s) {
        if (pick[s] >= 0) best = std::min(best, dmin[s * K + pick[s]][i]);
      }
      if (std::isfinite(best)) cost += best;
    }
    total += prob * cost / static_cast<double>(x.size());
  }
  return total;
}

/// Total loss as a function of logits, slot transforms and prototype bank,
/// for finite-difference checks.
struct GradToy {
  model::ModelConfig cfg;
  std::vector<std::vector<double>> logits;  // per patch and slot
  std::vector<std::vector<protoscene::geom::AffineTransform>> transforms;
  model::PrototypeBank bank;
  std::vector<PointCloud> patches;
  loss::LossWeights weights;

  std::vector<model::SlotParams> params(std::size_t b) const {
    std::vector<model::SlotParams> out;
    for (int s = 0; s < cfg.slots; ++s) {
      model::SlotRaw r = model::SlotRaw::zeros(cfg);
      r.logits = logits[b * cfg.slots + s];
      model::SlotParams p = model::decode_slot(r, cfg, model::CurriculumStage{1});
      p.transform = transforms[b][s];
      out.push_back(p);
    }
    return out;
  }

  loss::LossReport eval(std::vector<model::CandidateGrad>* grads = nullptr,
                        std::vector<model::CandidateSet>* cands = nullptr) const {
    std::vector<model::CandidateSet> c;
    std::vector<loss::PatchTarget> t;
    for (std::size_t b = 0; b < patches.size(); ++b) {
      c.push_back(model::build_candidates(params(b), bank));
      t.push_back(loss::PatchTarget::from_patch(patches[b], cfg.use_intensity));
    }
    std::vector<loss::PatchInput> in;
    for (std::size_t b = 0; b < patches.size(); ++b) in.push_back({&c[b], &t[b]});
    const auto r = loss::total_loss(in, weights, loss::CoverageMode::kExact, grads);
    if (cands) *cands = std::move(c);
    return r;
  }
};

inline GradToy random_grad_toy(std::mt19937_64& rng, int B, int S, int K, int P, std::size_t N, bool intensity) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GradToy g;
  g.cfg.slots = S;
  g.cfg.prototypes = K;
  g.cfg.points_per_prototype = P;
  g.cfg.use_intensity = intensity;
  g.bank = model::init_prototypes(g.cfg, rng());
  for (int k = 0; k < K; ++k) {
    for (int p = 0; p < P; ++p) g.bank.point(k, p) *= 2.5;
    g.bank.intensity[k] = 0.5 + 0.4 * u(rng);
    g.bank.base_scale[k] = 0.2 * u(rng);
    g.bank.aniso_scale[k] = 0.2 * Vec3(u(rng), u(rng), u(rng));
  }
  for (int b = 0; b < B; ++b) {
    g.patches.push_back(random_patch(rng, N, intensity));
    g.transforms.emplace_back();
    for (int s = 0; s < S; ++s) {
      std::vector<double> l(K + 1);
      for (double& v : l) v = 1.5 * u(rng);
      g.logits.push_back(l);
      protoscene::geom::AffineTransform t;
      t.scale = Vec3(1.0 + 0.4 * u(rng), 1.0 + 0.4 * u(rng), 1.0 + 0.4 * u(rng));
      t.tilt_y = 0.3 * u(rng);
      t.rot_z = 3.0 * u(rng);
      t.translation = Vec3(1.2 * u(rng), 1.2 * u(rng), 1.0 + 0.8 * u(rng));
      g.transforms.back().push_back(t);
    }
  }
  return g;
}

/// Analytic gradients of GradToy::eval, laid out like the toy's parameters.
struct GradToyGrad {
  std::vector<std::vector<double>> logits;
  std::vector<std::vector<model::SlotParamsGrad>> slots;
  model::PrototypeBankGrad bank;
};

inline GradToyGrad analytic_grad(const GradToy& toy) {
  std::vector<model::CandidateGrad> grads;
  std::vector<model::CandidateSet> cands;
  toy.eval(&grads, &cands);
  GradToyGrad out;
  out.bank = model::PrototypeBankGrad(toy.bank);
  for (std::size_t b = 0; b < toy.patches.size(); ++b) {
    model::candidates_backward(cands[b], toy.bank, grads[b], out.bank);
    out.slots.push_back(grads[b].slots);
    for (int s = 0; s < toy.cfg.slots; ++s) {
      model::SlotRaw r = model::SlotRaw::zeros(toy.cfg);
      r.logits = toy.logits[b * toy.cfg.slots + s];
      const model::SlotRaw d =
          model::decode_slot_backward(r, cands[b].params[s], grads[b].slots[s], toy.cfg, model::CurriculumStage{1});
      out.logits.push_back(d.logits);
    }
  }
  return out;
}

}  // namespace testutil
