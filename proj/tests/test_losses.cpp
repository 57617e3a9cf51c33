// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "loss_fixtures.hpp"
#include "protoscene/errors.hpp"
#include "protoscene/geometry/chamfer.hpp"
#include "protoscene/losses/accuracy.hpp"
#include "protoscene/losses/coverage.hpp"
#include "protoscene/losses/oracle.hpp"
#include "protoscene/losses/regularizers.hpp"

using namespace protoscene;
using namespace protoscene::loss;
using namespace testutil;

namespace {

model::SlotParams slot(double alpha, std::vector<double> beta) {
  model::SlotParams p;
  p.alpha = alpha;
  p.beta = std::move(beta);
  return p;
}

model::SlotParams slot_alpha(double alpha) { return slot(alpha, {alpha}); }

}  // namespace

TEST_CASE("loss_acc against scalar expansion") {
  std::mt19937_64 rng(100);
  std::uniform_int_distribution<int> S(1, 4), K(1, 3), P(1, 8), N(1, 16);
  for (int i = 0; i < 60; ++i) {
    const bool inten = i % 2 == 0;
    const LossInstance in = random_instance(rng, S(rng), K(rng), P(rng), static_cast<std::size_t>(N(rng)) + 1, inten);
    const double got = loss_acc(in.cand, in.target);
    const double ref = acc_expansion(in, inten);
    CHECK(std::abs(got - ref) <= 1e-12 * std::max(1.0, ref));
  }
}

TEST_CASE("loss_acc examples") {
  std::mt19937_64 rng(1);
  LossInstance in = random_instance(rng, 2, 2, 5, 10, false);
  for (auto& p : in.cand.params) {
    p.alpha = 0.0;
    std::fill(p.beta.begin(), p.beta.end(), 0.0);
  }
  CHECK(loss_acc(in.cand, in.target) == 0.0);

  // Y = X.
  model::CandidateSet c;
  c.slots = 1;
  c.prototypes = 1;
  c.points_per_prototype = static_cast<int>(in.patch.size());
  c.points = in.patch.positions;
  c.intensity = {0.0};
  c.params = {slot(1.0, {1.0})};
  CHECK(loss_acc(c, in.target) == 0.0);

  // A candidate entirely outside the extent costs nothing.
  for (auto& p : c.points) p.x() += 5.0;
  CHECK(loss_acc(c, in.target) == 0.0);
}

TEST_CASE("loss_cov against enumeration") {
  std::mt19937_64 rng(200);
  std::uniform_int_distribution<int> S(1, 4), K(1, 3), P(1, 8), N(1, 16);
  for (int i = 0; i < 60; ++i) {
    const bool inten = i % 3 == 0;
    const LossInstance in = random_instance(rng, S(rng), K(rng), P(rng), static_cast<std::size_t>(N(rng)), inten);
    const double ref = cov_enumeration(in, inten);
    const double got = loss_cov(in.cand, in.target);
    CHECK(rel_err(got, ref) < 1e-9);
    CHECK(rel_err(loss_cov_enumerate(in.cand, in.target), ref) < 1e-12);
    // The sorted accumulation bounds the exact value from above, with
    // equality for a single prototype.
    const double sorted = loss_cov(in.cand, in.target, CoverageMode::kSlotSorted);
    if (in.cand.prototypes == 1) {
      CHECK(rel_err(sorted, ref) < 1e-9);
    } else {
      CHECK(sorted >= ref - 1e-12);
    }
  }
}

TEST_CASE("loss_cov examples") {
  std::mt19937_64 rng(2);
  LossInstance in = random_instance(rng, 3, 2, 5, 10, false);
  for (auto& p : in.cand.params) {
    p.alpha = 0.0;
    std::fill(p.beta.begin(), p.beta.end(), 0.0);
  }
  CHECK(loss_cov(in.cand, in.target) == 0.0);
  CHECK(loss_cov(in.cand, in.target, CoverageMode::kSlotSorted) == 0.0);

  model::CandidateSet c;
  c.slots = 1;
  c.prototypes = 1;
  c.points_per_prototype = static_cast<int>(in.patch.size());
  c.points = in.patch.positions;
  c.intensity = {0.0};
  c.params = {slot(1.0, {1.0})};
  CHECK(loss_cov(c, in.target) == 0.0);

  CHECK(parse_coverage_mode("exact") == CoverageMode::kExact);
  CHECK(parse_coverage_mode(coverage_mode_name(CoverageMode::kSlotSorted)) == CoverageMode::kSlotSorted);
  CHECK_THROWS_AS(parse_coverage_mode("fast"), ParameterError);
}

TEST_CASE("Monte-Carlo oracle") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5; ++i) {
    const LossInstance in = random_instance(rng, 3, 2, 6, 12, true);
    const auto mc = loss_cov_montecarlo(in.cand, in.target, 20000, 7 + i);
    const double exact = loss_cov(in.cand, in.target);
    CHECK(std::abs(mc.mean - exact) <= 4.0 * mc.std_error + 1e-15);
  }
  const LossInstance in = random_instance(rng, 7, 1, 2, 4, false);
  CHECK_THROWS_AS(loss_cov_enumerate(in.cand, in.target), ParameterError);
  CHECK_THROWS_AS(loss_cov_montecarlo(in.cand, in.target, 1, 0), ParameterError);
}

TEST_CASE("loss_cov is monotone in alpha once coverage is certain") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    LossInstance in = random_instance(rng, 3, 2, 5, 10, false);
    // Slot 0 is always active, so the empty draw has probability zero.
    in.cand.params[0] = slot(1.0, {0.4, 0.6});
    const int s = 1 + i % 2;
    auto& p = in.cand.params[s];
    // Raise alpha_s with the conditional choice distribution fixed.
    const std::vector<double> q = {0.3, 0.7};
    p.beta = {p.alpha * q[0], p.alpha * q[1]};
    double before = loss_cov(in.cand, in.target);
    for (double a = p.alpha; a <= 1.0; a += 0.1 + 0.1 * u(rng)) {
      p.alpha = a;
      for (std::size_t k = 0; k < q.size(); ++k) p.beta[k] = a * q[k];
      const double now = loss_cov(in.cand, in.target);
      CHECK(now <= before + 1e-12);
      before = now;
    }
  }
}

TEST_CASE("activating a slot can raise loss_cov when nothing else is active") {
  std::mt19937_64 rng(4);
  LossInstance in = random_instance(rng, 1, 1, 5, 10, false);
  in.cand.params[0] = slot(0.0, {0.0});
  const double off = loss_cov(in.cand, in.target);
  in.cand.params[0] = slot(0.5, {0.5});
  CHECK(off == 0.0);
  CHECK(loss_cov(in.cand, in.target) > 0.0);
}

TEST_CASE("deterministic limit is the asymmetric Chamfer distance") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    LossInstance in = random_instance(rng, 3, 1, 6, 14, i % 2 == 0);
    geom::PointCloud uni;
    uni.intensity = std::vector<double>{};
    for (auto& p : in.cand.params) p = slot(1.0, {1.0});
    for (const auto& y : in.cand.points) {
      uni.positions.push_back(y);
      uni.intensity->push_back(in.cand.intensity[0]);
    }
    const auto x = in.target.space.map(in.patch);
    const auto y = in.target.space.map(uni);
    CHECK(std::abs(loss_cov(in.cand, in.target) - geom::chamfer_asym(x, y)) < 1e-9);
  }
}

TEST_CASE("activation regulariser") {
  CHECK(loss_act({{slot_alpha(0.2), slot_alpha(0.8)}, {slot_alpha(0.4), slot_alpha(0.6)}}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(loss_act({{slot_alpha(0.0), slot_alpha(0.0)}}) == 0.0);
  CHECK(loss_act({{slot_alpha(1.0), slot_alpha(1.0), slot_alpha(1.0)}}) == 3.0);
}

TEST_CASE("slot usage regulariser") {
  const BatchParams uniform = {{slot_alpha(0.3), slot_alpha(0.3), slot_alpha(0.3), slot_alpha(0.3)}};
  CHECK(std::abs(loss_slot(uniform, 0.1) - -0.4) < 1e-15);
  CHECK(std::abs(loss_slot(uniform, 0.5) - -1.0) < 1e-15);
  CHECK(std::abs(loss_slot({{slot_alpha(0.5), slot_alpha(0.0)}}, 0.1) - -0.1) < 1e-15);
  CHECK(loss_slot({{slot_alpha(0.0), slot_alpha(0.0)}}, 0.1) == 0.0);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    BatchParams b(3);
    for (auto& patch : b) {
      for (int s = 0; s < 5; ++s) patch.push_back(random_probs(rng, 2));
    }
    const double v = loss_slot(b, 0.15);
    CHECK(v <= 0.0);
    CHECK(v >= -5 * 0.15 - 1e-15);
  }
}

TEST_CASE("prototype usage regulariser") {
  CHECK(std::abs(loss_proto({{slot_alpha(0.3), slot_alpha(0.9)}}, 0.1) - -0.1) < 1e-15);
  // Prototype 1 never chosen: only prototype 0 contributes.
  CHECK(std::abs(loss_proto({{slot(0.5, {0.5, 0.0}), slot(0.2, {0.2, 0.0})}}, 0.1) - -0.1) < 1e-15);
  CHECK(loss_proto({{slot(0.0, {0.0, 0.0})}}, 0.1) == 0.0);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    BatchParams b(2);
    for (auto& patch : b) {
      for (int s = 0; s < 4; ++s) patch.push_back(random_probs(rng, 3));
    }
    const double eps = 0.4;
    double denom = 0.0;
    std::vector<double> usage(3, 0.0);
    for (const auto& patch : b) {
      for (const auto& p : patch) {
        denom += p.alpha / 2.0;
        for (int k = 0; k < 3; ++k) usage[k] += p.beta[k] / 2.0;
      }
    }
    double ref = 0.0;
    if (denom > 0.0) {
      for (double u : usage) ref -= std::min(u / denom, eps);
    }
    CHECK(std::abs(loss_proto(b, eps) - ref) < 1e-12);
    CHECK(loss_proto(b, eps) >= -3 * eps - 1e-15);
  }
}

TEST_CASE("translation regulariser") {
  auto at = [](double x, double y, double z) {
    model::SlotParams p;
    p.transform.translation = Vec3(x, y, z);
    return p;
  };
  CHECK(loss_translate_reg({at(0.5, -0.3, 7.0)}) == 0.0);
  CHECK(std::abs(loss_translate_reg({at(1.5, 0, 0)}) - 0.25) < 1e-15);
  CHECK(std::abs(loss_translate_reg({at(2, -2, 1)}) - 2.0) < 1e-15);
  CHECK(std::abs(loss_translate_reg({at(2, -2, 1), at(1.5, 0, 0)}) - 2.25) < 1e-15);
}

TEST_CASE("regulariser gradients match finite differences") {
  std::mt19937_64 rng(8);
  BatchParams b(3);
  for (auto& patch : b) {
    for (int s = 0; s < 4; ++s) {
      patch.push_back(random_probs(rng, 3));
      patch.back().transform.translation = Vec3(2.0 * (s - 1.5), 0.7 * s - 1.0, 1.0);
    }
  }
  auto value = [&]() {
    double v = 2.0 * loss_act(b) + 3.0 * loss_slot(b, 0.3) + 5.0 * loss_proto(b, 0.3);
    for (const auto& p : b) v += 7.0 * loss_translate_reg(p);
    return v;
  };
  BatchParamGrads g(3, std::vector<model::SlotParamsGrad>(4, model::SlotParamsGrad(3)));
  loss_act(b, &g, 2.0);
  loss_slot(b, 0.3, &g, 3.0);
  loss_proto(b, 0.3, &g, 5.0);
  for (std::size_t i = 0; i < b.size(); ++i) loss_translate_reg(b[i], &g[i], 7.0);
  const double h = 1e-7;
  auto fd = [&](double& x) {
    const double keep = x;
    x = keep + h;
    const double p = value();
    x = keep - h;
    const double m = value();
    x = keep;
    return (p - m) / (2 * h);
  };
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t s = 0; s < 4; ++s) {
      CHECK(std::abs(fd(b[i][s].alpha) - g[i][s].alpha) < 1e-6);
      for (int k = 0; k < 3; ++k) CHECK(std::abs(fd(b[i][s].beta[k]) - g[i][s].beta[k]) < 1e-6);
      for (int d = 0; d < 3; ++d) {
        CHECK(std::abs(fd(b[i][s].transform.translation[d]) - g[i][s].translation[d]) < 1e-6);
      }
    }
  }
}

TEST_CASE("total_loss term sum") {
  std::mt19937_64 rng(9);
  GradToy toy = random_grad_toy(rng, 3, 3, 2, 6, 12, true);
  toy.weights.lambda_act = 0.3;
  toy.weights.lambda_slot = 0.7;
  toy.weights.lambda_proto = 0.2;
  toy.weights.lambda_translate = 1.3;
  const LossReport r = toy.eval();
  const auto& w = toy.weights;
  CHECK(std::abs(r.total - (r.acc + r.cov + w.lambda_act * r.act + w.lambda_slot * r.slot +
                            w.lambda_proto * r.proto + w.lambda_translate * r.translate_reg)) < 1e-12);

  // Hand-summed terms.
  double acc = 0.0, cov = 0.0, tr = 0.0;
  BatchParams bp;
  for (std::size_t b = 0; b < toy.patches.size(); ++b) {
    const auto cand = model::build_candidates(toy.params(b), toy.bank);
    const auto target = PatchTarget::from_patch(toy.patches[b], true);
    acc += loss_acc(cand, target) / 3.0;
    cov += loss_cov(cand, target) / 3.0;
    tr += loss_translate_reg(cand.params) / 3.0;
    bp.push_back(cand.params);
  }
  CHECK(std::abs(r.acc - acc) < 1e-12);
  CHECK(std::abs(r.cov - cov) < 1e-12);
  CHECK(std::abs(r.translate_reg - tr) < 1e-12);
  CHECK(r.act == loss_act(bp));
  CHECK(r.slot == loss_slot(bp, w.epsilon_s));
  CHECK(r.proto == loss_proto(bp, w.epsilon_k));

  toy.weights = LossWeights{0.0, 0.0, 0.0, 0.1, 0.1, 0.0};
  const LossReport z = toy.eval();
  CHECK(z.total == z.acc + z.cov);

  toy.weights = LossWeights{};
  toy.weights.lambda_slot = -1.0;
  CHECK_THROWS_AS(toy.eval(), ParameterError);
  toy.weights = LossWeights{};
  toy.weights.epsilon_k = 0.0;
  CHECK_THROWS_AS(toy.eval(), ParameterError);
}

TEST_CASE("fully inactive model has zero loss") {
  std::mt19937_64 rng(10);
  GradToy toy = random_grad_toy(rng, 2, 3, 2, 5, 10, false);
  for (auto& l : toy.logits) {
    l.assign(l.size(), -800.0);
    l[0] = 0.0;
  }
  for (auto& patch : toy.transforms) {
    for (auto& t : patch) t.translation = Vec3(0.1, 0.2, 0.5);
  }
  const LossReport r = toy.eval();
  CHECK(r.total == 0.0);
  CHECK(r.slot == 0.0);
  CHECK(r.proto == 0.0);
}

TEST_CASE("total_loss gradients match finite differences") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    GradToy toy = random_grad_toy(rng, 2, 3, 2, 5, 9, trial % 2 == 0);
    toy.weights.lambda_act = 0.05;
    const GradToyGrad g = analytic_grad(toy);
    const double h = 1e-6;
    auto fd = [&](double& x) {
      const double keep = x;
      x = keep + h;
      const double p = toy.eval().total;
      x = keep - h;
      const double m = toy.eval().total;
      x = keep;
      return (p - m) / (2 * h);
    };
    auto close = [](double num, double an) { return std::abs(num - an) <= 1e-4 * std::max(std::abs(num), 1e-3); };
    for (std::size_t b = 0; b < toy.patches.size(); ++b) {
      for (int s = 0; s < 3; ++s) {
        auto& t = toy.transforms[b][s];
        const auto& ga = g.slots[b][s];
        for (int d = 0; d < 3; ++d) CHECK(close(fd(t.translation[d]), ga.translation[d]));
        for (int d = 0; d < 3; ++d) CHECK(close(fd(t.scale[d]), ga.scale[d]));
        CHECK(close(fd(t.rot_z), ga.rot_z));
        CHECK(close(fd(t.tilt_y), ga.tilt));
        auto& l = toy.logits[b * 3 + s];
        for (std::size_t k = 0; k < l.size(); ++k) CHECK(close(fd(l[k]), g.logits[b * 3 + s][k]));
      }
    }
    for (int k = 0; k < 2; ++k) {
      for (int p = 0; p < 5; ++p) {
        for (int d = 0; d < 3; ++d) CHECK(close(fd(toy.bank.point(k, p)[d]), g.bank.points[k * 5 + p][d]));
      }
      CHECK(close(fd(toy.bank.base_scale[k]), g.bank.base_scale[k]));
      if (toy.cfg.use_intensity) CHECK(close(fd(toy.bank.intensity[k]), g.bank.intensity[k]));
    }
  }
}
