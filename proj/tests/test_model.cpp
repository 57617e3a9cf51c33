// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "protoscene/errors.hpp"
#include "protoscene/geometry/transform.hpp"
#include "protoscene/model/network.hpp"

using namespace protoscene;
using namespace protoscene::model;
using namespace testutil;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.slots = 3;
  c.prototypes = 2;
  c.points_per_prototype = 6;
  c.grid_resolution = 4;
  c.point_width = 4;
  c.scene_width = 6;
  c.slot_width = 5;
  return c;
}

PointCloud patch_cloud(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> xy(-0.95, 0.95);
  std::uniform_real_distribution<double> z(0.0, 1.9);
  std::uniform_real_distribution<double> i01(0.0, 1.0);
  PointCloud p;
  p.frame = geom::Frame::kPatchNormalized;
  p.intensity = std::vector<double>{};
  for (std::size_t i = 0; i < n; ++i) {
    p.positions.emplace_back(xy(rng), xy(rng), z(rng));
    p.intensity->push_back(i01(rng));
  }
  return p;
}

void randomize(ParamStore& store, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> u(-amp, amp);
  for (auto& t : store) {
    for (double& v : t.value) v += u(rng);
  }
}

// Random linear functional of the candidate set.
struct Probe {
  std::vector<Vec3> w;
  std::vector<double> v;
  std::vector<double> alpha_w;
  std::vector<std::vector<double>> beta_w;

  Probe(std::mt19937_64& rng, const CandidateSet& c) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t i = 0; i < c.points.size(); ++i) w.emplace_back(n(rng), n(rng), n(rng));
    for (int k = 0; k < c.prototypes; ++k) v.push_back(n(rng));
    for (int s = 0; s < c.slots; ++s) {
      alpha_w.push_back(n(rng));
      beta_w.emplace_back();
      for (int k = 0; k < c.prototypes; ++k) beta_w.back().push_back(n(rng));
    }
  }

  double eval(const CandidateSet& c) const {
    double j = 0.0;
    for (std::size_t i = 0; i < c.points.size(); ++i) j += w[i].dot(c.points[i]);
    for (int k = 0; k < c.prototypes; ++k) j += v[k] * c.intensity[k];
    for (int s = 0; s < c.slots; ++s) {
      j += alpha_w[s] * c.params[s].alpha;
      for (int k = 0; k < c.prototypes; ++k) j += beta_w[s][k] * c.params[s].beta[k];
    }
    return j;
  }

  CandidateGrad grad(const CandidateSet& c) const {
    CandidateGrad g(c);
    g.points = w;
    g.intensity = v;
    for (int s = 0; s < c.slots; ++s) {
      g.slots[s].alpha = alpha_w[s];
      g.slots[s].beta = beta_w[s];
    }
    return g;
  }
};

}  // namespace

TEST_CASE("masked softmax and slot probabilities") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 3.0);
  ModelConfig cfg = tiny_config();
  cfg.prototypes = 5;
  for (int trial = 0; trial < 50; ++trial) {
    SlotRaw r = SlotRaw::zeros(cfg);
    for (double& l : r.logits) l = n(rng);
    const SlotParams p = decode_slot(r, cfg, CurriculumStage{1});
    const double sum = std::accumulate(p.beta.begin(), p.beta.end(), 0.0);
    CHECK(std::abs(sum - p.alpha) < 1e-15);
    CHECK(p.alpha > 0.0);
    CHECK(p.alpha < 1.0);
    for (double b : p.beta) CHECK(b >= 0.0);
  }
  SlotRaw r = SlotRaw::zeros(cfg);
  r.logits = {0.0, 1.0, 5.0, 2.0, 0.0, 0.0};
  const std::vector<bool> live = {true, false, true, true, true};
  const SlotParams p = decode_slot(r, cfg, CurriculumStage{1}, &live);
  CHECK(p.beta[1] == 0.0);
  const double z = 1.0 + std::exp(1.0) + std::exp(2.0) + 2.0;
  CHECK(std::abs(p.alpha - (1.0 - 1.0 / z)) < 1e-15);
}

TEST_CASE("rotation head") {
  CHECK(std::abs(rotation_from_vector(0.6, 0.8) - std::atan2(0.8, 0.6)) == 0.0);
  CHECK(std::abs(rotation_from_vector(0.6, 0.8) - 0.9272952180016122) < 1e-15);
  ModelConfig cfg = tiny_config();
  SlotRaw r = SlotRaw::zeros(cfg);
  CHECK(decode_slot(r, cfg, CurriculumStage{1}).transform.rot_z == 0.0);
  r.rot[0] = 0.6 - 1.0;
  r.rot[1] = 0.8;
  CHECK(std::abs(decode_slot(r, cfg, CurriculumStage{1}).transform.rot_z - std::atan2(0.8, 0.6)) < 1e-15);
}

TEST_CASE("decode_slot stage gating") {
  ModelConfig cfg = tiny_config();
  SlotRaw r = SlotRaw::zeros(cfg);
  r.scale = {2.0, -1.0, 0.5};
  r.tilt = 50.0;

  for (int stage : {1, 2}) {
    const SlotParams p = decode_slot(r, cfg, CurriculumStage{stage});
    CHECK(p.transform.scale == Vec3(1, 1, 1));
    CHECK(std::abs(p.transform.tilt_y - cfg.max_tilt) < 1e-12);
  }
  // Tied: the three channels share the mean raw value.
  const SlotParams tied = decode_slot(r, cfg, CurriculumStage{3});
  CHECK(tied.transform.scale.x() == tied.transform.scale.y());
  CHECK(tied.transform.scale.y() == tied.transform.scale.z());
  SlotRaw mean = r;
  mean.scale = {0.5, 0.5, 0.5};
  CHECK(std::abs(decode_slot(mean, cfg, CurriculumStage{5}).transform.scale.x() - tied.transform.scale.x()) <
        1e-15);
  CHECK(decode_slot(r, cfg, CurriculumStage{4}).transform.scale == tied.transform.scale);

  const SlotParams indep = decode_slot(r, cfg, CurriculumStage{5});
  CHECK(indep.transform.scale.x() > indep.transform.scale.z());
  CHECK(indep.transform.scale.z() > indep.transform.scale.y());
  for (int i = 0; i < 3; ++i) {
    CHECK(indep.transform.scale[i] > cfg.scale_min);
    CHECK(indep.transform.scale[i] < cfg.scale_max);
  }
  // Zero raw output maps to unit scale at every stage.
  const SlotRaw z = SlotRaw::zeros(cfg);
  for (int stage = 1; stage <= 5; ++stage) {
    CHECK((decode_slot(z, cfg, CurriculumStage{stage}).transform.scale - Vec3::Ones()).cwiseAbs().maxCoeff() <
          1e-15);
  }
  // Without anisotropic learning the scales stay tied at stage 5.
  ModelConfig iso = cfg;
  iso.learn_aniso_scale = false;
  const SlotParams p5 = decode_slot(r, iso, CurriculumStage{5});
  CHECK(p5.transform.scale.x() == p5.transform.scale.y());
  // Without scale learning they never move.
  ModelConfig fixed = cfg;
  fixed.learn_scales = false;
  CHECK(decode_slot(r, fixed, CurriculumStage{5}).transform.scale == Vec3(1, 1, 1));
}

TEST_CASE("full-affine mode") {
  ModelConfig cfg = tiny_config();
  cfg.transform_mode = TransformMode::kFullAffine;
  SlotRaw r = SlotRaw::zeros(cfg);
  CHECK(r.scale.size() == 9);
  for (int i = 0; i < 9; ++i) r.scale[i] = 0.1 * (i + 1);
  const SlotParams early = decode_slot(r, cfg, CurriculumStage{1});
  REQUIRE(early.transform.linear.has_value());
  CHECK(*early.transform.linear == Eigen::Matrix3d::Identity());
  const SlotParams late = decode_slot(r, cfg, CurriculumStage{3});
  CHECK(std::abs((*late.transform.linear)(0, 1) - 0.2) < 1e-15);
  CHECK(std::abs((*late.transform.linear)(2, 2) - 1.9) < 1e-15);
}

TEST_CASE("decode_slot backward matches finite differences") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.7);
  for (auto mode : {TransformMode::kConstrained, TransformMode::kFullAffine}) {
    ModelConfig cfg = tiny_config();
    cfg.transform_mode = mode;
    for (int stage = 1; stage <= 5; ++stage) {
      const CurriculumStage st{stage};
      SlotRaw r = SlotRaw::zeros(cfg);
      for (double& v : r.logits) v = n(rng);
      for (double& v : r.scale) v = n(rng);
      r.tilt = n(rng);
      r.rot[0] = n(rng);
      r.rot[1] = n(rng);
      for (double& v : r.translate) v = n(rng);

      SlotParamsGrad g(cfg.prototypes);
      g.alpha = n(rng);
      for (double& b : g.beta) b = n(rng);
      g.scale = Vec3(n(rng), n(rng), n(rng));
      for (int i = 0; i < 9; ++i) g.linear(i / 3, i % 3) = n(rng);
      g.tilt = n(rng);
      g.rot_z = n(rng);
      g.translation = Vec3(n(rng), n(rng), n(rng));

      auto objective = [&](const SlotRaw& x) {
        const SlotParams p = decode_slot(x, cfg, st);
        double j = g.alpha * p.alpha + g.tilt * p.transform.tilt_y + g.rot_z * p.transform.rot_z +
                   g.translation.dot(p.transform.translation);
        for (int k = 0; k < cfg.prototypes; ++k) j += g.beta[k] * p.beta[k];
        if (p.transform.linear) {
          j += (g.linear.array() * p.transform.linear->array()).sum();
        } else {
          j += g.scale.dot(p.transform.scale);
        }
        return j;
      };
      const SlotParams p = decode_slot(r, cfg, st);
      const SlotRaw d = decode_slot_backward(r, p, g, cfg, st);
      const double h = 1e-6;
      auto fd = [&](double& slot) {
        const double keep = slot;
        slot = keep + h;
        const double jp = objective(r);
        slot = keep - h;
        const double jm = objective(r);
        slot = keep;
        return (jp - jm) / (2 * h);
      };
      for (std::size_t i = 0; i < r.logits.size(); ++i) CHECK(std::abs(fd(r.logits[i]) - d.logits[i]) < 1e-7);
      for (std::size_t i = 0; i < r.scale.size(); ++i) CHECK(std::abs(fd(r.scale[i]) - d.scale[i]) < 1e-7);
      CHECK(std::abs(fd(r.tilt) - d.tilt) < 1e-7);
      CHECK(std::abs(fd(r.rot[0]) - d.rot[0]) < 1e-7);
      CHECK(std::abs(fd(r.rot[1]) - d.rot[1]) < 1e-7);
      for (int i = 0; i < 3; ++i) CHECK(std::abs(fd(r.translate[i]) - d.translate[i]) < 1e-7);
    }
  }
}

TEST_CASE("init_prototypes") {
  ModelConfig cfg = tiny_config();
  cfg.prototypes = 4;
  cfg.points_per_prototype = 4000;
  std::vector<InitCuboid> cub;
  const PrototypeBank a = init_prototypes(cfg, 5, &cub);
  const PrototypeBank b = init_prototypes(cfg, 5);
  CHECK(a.points == b.points);
  CHECK(init_prototypes(cfg, 6).points != a.points);
  REQUIRE(cub.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(a.intensity[k] == 0.5);
    CHECK(a.base_scale[k] == 0.0);
    CHECK(a.aniso_scale[k] == Vec3::Zero());
    Vec3 mean = Vec3::Zero();
    for (int i = 0; i < 3; ++i) {
      CHECK(cub[k].half_extent[i] >= cfg.init_half_extent_min);
      CHECK(cub[k].half_extent[i] <= cfg.init_half_extent_max);
    }
    for (int p = 0; p < cfg.points_per_prototype; ++p) {
      const Vec3& x = a.point(k, p);
      for (int i = 0; i < 3; ++i) CHECK(std::abs(x[i]) <= cub[k].half_extent[i]);
      mean += x;
    }
    mean /= cfg.points_per_prototype;
    // Uniform on [-h, h]: sd of the mean is h / sqrt(3 n).
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(mean[i]) < 4.0 * cub[k].half_extent[i] / std::sqrt(3.0 * cfg.points_per_prototype));
    }
  }
}

TEST_CASE("prototype scales") {
  ModelConfig cfg = tiny_config();
  PrototypeBank bank = init_prototypes(cfg, 2);
  const geom::PointCloud before = bank.scaled_cloud(0);
  bank.base_scale[0] = std::log(2.0);
  const geom::PointCloud after = bank.scaled_cloud(0);
  const auto b0 = geom::bounding_box(before);
  const auto b1 = geom::bounding_box(after);
  for (int i = 0; i < 3; ++i) CHECK(std::abs((b1.max[i] - b1.min[i]) - 2.0 * (b0.max[i] - b0.min[i])) < 1e-12);
  bank.aniso_scale[0] = Vec3(0.0, 0.0, std::log(3.0));
  CHECK(std::abs(bank.multiplier(0).z() - 6.0) < 1e-12);
  CHECK(std::abs(bank.multiplier(0).x() - 2.0) < 1e-12);
}

TEST_CASE("identity start") {
  ModelConfig cfg = tiny_config();
  cfg.prototypes = 3;
  Network net(cfg, 7);
  std::mt19937_64 rng(1);
  const PointCloud patch = patch_cloud(rng, 40);
  const auto fwd = net.reconstruct(patch, CurriculumStage{1});
  const PrototypeBank bank = net.bank();
  for (int s = 0; s < cfg.slots; ++s) {
    const SlotParams& p = fwd.params[s];
    CHECK(std::abs(p.alpha - 3.0 / 4.0) < 1e-15);
    for (double b : p.beta) CHECK(std::abs(b - 0.25) < 1e-15);
    for (int k = 0; k < cfg.prototypes; ++k) {
      for (int q = 0; q < cfg.points_per_prototype; ++q) {
        CHECK((fwd.candidates.cloud(s, k)[q] - bank.point(k, q)).norm() == 0.0);
      }
    }
  }
}

TEST_CASE("candidates follow the slot transform") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ModelConfig cfg = tiny_config();
  PrototypeBank bank = init_prototypes(cfg, 9);
  bank.base_scale = {0.2, -0.1};
  bank.aniso_scale = {Vec3(0.1, 0.0, -0.2), Vec3(0.0, 0.3, 0.1)};
  std::vector<SlotParams> params(cfg.slots);
  for (auto& p : params) {
    p.beta = {0.3, 0.2};
    p.alpha = 0.5;
    p.transform.scale = Vec3(1.2, 0.8, 1.5);
    p.transform.tilt_y = 0.2 * u(rng);
    p.transform.rot_z = 3.0 * u(rng);
    p.transform.translation = Vec3(u(rng), u(rng), u(rng));
  }
  const CandidateSet c = build_candidates(params, bank);
  for (int s = 0; s < cfg.slots; ++s) {
    for (int k = 0; k < cfg.prototypes; ++k) {
      const geom::PointCloud ref = geom::apply_transform(params[s].transform, bank.scaled_cloud(k));
      const geom::PointCloud got = c.candidate(s, k);
      for (std::size_t q = 0; q < ref.size(); ++q) CHECK((ref.positions[q] - got.positions[q]).norm() < 1e-12);
      CHECK((*got.intensity)[0] == bank.intensity[k]);
    }
  }
}

TEST_CASE("candidates backward matches finite differences") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (bool affine : {false, true}) {
    ModelConfig cfg = tiny_config();
    PrototypeBank bank = init_prototypes(cfg, 3);
    for (int k = 0; k < bank.count; ++k) {
      bank.base_scale[k] = 0.3 * u(rng);
      bank.aniso_scale[k] = 0.3 * Vec3(u(rng), u(rng), u(rng));
    }
    std::vector<SlotParams> params(cfg.slots);
    for (auto& p : params) {
      p.beta = {0.3, 0.2};
      p.alpha = 0.5;
      p.transform.scale = Vec3(1.2, 0.8, 1.5);
      if (affine) {
        Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
        for (int i = 0; i < 9; ++i) m(i / 3, i % 3) += 0.3 * u(rng);
        p.transform.linear = m;
      }
      p.transform.tilt_y = 0.3 * u(rng);
      p.transform.rot_z = 3.0 * u(rng);
      p.transform.translation = Vec3(u(rng), u(rng), u(rng));
    }
    const CandidateSet c0 = build_candidates(params, bank);
    const Probe probe(rng, c0);
    CandidateGrad g = probe.grad(c0);
    PrototypeBankGrad bg(bank);
    candidates_backward(c0, bank, g, bg);

    const double h = 1e-6;
    auto fd = [&](double& x) {
      const double keep = x;
      x = keep + h;
      const double jp = probe.eval(build_candidates(params, bank));
      x = keep - h;
      const double jm = probe.eval(build_candidates(params, bank));
      x = keep;
      return (jp - jm) / (2 * h);
    };
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(b)); };
    for (int s = 0; s < cfg.slots; ++s) {
      auto& t = params[s].transform;
      if (affine) {
        for (int i = 0; i < 9; ++i) CHECK(close(fd((*t.linear)(i / 3, i % 3)), g.slots[s].linear(i / 3, i % 3)));
      } else {
        for (int i = 0; i < 3; ++i) CHECK(close(fd(t.scale[i]), g.slots[s].scale[i]));
      }
      CHECK(close(fd(t.tilt_y), g.slots[s].tilt));
      CHECK(close(fd(t.rot_z), g.slots[s].rot_z));
      for (int i = 0; i < 3; ++i) CHECK(close(fd(t.translation[i]), g.slots[s].translation[i]));
    }
    for (int k = 0; k < bank.count; ++k) {
      CHECK(close(fd(bank.intensity[k]), bg.intensity[k]));
      CHECK(close(fd(bank.base_scale[k]), bg.base_scale[k]));
      for (int i = 0; i < 3; ++i) CHECK(close(fd(bank.aniso_scale[k][i]), bg.aniso_scale[k][i]));
      for (int q = 0; q < bank.points_per_prototype; q += 2) {
        for (int i = 0; i < 3; ++i) CHECK(close(fd(bank.point(k, q)[i]), bg.points[k * bank.points_per_prototype + q][i]));
      }
    }
  }
}

TEST_CASE("dense layers backward matches finite differences") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  ParamStore store;
  const Mlp3 mlp = Mlp3::create(store, "m", ParamGroup::kHeadProba, 5, 7, 3);
  mlp.init(store, rng, false);
  randomize(store, rng, 0.3);
  std::vector<double> x(5), w(3);
  for (double& v : x) v = n(rng);
  for (double& v : w) v = n(rng);
  auto objective = [&]() {
    Mlp3::Cache c;
    mlp.forward(store, x, c);
    double j = 0.0;
    for (int i = 0; i < 3; ++i) j += w[i] * c.out[i];
    return j;
  };
  Mlp3::Cache c;
  mlp.forward(store, x, c);
  store.zero_grad();
  std::vector<double> dx(5, 0.0);
  mlp.backward(store, c, w, dx);
  const double h = 1e-6;
  auto fd = [&](double& v) {
    const double keep = v;
    v = keep + h;
    const double jp = objective();
    v = keep - h;
    const double jm = objective();
    v = keep;
    return (jp - jm) / (2 * h);
  };
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(fd(x[i]) - dx[i]) < 1e-6);
  for (auto& t : store) {
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(fd(t.value[i]) - t.grad[i]) < 1e-6);
  }
}

TEST_CASE("scene encoder shape and invariances") {
  ModelConfig cfg = tiny_config();
  cfg.grid_resolution = 8;
  cfg.scene_width = 12;
  Network net(cfg, 5);
  CHECK(cfg.encoder_levels() == 3);
  std::mt19937_64 rng(2);
  const PointCloud patch = patch_cloud(rng, 60);
  const std::vector<double> f = net.encode(patch);
  CHECK(f.size() == 12);

  std::vector<std::size_t> perm(patch.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  CHECK(net.encode(patch.subset(perm)) == f);

  std::vector<std::size_t> dup(perm);
  dup.insert(dup.end(), perm.begin(), perm.begin() + 20);
  CHECK(net.encode(patch.subset(dup)) == f);

  PointCloud empty;
  CHECK_THROWS_AS(net.encode(empty), DomainError);
}

TEST_CASE("network backward matches finite differences") {
  ModelConfig cfg = tiny_config();
  Network net(cfg, 13);
  std::mt19937_64 rng(17);
  randomize(net.params(), rng, 0.2);
  const PointCloud patch = patch_cloud(rng, 30);
  for (int stage : {1, 3, 5}) {
    const CurriculumStage st{stage};
    const auto f0 = net.reconstruct(patch, st);
    const Probe probe(rng, f0.candidates);
    CandidateGrad g = probe.grad(f0.candidates);
    net.params().zero_grad();
    net.backward(f0, g, st);

    const double h = 1e-6;
    int checked = 0;
    for (auto& t : net.params()) {
      const std::size_t stride = std::max<std::size_t>(1, t.size() / 6);
      for (std::size_t i = 0; i < t.size(); i += stride) {
        const double keep = t.value[i];
        t.value[i] = keep + h;
        const double jp = probe.eval(net.reconstruct(patch, st).candidates);
        t.value[i] = keep - h;
        const double jm = probe.eval(net.reconstruct(patch, st).candidates);
        t.value[i] = keep;
        const double fd = (jp - jm) / (2 * h);
        INFO(t.name, "[", i, "] stage ", stage);
        CHECK(std::abs(fd - t.grad[i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
        ++checked;
      }
      if (t.group == ParamGroup::kHeadScale && stage < 3) {
        for (double gv : t.grad) CHECK(gv == 0.0);
      }
    }
    CHECK(checked > 100);
  }
}

TEST_CASE("select_active") {
  std::vector<SlotParams> p(4);
  p[0].alpha = 0.9;
  p[0].beta = {0.2, 0.7};
  p[1].alpha = 0.3;
  p[1].beta = {0.1, 0.2};
  p[2].alpha = 0.5;
  p[2].beta = {0.25, 0.25};
  p[3].alpha = 0.6;
  p[3].beta = {0.3, 0.3};
  const auto a = select_active(p);
  REQUIRE(a.size() == 2);
  CHECK(a[0].slot == 0);
  CHECK(a[0].prototype == 1);
  CHECK(a[1].slot == 3);
  CHECK(a[1].prototype == 0);
}
