// SPDX-License-Identifier: Apache-2.0

#include "protoscene/model/heads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace protoscene::model {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Offset c with lo + (hi - lo) * sigmoid(c) = 1.
double scale_offset(const ModelConfig& cfg) {
  const double r = (1.0 - cfg.scale_min) / (cfg.scale_max - cfg.scale_min);
  return std::log(r / (1.0 - r));
}

bool affine(const ModelConfig& cfg) { return cfg.transform_mode == TransformMode::kFullAffine; }

}  // namespace

SlotRaw SlotRaw::zeros(const ModelConfig& cfg) {
  SlotRaw r;
  r.logits.assign(cfg.prototypes + 1, 0.0);
  r.scale.assign(affine(cfg) ? 9 : 3, 0.0);
  return r;
}

std::vector<double> masked_softmax(const std::vector<double>& logits, const std::vector<bool>* live) {
  const std::size_t n = logits.size();
  auto on = [&](std::size_t i) { return i == 0 || !live || (*live)[i - 1]; };
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (on(i)) mx = std::max(mx, logits[i]);
  }
  std::vector<double> p(n, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!on(i)) continue;
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double rotation_from_vector(double v0, double v1) { return std::atan2(v1, v0); }

SlotParams decode_slot(const SlotRaw& raw, const ModelConfig& cfg, const CurriculumStage& stage,
                       const std::vector<bool>* live) {
  SlotParams out;
  const std::vector<double> p = masked_softmax(raw.logits, live);
  out.beta.assign(p.begin() + 1, p.end());
  // 1 - p0 would lose precision next to sum(beta) when p0 ~ 1.
  out.alpha = 0.0;
  for (double b : out.beta) out.alpha += b;

  geom::AffineTransform& t = out.transform;
  if (affine(cfg)) {
    Eigen::Matrix3d lin = Eigen::Matrix3d::Identity();
    if (stage.scale_active(cfg)) {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) lin(i, j) += raw.scale[i * 3 + j];
      }
    }
    t.linear = lin;
  } else if (stage.scale_active(cfg)) {
    const double c = scale_offset(cfg);
    const double span = cfg.scale_max - cfg.scale_min;
    if (stage.scale_independent(cfg)) {
      for (int i = 0; i < 3; ++i) t.scale[i] = cfg.scale_min + span * sigmoid(raw.scale[i] + c);
    } else {
      const double u = (raw.scale[0] + raw.scale[1] + raw.scale[2]) / 3.0;
      t.scale.setConstant(cfg.scale_min + span * sigmoid(u + c));
    }
  }
  t.tilt_y = cfg.max_tilt * std::tanh(raw.tilt);
  t.rot_z = rotation_from_vector(1.0 + raw.rot[0], raw.rot[1]);
  t.translation = geom::Vec3(raw.translate[0], raw.translate[1], raw.translate[2]);
  return out;
}

SlotRaw decode_slot_backward(const SlotRaw& raw, const SlotParams& params, const SlotParamsGrad& g,
                             const ModelConfig& cfg, const CurriculumStage& stage) {
  SlotRaw d = SlotRaw::zeros(cfg);

  // Softmax: p0 = 1 - alpha, p_k = beta_k; masked entries have p = 0 and
  // receive no gradient.
  const std::size_t n = raw.logits.size();
  std::vector<double> p(n), dp(n);
  p[0] = 1.0 - params.alpha;
  dp[0] = -g.alpha;
  for (std::size_t k = 1; k < n; ++k) {
    p[k] = params.beta[k - 1];
    dp[k] = g.beta[k - 1];
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += p[i] * dp[i];
  for (std::size_t i = 0; i < n; ++i) d.logits[i] = p[i] * (dp[i] - dot);

  if (affine(cfg)) {
    if (stage.scale_active(cfg)) {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) d.scale[i * 3 + j] = g.linear(i, j);
      }
    }
  } else if (stage.scale_active(cfg)) {
    const double c = scale_offset(cfg);
    const double span = cfg.scale_max - cfg.scale_min;
    if (stage.scale_independent(cfg)) {
      for (int i = 0; i < 3; ++i) {
        const double s = sigmoid(raw.scale[i] + c);
        d.scale[i] = g.scale[i] * span * s * (1.0 - s);
      }
    } else {
      const double u = (raw.scale[0] + raw.scale[1] + raw.scale[2]) / 3.0;
      const double s = sigmoid(u + c);
      const double du = (g.scale[0] + g.scale[1] + g.scale[2]) * span * s * (1.0 - s);
      for (int i = 0; i < 3; ++i) d.scale[i] = du / 3.0;
    }
  }

  const double th = std::tanh(raw.tilt);
  d.tilt = g.tilt * cfg.max_tilt * (1.0 - th * th);

  const double v0 = 1.0 + raw.rot[0];
  const double v1 = raw.rot[1];
  const double r2 = v0 * v0 + v1 * v1;
  if (r2 > 0.0) {
    d.rot[0] = g.rot_z * (-v1 / r2);
    d.rot[1] = g.rot_z * (v0 / r2);
  }
  for (int i = 0; i < 3; ++i) d.translate[i] = g.translation[i];
  return d;
}

}  // namespace protoscene::model
