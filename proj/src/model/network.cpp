// SPDX-License-Identifier: Apache-2.0

#include "protoscene/model/network.hpp"

#include <random>

namespace protoscene::model {

std::vector<ActiveSlot> select_active(const std::vector<SlotParams>& params) {
  std::vector<ActiveSlot> out;
  for (std::size_t s = 0; s < params.size(); ++s) {
    if (!(params[s].alpha > 0.5)) continue;
    const auto& b = params[s].beta;
    int best = 0;
    for (int k = 1; k < static_cast<int>(b.size()); ++k) {
      if (b[k] > b[best]) best = k;
    }
    out.push_back({static_cast<int>(s), best});
  }
  return out;
}

Network::Network(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  encoder_ = SceneEncoder::create(store_, cfg_);
  for (int s = 0; s < cfg_.slots; ++s) {
    slot_blocks_.push_back(DenseBlock::create(store_, "slots." + std::to_string(s),
                                              ParamGroup::kSlotFeatures, cfg_.scene_width,
                                              cfg_.slot_width));
  }
  const int w = cfg_.slot_width;
  const int scale_out = cfg_.transform_mode == TransformMode::kFullAffine ? 9 : 3;
  heads_[kProba] = Mlp3::create(store_, "heads.proba", ParamGroup::kHeadProba, w, w, cfg_.prototypes + 1);
  heads_[kScale] = Mlp3::create(store_, "heads.scale", ParamGroup::kHeadScale, w, w, scale_out);
  heads_[kTilt] = Mlp3::create(store_, "heads.rot_y", ParamGroup::kHeadRotY, w, w, 1);
  heads_[kRot] = Mlp3::create(store_, "heads.rot_z", ParamGroup::kHeadRotZ, w, w, 2);
  heads_[kTranslate] = Mlp3::create(store_, "heads.translate", ParamGroup::kHeadTranslate, w, w, 3);

  const auto K = static_cast<std::size_t>(cfg_.prototypes);
  const auto P = static_cast<std::size_t>(cfg_.points_per_prototype);
  proto_points_ = store_.add("prototypes.points", ParamGroup::kProtoPoints, {K, P, 3});
  proto_intensity_ = store_.add("prototypes.intensity", ParamGroup::kProtoIntensity, {K});
  proto_base_ = store_.add("prototypes.base_scale", ParamGroup::kProtoBaseScale, {K});
  proto_aniso_ = store_.add("prototypes.aniso_scale", ParamGroup::kProtoAnisoScale, {K, 3});

  std::mt19937_64 rng(seed);
  encoder_.init(store_, rng);
  for (const auto& b : slot_blocks_) b.linear.init_uniform(store_, rng);
  for (const auto& h : heads_) h.init(store_, rng, true);
  set_bank(init_prototypes(cfg_, rng()));
}

PrototypeBank Network::bank() const {
  PrototypeBank b;
  b.count = cfg_.prototypes;
  b.points_per_prototype = cfg_.points_per_prototype;
  const double* pts = store_.value(proto_points_);
  b.points.resize(static_cast<std::size_t>(b.count) * b.points_per_prototype);
  for (std::size_t i = 0; i < b.points.size(); ++i) b.points[i] = geom::Vec3(pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]);
  const double* in = store_.value(proto_intensity_);
  const double* bs = store_.value(proto_base_);
  const double* an = store_.value(proto_aniso_);
  b.intensity.assign(in, in + b.count);
  b.base_scale.assign(bs, bs + b.count);
  for (int k = 0; k < b.count; ++k) b.aniso_scale.emplace_back(an[3 * k], an[3 * k + 1], an[3 * k + 2]);
  return b;
}

void Network::set_bank(const PrototypeBank& b) {
  double* pts = store_.value(proto_points_);
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    for (int d = 0; d < 3; ++d) pts[3 * i + d] = b.points[i][d];
  }
  double* in = store_.value(proto_intensity_);
  double* bs = store_.value(proto_base_);
  double* an = store_.value(proto_aniso_);
  for (int k = 0; k < b.count; ++k) {
    in[k] = b.intensity[k];
    bs[k] = b.base_scale[k];
    for (int d = 0; d < 3; ++d) an[3 * k + d] = b.aniso_scale[k][d];
  }
}

void Network::accumulate_bank_grad(const PrototypeBankGrad& g) {
  double* pts = store_.grad(proto_points_);
  for (std::size_t i = 0; i < g.points.size(); ++i) {
    for (int d = 0; d < 3; ++d) pts[3 * i + d] += g.points[i][d];
  }
  double* in = store_.grad(proto_intensity_);
  double* bs = store_.grad(proto_base_);
  double* an = store_.grad(proto_aniso_);
  for (std::size_t k = 0; k < g.intensity.size(); ++k) {
    in[k] += g.intensity[k];
    bs[k] += g.base_scale[k];
    for (int d = 0; d < 3; ++d) an[3 * k + d] += g.aniso_scale[k][d];
  }
}

std::vector<double> Network::encode(const geom::PointCloud& patch) const {
  SceneEncoder::Cache c;
  return encoder_.forward(store_, patch, c);
}

std::vector<SlotRaw> Network::heads(const geom::PointCloud& patch, Cache& c) const {
  c.feature = encoder_.forward(store_, patch, c.encoder);
  const auto S = static_cast<std::size_t>(cfg_.slots);
  c.slot.assign(S, {});
  c.heads.assign(S, {});
  c.raw.assign(S, SlotRaw::zeros(cfg_));
  for (std::size_t s = 0; s < S; ++s) {
    slot_blocks_[s].forward(store_, c.feature, c.slot[s]);
    auto& hc = c.heads[s];
    for (int h = 0; h < kHeadCount; ++h) heads_[h].forward(store_, c.slot[s].out, hc[h]);
    SlotRaw& r = c.raw[s];
    r.logits = hc[kProba].out;
    r.scale = hc[kScale].out;
    r.tilt = hc[kTilt].out[0];
    r.rot[0] = hc[kRot].out[0];
    r.rot[1] = hc[kRot].out[1];
    for (int i = 0; i < 3; ++i) r.translate[i] = hc[kTranslate].out[i];
  }
  return c.raw;
}

std::vector<SlotParams> Network::slot_heads(const geom::PointCloud& patch, const CurriculumStage& stage,
                                            const std::vector<bool>* live) const {
  Cache c;
  const auto raw = heads(patch, c);
  std::vector<SlotParams> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(decode_slot(r, cfg_, stage, live));
  return out;
}

Network::Forward Network::reconstruct(const geom::PointCloud& patch, const CurriculumStage& stage,
                                      const std::vector<bool>* live) const {
  Forward f;
  heads(patch, f.cache);
  f.params.reserve(f.cache.raw.size());
  for (const auto& r : f.cache.raw) f.params.push_back(decode_slot(r, cfg_, stage, live));
  f.bank = bank();
  f.candidates = build_candidates(f.params, f.bank);
  return f;
}

void Network::backward(const Forward& f, CandidateGrad& g, const CurriculumStage& stage) {
  PrototypeBankGrad bg(f.bank);
  candidates_backward(f.candidates, f.bank, g, bg);
  accumulate_bank_grad(bg);

  std::vector<double> dfeature(static_cast<std::size_t>(cfg_.scene_width), 0.0);
  for (std::size_t s = 0; s < f.params.size(); ++s) {
    const SlotRaw d = decode_slot_backward(f.cache.raw[s], f.params[s], g.slots[s], cfg_, stage);
    const auto& hc = f.cache.heads[s];
    std::vector<double> dslot(static_cast<std::size_t>(cfg_.slot_width), 0.0);
    heads_[kProba].backward(store_, hc[kProba], d.logits, dslot);
    heads_[kScale].backward(store_, hc[kScale], d.scale, dslot);
    heads_[kTilt].backward(store_, hc[kTilt], {d.tilt}, dslot);
    heads_[kRot].backward(store_, hc[kRot], {d.rot[0], d.rot[1]}, dslot);
    heads_[kTranslate].backward(store_, hc[kTranslate], {d.translate[0], d.translate[1], d.translate[2]},
                                dslot);
    slot_blocks_[s].backward(store_, f.cache.slot[s], dslot, &dfeature);
  }
  encoder_.backward(store_, f.cache.encoder, dfeature);
}

}  // namespace protoscene::model
