// SPDX-License-Identifier: Apache-2.0

#include "protoscene/training/trainer.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "protoscene/errors.hpp"
#include "protoscene/training/curriculum.hpp"

namespace protoscene::train {

namespace {

std::mt19937_64 step_rng(std::uint64_t seed, std::uint64_t step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

bool grads_finite(const model::ParamStore& store) {
  for (const auto& t : store) {
    for (double g : t.grad) {
      if (!std::isfinite(g)) return false;
    }
  }
  return true;
}

}  // namespace

int next_enabled_stage(int from, const TrainConfig& cfg) {
  for (int s = std::max(from, 1); s <= cfg.last_stage; ++s) {
    if (model::CurriculumStage::stage_enabled(s, cfg.model)) return s;
  }
  return 0;
}

Trainer::Trainer(const geom::PointCloud& scene, const TrainConfig& config, std::filesystem::path out_dir)
    : scene_(&scene), cfg_(config), out_dir_(std::move(out_dir)) {
  cfg_.validate();
  if (scene.empty()) throw DomainError("training scene is empty");
  index_ = std::make_unique<SceneIndex>(scene, cfg_.patch_size() / 4.0);
  net_ = std::make_unique<model::Network>(cfg_.model, cfg_.seed);
  adam_ = std::make_unique<Adam>(net_->params(), AdamOptions{0.9, 0.999, 1e-8, cfg_.weight_decay});
  state_.stage = next_enabled_stage(cfg_.first_stage, cfg_);
  state_.finished = state_.stage == 0;
  if (!out_dir_.empty()) {
    std::filesystem::create_directories(out_dir_);
    std::ofstream(out_dir_ / "config.txt.tmp") << serialize_config(cfg_);
    std::filesystem::rename(out_dir_ / "config.txt.tmp", out_dir_ / "config.txt");
  }
}

Trainer::~Trainer() {
  if (prefetch_) prefetch_->wait();
}

std::unique_ptr<Trainer> Trainer::resume(const geom::PointCloud& scene, const std::filesystem::path& ckpt,
                                         std::filesystem::path out_dir) {
  const Checkpoint c = load_checkpoint(ckpt);
  auto t = std::make_unique<Trainer>(scene, c.config, std::move(out_dir));
  restore(c, t->net_->params(), t->adam_.get());
  t->state_ = c.state;
  return t;
}

std::vector<Patch> Trainer::batch_for_step(std::uint64_t step) const {
  std::mt19937_64 rng = step_rng(cfg_.seed, step);
  std::vector<Patch> batch;
  batch.reserve(static_cast<std::size_t>(cfg_.batch_size));
  for (int b = 0; b < cfg_.batch_size; ++b) {
    batch.push_back(sample_patch(*index_, cfg_.patch_size(), static_cast<std::size_t>(cfg_.max_points_per_patch), rng));
  }
  return batch;
}

loss::LossReport Trainer::evaluate_batch(std::uint64_t step) const {
  const auto batch = batch_for_step(step);
  const model::CurriculumStage st{state_.stage};
  std::vector<model::Network::Forward> fwd;
  std::vector<loss::PatchTarget> targets;
  fwd.reserve(batch.size());
  targets.reserve(batch.size());
  for (const auto& p : batch) {
    fwd.push_back(net_->reconstruct(p.cloud, st));
    targets.push_back(loss::PatchTarget::from_patch(p.cloud, cfg_.model.use_intensity));
  }
  std::vector<loss::PatchInput> in;
  for (std::size_t i = 0; i < batch.size(); ++i) in.push_back({&fwd[i].candidates, &targets[i]});
  return loss::total_loss(in, cfg_.loss_weights, cfg_.coverage);
}

StepReport Trainer::step() {
  if (state_.finished) throw std::logic_error("trainer: curriculum already finished");
  const std::uint64_t step = state_.global_step;

  std::vector<Patch> batch;
  if (prefetch_ && prefetch_step_ == step) {
    batch = prefetch_->get();
    prefetch_.reset();
  } else {
    if (prefetch_) prefetch_->wait();
    prefetch_.reset();
    batch = batch_for_step(step);
  }
  if (!cfg_.deterministic) {
    prefetch_step_ = step + 1;
    prefetch_ = std::async(std::launch::async, [this, s = step + 1] { return batch_for_step(s); });
  }

  const model::CurriculumStage st{state_.stage};
  model::ParamStore& store = net_->params();
  store.zero_grad();
  std::vector<model::Network::Forward> fwd;
  std::vector<loss::PatchTarget> targets;
  fwd.reserve(batch.size());
  targets.reserve(batch.size());
  for (const auto& p : batch) {
    fwd.push_back(net_->reconstruct(p.cloud, st));
    targets.push_back(loss::PatchTarget::from_patch(p.cloud, cfg_.model.use_intensity));
  }
  std::vector<loss::PatchInput> in;
  for (std::size_t i = 0; i < batch.size(); ++i) in.push_back({&fwd[i].candidates, &targets[i]});
  std::vector<model::CandidateGrad> grads;
  const loss::LossReport rep = loss::total_loss(in, cfg_.loss_weights, cfg_.coverage, &grads);
  for (std::size_t i = 0; i < batch.size(); ++i) net_->backward(fwd[i], grads[i], st);

  auto unlocked = [&](const model::Tensor& t) { return st.unlocked(t.group, cfg_.model); };
  for (auto& t : store) {
    if (!unlocked(t)) std::fill(t.grad.begin(), t.grad.end(), 0.0);
  }

  if (!std::isfinite(rep.total) || !grads_finite(store)) {
    std::filesystem::path dump;
    if (!out_dir_.empty()) {
      dump = out_dir_ / ("nonfinite_step" + std::to_string(step));
      dump_batch(batch, rep, dump);
    }
    throw NonFiniteLoss("non-finite loss or gradient at step " + std::to_string(step) +
                            (dump.empty() ? "" : "; batch dumped to " + dump.string()),
                        dump);
  }

  const double lr = warmup_lr(state_.stage_step, cfg_.base_lr, static_cast<std::uint64_t>(cfg_.warmup_batches));
  adam_->step(store, lr, unlocked);

  StepReport r{step, state_.stage, state_.epochs_in_stage, lr, rep};
  ++state_.global_step;
  ++state_.stage_step;
  write_metrics(r);
  if (on_step) on_step(r);
  return r;
}

void Trainer::end_epoch(double mean_loss) {
  state_.epoch_losses.push_back(mean_loss);
  ++state_.epochs_in_stage;
  const int done_stage = state_.stage;
  const int done_epoch = state_.epochs_in_stage;
  if (advance_stage(state_.epoch_losses, cfg_.convergence.patience_epochs, cfg_.convergence.min_rel_improvement) ||
      state_.epochs_in_stage >= cfg_.convergence.max_epochs_per_stage) {
    const int next = next_enabled_stage(state_.stage + 1, cfg_);
    state_.epoch_losses.clear();
    state_.epochs_in_stage = 0;
    state_.stage_step = 0;
    if (next == 0) {
      state_.finished = true;
    } else {
      state_.stage = next;
    }
  }
  save("ckpt_stage" + std::to_string(done_stage) + "_epoch" + std::to_string(done_epoch));
}

void Trainer::run() {
  while (!state_.finished) {
    double sum = 0.0;
    for (int b = 0; b < cfg_.batches_per_epoch; ++b) sum += step().loss.total;
    end_epoch(sum / cfg_.batches_per_epoch);
  }
}

std::filesystem::path Trainer::save(const std::string& name) {
  if (out_dir_.empty()) return {};
  const auto path = out_dir_ / name;
  save_checkpoint(path, cfg_, state_, net_->params(), adam_.get());
  const auto tmp = out_dir_ / "latest.tmp";
  std::ofstream(tmp) << name << "\n";
  std::filesystem::rename(tmp, out_dir_ / "latest");
  return path;
}

void Trainer::write_metrics(const StepReport& r) {
  if (out_dir_.empty()) return;
  const nlohmann::json j = {{"step", r.step},
                            {"stage", r.stage},
                            {"epoch", r.epoch},
                            {"lr", r.lr},
                            {"acc", r.loss.acc},
                            {"cov", r.loss.cov},
                            {"act", r.loss.act},
                            {"slot", r.loss.slot},
                            {"proto", r.loss.proto},
                            {"translate_reg", r.loss.translate_reg},
                            {"total", r.loss.total}};
  std::ofstream(out_dir_ / "metrics.jsonl", std::ios::app) << j.dump() << "\n";
}

void Trainer::dump_batch(const std::vector<Patch>& batch, const loss::LossReport& r,
                         const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::ofstream os(dir / ("patch" + std::to_string(i) + ".txt"));
    os.precision(17);
    os << "# x y z intensity (patch frame)\n";
    const auto& c = batch[i].cloud;
    for (std::size_t p = 0; p < c.size(); ++p) {
      os << c.positions[p].x() << ' ' << c.positions[p].y() << ' ' << c.positions[p].z() << ' '
         << (c.intensity ? (*c.intensity)[p] : 0.0) << '\n';
    }
  }
  const nlohmann::json j = {{"acc", r.acc},     {"cov", r.cov},     {"act", r.act},
                            {"slot", r.slot},   {"proto", r.proto}, {"translate_reg", r.translate_reg},
                            {"total", r.total}, {"stage", state_.stage}, {"step", state_.global_step}};
  std::ofstream(dir / "report.json") << j.dump(2) << "\n";
  save_checkpoint(dir / "params.ckpt", cfg_, state_, net_->params(), nullptr);
}

LoadedModel load_model(const std::filesystem::path& ckpt) {
  const Checkpoint c = load_checkpoint(ckpt);
  LoadedModel m;
  m.config = c.config;
  m.state = c.state;
  m.network = std::make_unique<model::Network>(c.config.model, c.config.seed);
  restore(c, m.network->params(), nullptr);
  if (m.state.finished) m.state.stage = std::max(m.state.stage, 1);
  return m;
}

std::filesystem::path latest_checkpoint(const std::filesystem::path& run_dir) {
  std::ifstream is(run_dir / "latest");
  std::string name;
  if (!is || !(is >> name)) throw UserError("run directory " + run_dir.string() + " has no checkpoint");
  return run_dir / name;
}

}  // namespace protoscene::train
