// SPDX-License-Identifier: Apache-2.0

#include "protoscene/training/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>
#include <vector>

#include "protoscene/errors.hpp"

namespace protoscene::train {

namespace {

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
std::string fmt(bool v) { return v ? "true" : "false"; }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }

void parse(std::string_view s, double& out) {
  const std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) throw FormatError("expected a number, got '" + tmp + "'");
}
void parse(std::string_view s, int& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw FormatError("expected an integer, got '" + std::string(s) + "'");
  }
}
void parse(std::string_view s, std::uint64_t& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw FormatError("expected a non-negative integer, got '" + std::string(s) + "'");
  }
}
void parse(std::string_view s, bool& out) {
  if (s == "true") {
    out = true;
  } else if (s == "false") {
    out = false;
  } else {
    throw FormatError("expected true or false, got '" + std::string(s) + "'");
  }
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, std::string_view)> set;
};

template <class T>
Field field(const char* section, const char* key, T TrainConfig::*member) {
  return {section, key, [member](const TrainConfig& c) { return fmt(c.*member); },
          [member](TrainConfig& c, std::string_view v) { parse(v, c.*member); }};
}

template <class S, class T>
Field field(const char* section, const char* key, S TrainConfig::*sub, T S::*member) {
  return {section, key, [sub, member](const TrainConfig& c) { return fmt(c.*sub.*member); },
          [sub, member](TrainConfig& c, std::string_view v) { parse(v, c.*sub.*member); }};
}

const std::vector<Field>& fields() {
  using M = model::ModelConfig;
  using L = loss::LossWeights;
  static const std::vector<Field> f = {
      field("train", "patch_size_m", &TrainConfig::patch_size_m),
      field("train", "max_points_per_patch", &TrainConfig::max_points_per_patch),
      field("train", "batch_size", &TrainConfig::batch_size),
      field("train", "batches_per_epoch", &TrainConfig::batches_per_epoch),
      field("train", "base_lr", &TrainConfig::base_lr),
      field("train", "warmup_batches", &TrainConfig::warmup_batches),
      field("train", "weight_decay", &TrainConfig::weight_decay),
      field("train", "first_stage", &TrainConfig::first_stage),
      field("train", "last_stage", &TrainConfig::last_stage),
      field("train", "seed", &TrainConfig::seed),
      field("train", "deterministic", &TrainConfig::deterministic),
      field("convergence", "patience_epochs", &TrainConfig::convergence, &Convergence::patience_epochs),
      field("convergence", "min_rel_improvement", &TrainConfig::convergence, &Convergence::min_rel_improvement),
      field("convergence", "max_epochs_per_stage", &TrainConfig::convergence, &Convergence::max_epochs_per_stage),
      field("loss_weights", "lambda_act", &TrainConfig::loss_weights, &L::lambda_act),
      field("loss_weights", "lambda_slot", &TrainConfig::loss_weights, &L::lambda_slot),
      field("loss_weights", "lambda_proto", &TrainConfig::loss_weights, &L::lambda_proto),
      field("loss_weights", "epsilon_s", &TrainConfig::loss_weights, &L::epsilon_s),
      field("loss_weights", "epsilon_k", &TrainConfig::loss_weights, &L::epsilon_k),
      field("loss_weights", "lambda_translate", &TrainConfig::loss_weights, &L::lambda_translate),
      {"loss_weights", "coverage",
       [](const TrainConfig& c) { return std::string(loss::coverage_mode_name(c.coverage)); },
       [](TrainConfig& c, std::string_view v) {
         try {
           c.coverage = loss::parse_coverage_mode(v);
         } catch (const ParameterError& e) {
           throw FormatError(e.what());
         }
       }},
      field("model", "slots", &TrainConfig::model, &M::slots),
      field("model", "prototypes", &TrainConfig::model, &M::prototypes),
      field("model", "points_per_prototype", &TrainConfig::model, &M::points_per_prototype),
      field("model", "grid_resolution", &TrainConfig::model, &M::grid_resolution),
      field("model", "voxel_size_m", &TrainConfig::model, &M::voxel_size_m),
      field("model", "point_width", &TrainConfig::model, &M::point_width),
      field("model", "scene_width", &TrainConfig::model, &M::scene_width),
      field("model", "slot_width", &TrainConfig::model, &M::slot_width),
      {"model", "transform_mode",
       [](const TrainConfig& c) {
         return std::string(c.model.transform_mode == model::TransformMode::kFullAffine ? "full_affine"
                                                                                       : "constrained");
       },
       [](TrainConfig& c, std::string_view v) {
         if (v == "constrained") {
           c.model.transform_mode = model::TransformMode::kConstrained;
         } else if (v == "full_affine") {
           c.model.transform_mode = model::TransformMode::kFullAffine;
         } else {
           throw FormatError("transform_mode must be constrained or full_affine");
         }
       }},
      field("model", "use_intensity", &TrainConfig::model, &M::use_intensity),
      field("model", "scale_min", &TrainConfig::model, &M::scale_min),
      field("model", "scale_max", &TrainConfig::model, &M::scale_max),
      field("model", "max_tilt", &TrainConfig::model, &M::max_tilt),
      field("model", "init_half_extent_min", &TrainConfig::model, &M::init_half_extent_min),
      field("model", "init_half_extent_max", &TrainConfig::model, &M::init_half_extent_max),
      field("model", "learn_intensities", &TrainConfig::model, &M::learn_intensities),
      field("model", "learn_scales", &TrainConfig::model, &M::learn_scales),
      field("model", "learn_prototype_points", &TrainConfig::model, &M::learn_prototype_points),
      field("model", "learn_aniso_scale", &TrainConfig::model, &M::learn_aniso_scale),
      field("evaluation", "selection_threshold", &TrainConfig::evaluation, &EvalConfig::selection_threshold),
      field("evaluation", "selection_relative_to_current", &TrainConfig::evaluation,
            &EvalConfig::selection_relative_to_current),
  };
  return f;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  loss_weights.validate();
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ParameterError(std::string("train config: ") + what);
  };
  require(patch_size_m >= 0.0, "patch_size_m must be >= 0");
  require(max_points_per_patch >= static_cast<int>(32), "max_points_per_patch must be >= 32");
  require(batch_size >= 1 && batches_per_epoch >= 1, "batch counts must be positive");
  require(base_lr > 0.0, "base_lr must be positive");
  require(warmup_batches >= 0, "warmup_batches must be >= 0");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(first_stage >= 1 && last_stage <= 5 && first_stage <= last_stage, "stages must satisfy 1 <= first <= last <= 5");
  require(convergence.patience_epochs >= 1, "patience_epochs must be >= 1");
  require(convergence.min_rel_improvement >= 0.0, "min_rel_improvement must be >= 0");
  require(convergence.max_epochs_per_stage >= 1, "max_epochs_per_stage must be >= 1");
  require(evaluation.selection_threshold >= 0.0, "selection_threshold must be >= 0");
}

std::string serialize_config(const TrainConfig& c) {
  std::ostringstream os;
  std::string section;
  for (const Field& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) os << "\n";
      section = f.section;
      os << "[" << section << "]\n";
    }
    os << f.key << " = " << f.get(c) << "\n";
  }
  return os.str();
}

TrainConfig parse_config(std::string_view text, const TrainConfig& base) {
  TrainConfig c = base;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError(where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      bool known = false;
      for (const Field& f : fields()) known = known || section == f.section;
      if (!known) throw FormatError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError(where + "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const Field* match = nullptr;
    for (const Field& f : fields()) {
      if (section == f.section && key == f.key) match = &f;
    }
    if (!match) {
      throw FormatError(where + "unknown key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]"));
    }
    try {
      match->set(c, value);
    } catch (const FormatError& e) {
      throw FormatError(where + key + ": " + e.what());
    }
  }
  return c;
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
  for (const Field& f : fields()) {
    if (f.get(a) != f.get(b)) return false;
  }
  return true;
}

}  // namespace protoscene::train
