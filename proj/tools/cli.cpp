// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "protoscene/errors.hpp"
#include "protoscene/evaluation/decompose.hpp"
#include "protoscene/evaluation/kmeans.hpp"
#include "protoscene/evaluation/segmentation.hpp"
#include "protoscene/evaluation/selection.hpp"
#include "protoscene/io/config_file.hpp"
#include "protoscene/io/export.hpp"
#include "protoscene/io/file_util.hpp"
#include "protoscene/io/report.hpp"
#include "protoscene/io/scene_io.hpp"
#include "protoscene/io/synth.hpp"
#include "protoscene/training/trainer.hpp"

namespace protoscene::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::string config;
};

struct Context {
  Globals g;
  std::ostream& out;
  std::ostream& err;
};

geom::PointCloud read_scene(const std::string& path, Context& c) {
  io::LoadReport rep;
  geom::PointCloud scene = io::load_scene(path, &rep);
  for (const auto& w : rep.warnings) c.err << "warning: " << path << ": " << w << "\n";
  if (scene.empty()) throw DomainError("scene " + path + " has no valid points");
  return scene;
}

void emit_json(const nlohmann::json& j, const std::string& out_path, Context& c) {
  const std::string text = j.dump(2) + "\n";
  if (!out_path.empty()) io::write_file_atomic(out_path, text);
  c.out << text;
}

struct RunArgs {
  std::string run;
  std::string checkpoint;
  std::string scene;
};

void add_run_args(CLI::App* sub, RunArgs& a) {
  sub->add_option("--run", a.run, "Run directory (uses its latest checkpoint)");
  sub->add_option("--checkpoint", a.checkpoint, "Checkpoint file");
  sub->add_option("--scene", a.scene, "Scene file (.ply or columnar text)")->required();
}

train::LoadedModel load_run(const RunArgs& a, Context& c) {
  if (a.run.empty() == a.checkpoint.empty()) throw UserError("give exactly one of --run and --checkpoint");
  train::LoadedModel m = train::load_model(a.checkpoint.empty() ? train::latest_checkpoint(a.run) : fs::path(a.checkpoint));
  if (!c.g.config.empty()) {
    // Only evaluation-time settings are taken from an override file.
    const train::TrainConfig o = io::load_config(c.g.config, m.config);
    m.config.evaluation = o.evaluation;
    m.config.coverage = o.coverage;
  }
  return m;
}

bool intensity_usable(const train::LoadedModel& m, const geom::PointCloud& scene) {
  return m.config.model.use_intensity && scene.intensity.has_value();
}

eval::SelectionOptions selection_options(const train::LoadedModel& m, const geom::PointCloud& scene) {
  eval::SelectionOptions o;
  o.patch_size_m = m.config.patch_size();
  o.use_intensity = intensity_usable(m, scene);
  o.threshold = m.config.evaluation.selection_threshold;
  o.relative_to_current = m.config.evaluation.selection_relative_to_current;
  o.coverage = m.config.coverage;
  return o;
}

std::vector<bool> live_mask(int prototypes, const eval::SelectionReport& sel) {
  std::vector<bool> live(static_cast<std::size_t>(prototypes), false);
  for (int k : sel.kept) live[static_cast<std::size_t>(k)] = true;
  return live;
}

/// Everything evaluate and decompose share.
struct Analysis {
  eval::Decomposition decomposition;
  std::optional<eval::PrototypeLabels> labels;
  std::vector<int> semantic;
  io::EvaluationReport report;
};

Analysis analyse(const train::LoadedModel& m, const geom::PointCloud& scene, bool select) {
  std::optional<eval::SelectionReport> sel;
  std::vector<bool> live;
  if (select) {
    sel = eval::select_prototypes(*m.network, m.stage(), scene, selection_options(m, scene));
    live = live_mask(m.config.model.prototypes, *sel);
  }
  eval::DecomposeOptions opts;
  opts.patch_size_m = m.config.patch_size();
  opts.use_intensity = intensity_usable(m, scene);
  opts.live = select ? &live : nullptr;

  Analysis a;
  a.decomposition = eval::decompose(*m.network, m.stage(), scene, opts);
  const bool labelled = scene.class_label.has_value() &&
                        std::any_of(scene.class_label->begin(), scene.class_label->end(), [](int l) { return l >= 0; });
  if (labelled) {
    a.labels = eval::label_prototypes(a.decomposition, scene);
    a.semantic = eval::semantic_segmentation(a.decomposition, *a.labels);
  } else {
    // Without ground truth the prototype id stands in for the class.
    eval::PrototypeLabels ids;
    ids.prototypes = a.decomposition.prototypes;
    ids.points_per_prototype = a.decomposition.points_per_prototype;
    for (int k = 0; k < ids.prototypes; ++k) ids.labels.insert(ids.labels.end(), ids.points_per_prototype, k);
    a.semantic = eval::semantic_segmentation(a.decomposition, ids);
  }
  a.report = io::build_report(a.decomposition, scene, m.state.stage, a.labels ? &*a.labels : nullptr,
                              labelled ? &a.semantic : nullptr);
  a.report.selection = sel;
  return a;
}

std::set<int> parse_id_list(const std::string& s, int limit) {
  std::set<int> ids;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    int v = -1;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || v < 0 || v >= limit) throw ParameterError("bad prototype id '" + tok + "'");
    ids.insert(v);
  }
  return ids;
}

// ---- subcommands ----------------------------------------------------------

int cmd_synth(const std::string& spec_path, const std::string& out, Context& c) {
  io::SynthSpec spec = spec_path.empty() ? io::default_spec() : io::parse_synth_spec(io::read_file(spec_path));
  if (c.g.seed) spec.seed = *c.g.seed;
  const io::SynthScene s = io::generate_synthetic(spec);
  io::save_scene(out, s.cloud, io::format_for(out));
  c.err << "synth: " << s.cloud.size() << " points, " << s.objects.size() << " objects -> " << out << "\n";
  return kOk;
}

int cmd_train(const std::string& scene_path, const std::string& out, const std::string& resume, Context& c) {
  const geom::PointCloud scene = read_scene(scene_path, c);
  std::unique_ptr<train::Trainer> trainer;
  if (!resume.empty()) {
    trainer = train::Trainer::resume(scene, resume, out);
  } else {
    train::TrainConfig cfg = c.g.config.empty() ? train::TrainConfig{} : io::load_config(c.g.config);
    if (c.g.seed) cfg.seed = *c.g.seed;
    if (c.g.deterministic) cfg.deterministic = true;
    if (cfg.model.use_intensity && !scene.intensity) {
      c.err << "warning: scene has no intensity; training on positions only\n";
      cfg.model.use_intensity = false;
    }
    trainer = std::make_unique<train::Trainer>(scene, cfg, out);
  }
  const int per_epoch = trainer->config().batches_per_epoch;
  trainer->on_step = [&](const train::StepReport& r) {
    if ((r.step + 1) % static_cast<std::uint64_t>(per_epoch) == 0) {
      c.err << "stage " << r.stage << " epoch " << r.epoch + 1 << " step " << r.step + 1 << " total " << r.loss.total
            << "\n";
    }
  };
  trainer->run();
  c.err << "train: finished at step " << trainer->state().global_step << "; checkpoints in " << out << "\n";
  return kOk;
}

int cmd_evaluate(const RunArgs& a, bool select, const std::string& out, Context& c) {
  const geom::PointCloud scene = read_scene(a.scene, c);
  const train::LoadedModel m = load_run(a, c);
  const Analysis an = analyse(m, scene, select);
  emit_json(io::to_json(an.report), out, c);
  return kOk;
}

int cmd_decompose(const RunArgs& a, bool select, const std::string& out, const std::string& instance_protos,
                  Context& c) {
  const geom::PointCloud scene = read_scene(a.scene, c);
  const train::LoadedModel m = load_run(a, c);
  const Analysis an = analyse(m, scene, select);
  std::set<int> targets;
  if (instance_protos.empty()) {
    for (int k = 0; k < m.config.model.prototypes; ++k) targets.insert(k);
  } else {
    targets = parse_id_list(instance_protos, m.config.model.prototypes);
  }
  const io::ExportBundle b =
      io::make_bundle(an.decomposition, scene, m.network->bank(), an.semantic,
                      eval::instance_segmentation(an.decomposition, targets), io::to_json(an.report));
  io::export_decomposition(b, out);
  io::save_bundle(fs::path(out) / "decomposition.json", b);
  c.err << "decompose: wrote";
  for (const char* f : io::kExportFiles) c.err << " " << f;
  c.err << " to " << out << "\n";
  return kOk;
}

int cmd_select(const RunArgs& a, const std::string& out, Context& c) {
  const geom::PointCloud scene = read_scene(a.scene, c);
  const train::LoadedModel m = load_run(a, c);
  const auto rep = eval::select_prototypes(*m.network, m.stage(), scene, selection_options(m, scene));
  emit_json(io::to_json(rep), out, c);
  return kOk;
}

int cmd_export(const std::string& bundle, const std::string& out, Context& c) {
  io::export_decomposition(io::load_bundle(bundle), out);
  c.err << "export: wrote " << std::size(io::kExportFiles) << " files to " << out << "\n";
  return kOk;
}

int cmd_kmeans(const std::string& scene_path, int k, const std::string& features, const std::string& out, Context& c) {
  const geom::PointCloud scene = read_scene(scene_path, c);
  eval::KMeansFeatures f{false, false};
  std::stringstream ss(features);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "intensity") f.intensity = true;
    else if (tok == "elevation") f.elevation = true;
    else throw ParameterError("unknown k-means feature '" + tok + "' (intensity, elevation)");
  }
  if (k <= 0) {
    if (!scene.class_label) throw DomainError("scene has no class labels");
    std::set<int> classes;
    for (int l : *scene.class_label) {
      if (l >= 0) classes.insert(l);
    }
    k = static_cast<int>(classes.size());
  }
  const auto r = eval::kmeans_baseline(scene, k, f, c.g.seed.value_or(0));
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cls, v] : r.iou.per_class) per_class[std::to_string(cls)] = v;
  emit_json({{"k", k}, {"miou", r.iou.miou}, {"per_class_iou", per_class}, {"cluster_class", r.cluster_class}}, out, c);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised decomposition of 3D point-cloud scenes into learned prototypes"};
  app.name(args.empty() ? "protoscene" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.fallthrough();

  Context c{{}, out, err};
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Random seed (overrides the config and spec seeds)");
  app.add_flag("--deterministic", c.g.deterministic, "Disable background batch prefetching");
  app.add_option("--config", c.g.config, "Run configuration file");

  std::string scene, out_path, spec, resume, bundle, instance_protos, features = "intensity,elevation";
  bool select = false;
  int k = 0;
  RunArgs ra;

  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic scene");
  synth->add_option("--spec", spec, "Scene spec file (default: cones and boxes on rough ground)");
  synth->add_option("--out", out_path, "Output scene file")->required();

  auto* trn = app.add_subcommand("train", "Train a model on one scene");
  trn->add_option("--scene", scene, "Scene file")->required();
  trn->add_option("--out", out_path, "Run directory")->required();
  trn->add_option("--resume", resume, "Continue from this checkpoint");

  auto* evl = app.add_subcommand("evaluate", "Evaluate a trained model; prints the JSON report");
  add_run_args(evl, ra);
  evl->add_flag("--select", select, "Run prototype selection first and report it");
  evl->add_option("--out", out_path, "Also write the report here");

  auto* dec = app.add_subcommand("decompose", "Decompose a scene and write the visualisation files");
  add_run_args(dec, ra);
  dec->add_option("--out", out_path, "Output directory")->required();
  dec->add_flag("--select", select, "Mask prototypes removed by selection");
  dec->add_option("--instance-prototypes", instance_protos, "Comma-separated prototype ids treated as objects");

  auto* sel = app.add_subcommand("select-prototypes", "Greedy prototype pruning");
  add_run_args(sel, ra);
  sel->add_option("--out", out_path, "Also write the report here");

  auto* exp = app.add_subcommand("export", "Rewrite the visualisation files from a saved decomposition");
  exp->add_option("--bundle", bundle, "decomposition.json written by decompose")->required();
  exp->add_option("--out", out_path, "Output directory")->required();

  auto* km = app.add_subcommand("baseline-kmeans", "k-means baseline on intensity and elevation");
  km->add_option("--scene", scene, "Labelled scene file")->required();
  km->add_option("--k", k, "Cluster count (default: number of ground-truth classes)");
  km->add_option("--features", features, "Comma-separated subset of intensity,elevation");
  km->add_option("--out", out_path, "Also write the result here");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUserError;
  }
  if (app.count("--seed")) c.g.seed = seed;

  try {
    if (*synth) return cmd_synth(spec, out_path, c);
    if (*trn) return cmd_train(scene, out_path, resume, c);
    if (*evl) return cmd_evaluate(ra, select, out_path, c);
    if (*dec) return cmd_decompose(ra, select, out_path, instance_protos, c);
    if (*sel) return cmd_select(ra, out_path, c);
    if (*exp) return cmd_export(bundle, out_path, c);
    if (*km) return cmd_kmeans(scene, k, features, out_path, c);
  } catch (const UserError& e) {
    err << "error: " << e.what() << "\n";
    return kUserError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace protoscene::cli
