#include "viewconsist/pipeline.hpp"

#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "viewconsist/errors.hpp"
#include "viewconsist/io.hpp"

namespace viewconsist {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestFormat = "viewconsist.manifest";
constexpr int kManifestVersion = 1;

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t split) { return seed * 4 + split; }

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
  if (!j.is_object()) throw InvalidInput(std::string(where) + " must be a JSON object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw InvalidInput("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json sigma_to_json(SigmaConvention s) {
  return s == SigmaConvention::kVarianceIsMeanDistance ? "variance" : "stddev";
}

SigmaConvention sigma_from_json(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "variance") return SigmaConvention::kVarianceIsMeanDistance;
  if (s == "stddev") return SigmaConvention::kSigmaIsMeanDistance;
  throw InvalidInput("sigma_convention must be 'variance' or 'stddev'");
}

std::string format_fixed(double v, int precision = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

DomainShiftConfig BenchConfig::default_shift() {
  DomainShiftConfig s;
  s.noise_std = 0.01;
  s.dropout_rate = 0.05;
  s.clutter_count = 4;
  s.scale_jitter = 0.1;
  return s;
}

void BenchConfig::validate() const {
  tmpl.validate();
  shift.validate();
  if (source_models < 1 || source_views < 1 || source_test_models < 1 || target_models < 1 ||
      target_views < 1 || target_test_models < 1) {
    throw InvalidInput("benchmark split sizes must be positive");
  }
}

void ExperimentConfig::validate() const {
  bench.validate();
  train.validate();
  for (int h : hidden) {
    if (h < 1) throw InvalidInput("hidden layer widths must be positive");
  }
}

Architecture ExperimentConfig::architecture() const {
  return Architecture{bench.tmpl.input_dim(), hidden, bench.tmpl.keypoints()};
}

json to_json(const ExperimentConfig& cfg) {
  const auto& b = cfg.bench;
  const auto& t = cfg.train;
  json j;
  j["bench"] = {
      {"template", b.tmpl.name},
      {"surface_points", b.tmpl.surface_points},
      {"source_subtype_weights", b.tmpl.source.subtype_weights},
      {"target_subtype_weights", b.tmpl.target.subtype_weights},
      {"source_models", b.source_models},
      {"source_views", b.source_views},
      {"source_test_models", b.source_test_models},
      {"target_models", b.target_models},
      {"target_views", b.target_views},
      {"target_test_models", b.target_test_models},
      {"shift",
       {{"noise_std", b.shift.noise_std},
        {"dropout_rate", b.shift.dropout_rate},
        {"clutter_count", b.shift.clutter_count},
        {"scale_jitter", b.shift.scale_jitter}}},
  };
  j["model"] = {{"hidden", cfg.hidden}};
  j["train"] = {
      {"lambda", t.lambda},
      {"mu", t.mu},
      {"latent_update_period_epochs", t.latent_update_period_epochs},
      {"pretrain_epochs", t.pretrain_epochs},
      {"adapt_epochs", t.adapt_epochs},
      {"ablation", to_string(t.ablation)},
      {"seed", t.seed},
      {"sigma_convention", sigma_to_json(t.sigma)},
      {"sgd",
       {{"learning_rate", t.sgd.learning_rate},
        {"momentum", t.sgd.momentum},
        {"weight_decay", t.sgd.weight_decay},
        {"batch_size", t.sgd.batch_size},
        {"lr_drop_epoch", t.sgd.lr_drop_epoch},
        {"lr_drop_factor", t.sgd.lr_drop_factor}}},
  };
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    reject_unknown(j, {"bench", "model", "train"}, "config");
    if (j.contains("bench")) {
      const json& b = j.at("bench");
      reject_unknown(b,
                     {"template", "surface_points", "source_subtype_weights", "target_subtype_weights",
                      "source_models", "source_views", "source_test_models", "target_models",
                      "target_views", "target_test_models", "shift"},
                     "bench");
      if (b.contains("template") && b.at("template").get<std::string>() != "chair") {
        throw InvalidInput("only the 'chair' template is available");
      }
      read_opt(b, "surface_points", cfg.bench.tmpl.surface_points);
      read_opt(b, "source_subtype_weights", cfg.bench.tmpl.source.subtype_weights);
      read_opt(b, "target_subtype_weights", cfg.bench.tmpl.target.subtype_weights);
      read_opt(b, "source_models", cfg.bench.source_models);
      read_opt(b, "source_views", cfg.bench.source_views);
      read_opt(b, "source_test_models", cfg.bench.source_test_models);
      read_opt(b, "target_models", cfg.bench.target_models);
      read_opt(b, "target_views", cfg.bench.target_views);
      read_opt(b, "target_test_models", cfg.bench.target_test_models);
      if (b.contains("shift")) {
        const json& s = b.at("shift");
        reject_unknown(s, {"noise_std", "dropout_rate", "clutter_count", "scale_jitter"}, "bench.shift");
        read_opt(s, "noise_std", cfg.bench.shift.noise_std);
        read_opt(s, "dropout_rate", cfg.bench.shift.dropout_rate);
        read_opt(s, "clutter_count", cfg.bench.shift.clutter_count);
        read_opt(s, "scale_jitter", cfg.bench.shift.scale_jitter);
      }
    }
    if (j.contains("model")) {
      reject_unknown(j.at("model"), {"hidden"}, "model");
      read_opt(j.at("model"), "hidden", cfg.hidden);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      reject_unknown(t,
                     {"lambda", "mu", "latent_update_period_epochs", "pretrain_epochs", "adapt_epochs",
                      "ablation", "seed", "sigma_convention", "sgd"},
                     "train");
      read_opt(t, "lambda", cfg.train.lambda);
      read_opt(t, "mu", cfg.train.mu);
      read_opt(t, "latent_update_period_epochs", cfg.train.latent_update_period_epochs);
      read_opt(t, "pretrain_epochs", cfg.train.pretrain_epochs);
      read_opt(t, "adapt_epochs", cfg.train.adapt_epochs);
      read_opt(t, "seed", cfg.train.seed);
      if (t.contains("ablation")) cfg.train.ablation = parse_ablation(t.at("ablation").get<std::string>());
      if (t.contains("sigma_convention")) cfg.train.sigma = sigma_from_json(t.at("sigma_convention"));
      if (t.contains("sgd")) {
        const json& s = t.at("sgd");
        reject_unknown(s,
                       {"learning_rate", "momentum", "weight_decay", "batch_size", "lr_drop_epoch",
                        "lr_drop_factor"},
                       "train.sgd");
        read_opt(s, "learning_rate", cfg.train.sgd.learning_rate);
        read_opt(s, "momentum", cfg.train.sgd.momentum);
        read_opt(s, "weight_decay", cfg.train.sgd.weight_decay);
        read_opt(s, "batch_size", cfg.train.sgd.batch_size);
        read_opt(s, "lr_drop_epoch", cfg.train.sgd.lr_drop_epoch);
        read_opt(s, "lr_drop_factor", cfg.train.sgd.lr_drop_factor);
      }
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("invalid config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

fs::path split_path(const fs::path& data_dir, const std::string& split) {
  return data_dir / (split + ".jsonl");
}

void generate_benchmark(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  const BenchConfig& b = cfg.bench;

  write_dataset(split_path(out_dir, splits::kSource),
                generate_source(b.tmpl, b.source_models, b.source_views, split_seed(seed, 0)), "source");
  write_dataset(split_path(out_dir, splits::kSourceTest),
                generate_source(b.tmpl, b.source_test_models, b.source_views, split_seed(seed, 1)),
                "source");
  write_dataset(split_path(out_dir, splits::kTarget),
                flatten(generate_target(b.tmpl, b.target_models, b.target_views, b.shift, split_seed(seed, 2))),
                "target");
  write_dataset(split_path(out_dir, splits::kTargetTest),
                flatten(generate_target(b.tmpl, b.target_test_models, b.target_views, b.shift,
                                        split_seed(seed, 3))),
                "target");

  json manifest;
  manifest["format"] = kManifestFormat;
  manifest["version"] = kManifestVersion;
  manifest["template"] = b.tmpl.name;
  manifest["seed"] = seed;
  manifest["config"] = to_json(cfg)["bench"];
  manifest["files"] = {{splits::kSource, "source.jsonl"},
                       {splits::kSourceTest, "source_test.jsonl"},
                       {splits::kTarget, "target.jsonl"},
                       {splits::kTargetTest, "target_test.jsonl"}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

RunPaths run_pretrain(const fs::path& data_dir, const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  const auto source = read_dataset(split_path(data_dir, splits::kSource));
  RunPaths paths{out_dir / "pretrained.json", out_dir / "pretrain_log.jsonl",
                 out_dir / "pretrain_timing.jsonl", {}};
  RunLogWriter log(paths.log, paths.timing);
  const PredictorParams params = pretrain(cfg.architecture(), source, cfg.train, &log);
  save_predictor(params, paths.checkpoint);
  return paths;
}

RunPaths run_adapt(const fs::path& data_dir, const fs::path& init_checkpoint,
                   const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const TrainConfig& train = cfg.train;
  if (train.effective_lambda() == 0.0 && train.effective_mu() == 0.0) {
    throw InvalidInput("degenerate configuration: lambda = mu = 0 gives no adaptation signal");
  }
  fs::create_directories(out_dir);
  const auto source = read_dataset(split_path(data_dir, splits::kSource));
  const auto targets =
      regroup_for_ablation(group_views(read_dataset(split_path(data_dir, splits::kTarget))), train.ablation);

  TrainState state = make_state(cfg.architecture(), train);
  state.params = load_predictor(init_checkpoint);
  if (!(state.params.arch == cfg.architecture())) {
    throw InvalidInput("checkpoint architecture does not match the configuration");
  }
  initialize_latents(state, source, targets, train);
  write_latents(out_dir / "latents_init.jsonl", state.latents, targets);

  RunPaths paths{out_dir / "adapted.json", out_dir / "adapt_log.jsonl", out_dir / "adapt_timing.jsonl",
                 out_dir / "latents.jsonl"};
  RunLogWriter log(paths.log, paths.timing);
  adapt(state, source, targets, train, &log);
  save_predictor(state.params, paths.checkpoint);
  write_latents(paths.latents, state.latents, targets);
  return paths;
}

EvalReport evaluate(const PredictorParams& params, const std::vector<ViewSample>& samples,
                    const std::string& split) {
  if (samples.empty()) throw InvalidInput("evaluate: no samples");
  EvalReport r;
  r.split = split;
  for (const auto& s : samples) {
    r.samples.push_back(
        evaluate_sample(forward(params, s.input), s.gt_keypoints, s.diagonal, s.object_id, s.view_id));
    r.mean_ae += r.samples.back().ae;
    r.mean_pae += r.samples.back().pae;
  }
  r.mean_ae /= static_cast<double>(samples.size());
  r.mean_pae /= static_cast<double>(samples.size());
  r.pck = pck_curve(r.samples, default_pck_thresholds());
  return r;
}

json to_json(const EvalReport& r) {
  json j;
  j["schema"] = kReportSchemaVersion;
  j["split"] = r.split;
  j["checkpoint"] = r.checkpoint;
  j["seed"] = r.seed;
  j["mean_ae"] = r.mean_ae;
  j["mean_pae"] = r.mean_pae;
  json pck = json::array();
  for (const auto& [t, f] : r.pck) pck.push_back({{"threshold_percent", t}, {"fraction", f}});
  j["pck"] = std::move(pck);
  json samples = json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"object_id", s.object_id},
                       {"view_id", s.view_id},
                       {"ae", s.ae},
                       {"pae", s.pae},
                       {"keypoint_errors", s.keypoint_errors}});
  }
  j["samples"] = std::move(samples);
  j["config"] = r.config;
  return j;
}

EvalReport eval_report_from_json(const json& j) {
  try {
    if (j.at("schema").get<int>() != kReportSchemaVersion) {
      throw InvalidInput("unsupported eval report schema version");
    }
    EvalReport r;
    r.split = j.at("split").get<std::string>();
    r.checkpoint = j.at("checkpoint").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mean_ae = j.at("mean_ae").get<double>();
    r.mean_pae = j.at("mean_pae").get<double>();
    for (const auto& p : j.at("pck")) {
      r.pck.emplace_back(p.at("threshold_percent").get<double>(), p.at("fraction").get<double>());
    }
    for (const auto& s : j.at("samples")) {
      SampleEval e;
      e.object_id = s.at("object_id").get<int>();
      e.view_id = s.at("view_id").get<int>();
      e.ae = s.at("ae").get<double>();
      e.pae = s.at("pae").get<double>();
      e.keypoint_errors = s.at("keypoint_errors").get<std::vector<double>>();
      r.samples.push_back(std::move(e));
    }
    r.config = j.value("config", json::object());
    return r;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed eval report: ") + e.what());
  }
}

std::string pck_csv(const PckCurve& curve) {
  std::ostringstream os;
  os << "threshold_percent,fraction\n";
  for (const auto& [t, f] : curve) os << json(t).dump() << ',' << json(f).dump() << '\n';
  return os.str();
}

EvalReport run_eval(const fs::path& data_dir, const fs::path& checkpoint, const std::string& split,
                    const ExperimentConfig& cfg, const fs::path& out_dir) {
  const PredictorParams params = load_predictor(checkpoint);
  EvalReport r = evaluate(params, read_dataset(split_path(data_dir, split)), split);
  r.checkpoint = checkpoint.filename().string();
  r.seed = cfg.train.seed;
  r.config = to_json(cfg);
  fs::create_directories(out_dir);
  write_text(out_dir / "eval.json", to_json(r).dump(2) + "\n");
  write_text(out_dir / "pck.csv", pck_csv(r.pck));
  return r;
}

namespace {

struct ReportGrid {
  std::vector<std::string> names;
  std::vector<std::string> splits;
  std::map<std::pair<std::string, std::string>, const EvalReport*> cells;
};

ReportGrid make_grid(const std::vector<NamedReport>& runs) {
  if (runs.empty()) throw InvalidInput("report: no runs given");
  ReportGrid g;
  for (const auto& run : runs) {
    if (std::find(g.names.begin(), g.names.end(), run.name) == g.names.end()) g.names.push_back(run.name);
    if (std::find(g.splits.begin(), g.splits.end(), run.report.split) == g.splits.end()) {
      g.splits.push_back(run.report.split);
    }
    if (!g.cells.emplace(std::make_pair(run.report.split, run.name), &run.report).second) {
      throw InvalidInput("report: duplicate run '" + run.name + "' for split " + run.report.split);
    }
  }
  return g;
}

std::string cell(const ReportGrid& g, const std::string& split, const std::string& name, bool pae) {
  auto it = g.cells.find({split, name});
  if (it == g.cells.end()) return "-";
  return format_fixed(pae ? it->second->mean_pae : it->second->mean_ae);
}

}  // namespace

std::string format_report_table(const std::vector<NamedReport>& runs) {
  const ReportGrid g = make_grid(runs);
  std::vector<std::string> header{"Target-Metric"};
  for (const auto& n : g.names) header.push_back(n + "-AE");
  for (const auto& n : g.names) header.push_back(n + "-PAE");

  std::vector<std::vector<std::string>> rows{header};
  for (const auto& split : g.splits) {
    std::vector<std::string> row{split};
    for (const auto& n : g.names) row.push_back(cell(g, split, n, false));
    for (const auto& n : g.names) row.push_back(cell(g, split, n, true));
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c) os << "  ";
      os << (c == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[c])) << rows[r][c];
    }
    os << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return os.str();
}

std::string format_report_csv(const std::vector<NamedReport>& runs) {
  const ReportGrid g = make_grid(runs);
  std::ostringstream os;
  os << "target_metric";
  for (const auto& n : g.names) os << ',' << n << "-AE";
  for (const auto& n : g.names) os << ',' << n << "-PAE";
  os << '\n';
  for (const auto& split : g.splits) {
    os << split;
    for (const auto& n : g.names) os << ',' << cell(g, split, n, false);
    for (const auto& n : g.names) os << ',' << cell(g, split, n, true);
    os << '\n';
  }
  return os.str();
}

}  // namespace viewconsist
