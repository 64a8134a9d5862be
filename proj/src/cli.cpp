#include "viewconsist/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "viewconsist/errors.hpp"
#include "viewconsist/io.hpp"
#include "viewconsist/pipeline.hpp"

namespace viewconsist {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--seed", c.seed, "Random seed (overrides VIEWCONSIST_SEED)");
  cmd->add_option("--config", c.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  auto* out = cmd->add_option("--out", c.out_dir, "Output directory");
  if (out_required) out->required();
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("VIEWCONSIST_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw InvalidInput(std::string("VIEWCONSIST_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text(c.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput("config " + c.config_path + " is not valid JSON: " + e.what());
    }
    cfg = experiment_config_from_json(j);
  }
  cfg.train.seed = resolve_seed(c.seed);
  return cfg;
}

NamedReport parse_run(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw InvalidInput("--run expects NAME=PATH, got '" + spec + "'");
  }
  fs::path path = spec.substr(eq + 1);
  if (fs::is_directory(path)) path /= "eval.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("report " + path.string() + " is not valid JSON: " + e.what());
  }
  return NamedReport{spec.substr(0, eq), eval_report_from_json(j)};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"View-consistent keypoint domain adaptation", "viewconsist"};
  app.require_subcommand(1);

  Common gen_c;
  auto* gen = app.add_subcommand("gen", "Write the synthetic benchmark datasets");
  add_common(gen, gen_c);

  Common pre_c;
  std::string pre_data;
  auto* pre = app.add_subcommand("pretrain", "Train on labeled source data");
  add_common(pre, pre_c);
  pre->add_option("--data", pre_data, "Benchmark directory written by gen")->required();

  Common ad_c;
  std::string ad_data, ad_init, ad_ablation = "full";
  std::optional<double> lambda, mu;
  std::optional<int> period;
  auto* ad = app.add_subcommand("adapt", "Adapt a pretrained predictor to the target domain");
  add_common(ad, ad_c);
  ad->add_option("--data", ad_data, "Benchmark directory written by gen")->required();
  ad->add_option("--init", ad_init, "Pretrained checkpoint")->required()->check(CLI::ExistingFile);
  ad->add_option("--ablation", ad_ablation, "full|drop-view|drop-align|reinit")
      ->check(CLI::IsMember({"full", "drop-view", "drop-align", "reinit"}));
  ad->add_option("--lambda", lambda, "View-consistency weight");
  ad->add_option("--mu", mu, "Geometric-alignment weight");
  ad->add_option("--period", period, "Epochs between latent updates");

  Common ev_c;
  std::string ev_data, ev_ckpt, ev_split = splits::kTargetTest;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  add_common(ev, ev_c);
  ev->add_option("--data", ev_data, "Benchmark directory written by gen")->required();
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint to evaluate")->required()->check(CLI::ExistingFile);
  ev->add_option("--split", ev_split, "Split to evaluate")
      ->check(CLI::IsMember({splits::kSource, splits::kSourceTest, splits::kTarget, splits::kTargetTest}));

  std::vector<std::string> runs;
  std::string rep_out;
  auto* rep = app.add_subcommand("report", "Tabulate eval reports side by side");
  rep->add_option("--run", runs, "NAME=PATH to eval.json (or its directory); repeatable")->required();
  rep->add_option("--out", rep_out, "Also write report.txt and report.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) {
      const ExperimentConfig cfg = load_config(gen_c);
      generate_benchmark(cfg, cfg.train.seed, gen_c.out_dir);
      out << "wrote benchmark to " << gen_c.out_dir << "\n";
    } else if (pre->parsed()) {
      const ExperimentConfig cfg = load_config(pre_c);
      const RunPaths p = run_pretrain(pre_data, cfg, pre_c.out_dir);
      out << "wrote " << p.checkpoint.string() << "\n";
    } else if (ad->parsed()) {
      ExperimentConfig cfg = load_config(ad_c);
      if (lambda) cfg.train.lambda = *lambda;
      if (mu) cfg.train.mu = *mu;
      if (period) cfg.train.latent_update_period_epochs = *period;
      cfg.train.ablation = parse_ablation(ad_ablation);
      cfg.validate();
      const RunPaths p = run_adapt(ad_data, ad_init, cfg, ad_c.out_dir);
      out << "wrote " << p.checkpoint.string() << "\n";
    } else if (ev->parsed()) {
      const ExperimentConfig cfg = load_config(ev_c);
      const EvalReport r = run_eval(ev_data, ev_ckpt, ev_split, cfg, ev_c.out_dir);
      out << "split " << r.split << ": AE " << r.mean_ae << "  PAE " << r.mean_pae << " (" << r.samples.size()
          << " samples)\n";
    } else if (rep->parsed()) {
      std::vector<NamedReport> named;
      for (const auto& r : runs) named.push_back(parse_run(r));
      const std::string table = format_report_table(named);
      out << table;
      if (!rep_out.empty()) {
        fs::create_directories(rep_out);
        write_text(fs::path(rep_out) / "report.txt", table);
        write_text(fs::path(rep_out) / "report.csv", format_report_csv(named));
      }
    }
  } catch (const InvalidInput& e) {
    err << "error: invalid configuration: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace viewconsist
