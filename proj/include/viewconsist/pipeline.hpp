#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewconsist/metrics.hpp"
#include "viewconsist/synthbench.hpp"
#include "viewconsist/trainer.hpp"

namespace viewconsist {

struct BenchConfig {
  ShapeTemplate tmpl = ShapeTemplate::chair();
  int source_models = 200;
  int source_views = 1;
  int source_test_models = 50;
  int target_models = 40;
  int target_views = 12;
  int target_test_models = 20;
  DomainShiftConfig shift = default_shift();

  static DomainShiftConfig default_shift();
  void validate() const;
};

struct ExperimentConfig {
  BenchConfig bench;
  std::vector<int> hidden = {64};
  TrainConfig train;

  void validate() const;
  Architecture architecture() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

// Dataset splits written by generate_benchmark.
namespace splits {
inline constexpr const char* kSource = "source";
inline constexpr const char* kSourceTest = "source_test";
inline constexpr const char* kTarget = "target";
inline constexpr const char* kTargetTest = "target_test";
}  // namespace splits

std::filesystem::path split_path(const std::filesystem::path& data_dir, const std::string& split);

// Writes the four splits plus manifest.json into out_dir.
void generate_benchmark(const ExperimentConfig& cfg, std::uint64_t seed,
                        const std::filesystem::path& out_dir);

struct RunPaths {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  std::filesystem::path timing;
  std::filesystem::path latents;  // adapt only
};

// Pretrains on <data_dir>/source.jsonl; writes pretrained.json and logs.
RunPaths run_pretrain(const std::filesystem::path& data_dir, const ExperimentConfig& cfg,
                      const std::filesystem::path& out_dir);

// Adapts a pretrained checkpoint on the target split; writes adapted.json,
// latents.jsonl and logs.
RunPaths run_adapt(const std::filesystem::path& data_dir, const std::filesystem::path& init_checkpoint,
                   const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct EvalReport {
  std::string split;
  std::string checkpoint;
  std::uint64_t seed = 0;
  std::vector<SampleEval> samples;
  double mean_ae = 0.0;
  double mean_pae = 0.0;
  PckCurve pck;
  nlohmann::json config;
};

EvalReport evaluate(const PredictorParams& params, const std::vector<ViewSample>& samples,
                    const std::string& split);

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);
std::string pck_csv(const PckCurve& curve);

// Evaluates a checkpoint on one split; writes eval.json and pck.csv
// into out_dir.
EvalReport run_eval(const std::filesystem::path& data_dir, const std::filesystem::path& checkpoint,
                    const std::string& split, const ExperimentConfig& cfg,
                    const std::filesystem::path& out_dir);

struct NamedReport {
  std::string name;
  EvalReport report;
};

// Before/after table: one row per split, columns <name>-AE ... <name>-PAE.
std::string format_report_table(const std::vector<NamedReport>& runs);
std::string format_report_csv(const std::vector<NamedReport>& runs);

}  // namespace viewconsist
