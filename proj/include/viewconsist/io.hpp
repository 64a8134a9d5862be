#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewconsist/alignment.hpp"
#include "viewconsist/synthbench.hpp"
#include "viewconsist/trainer.hpp"

namespace viewconsist {

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr int kLatentSchemaVersion = 1;
inline constexpr int kLogSchemaVersion = 1;

// 3 x d configuration as a flat column-major list (x0 y0 z0 x1 ...).
nlohmann::json config_to_json(const KeypointConfig& c);
KeypointConfig config_from_json(const nlohmann::json& j, int keypoints);

nlohmann::json sample_to_json(const ViewSample& s, const std::string& domain);
ViewSample sample_from_json(const nlohmann::json& j);

// One JSON record per line.
void write_dataset(const std::filesystem::path& path, const std::vector<ViewSample>& samples,
                   const std::string& domain);
std::vector<ViewSample> read_dataset(const std::filesystem::path& path);

// Groups samples by object_id in order of first appearance.
std::vector<ViewSet> group_views(const std::vector<ViewSample>& samples);

void write_latents(const std::filesystem::path& path, const LatentSet& latents,
                   const std::vector<ViewSet>& targets);
LatentSet read_latents(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Writes the run log as JSON lines. Wall-clock durations go to a separate
// timing file so the main log is reproducible byte for byte.
class RunLogWriter : public TrainObserver {
 public:
  RunLogWriter(const std::filesystem::path& log_path, const std::filesystem::path& timing_path);

  void on_epoch(const EpochRecord& rec) override;
  void on_latent_update(const LatentUpdateRecord& rec) override;

 private:
  std::ofstream log_;
  std::ofstream timing_;
};

struct LoggedLatentUpdate {
  int epoch = 0;
  std::string kind;
  double objective_before = 0.0;
  double objective_after = 0.0;
};

// Latent-update records from a run log.
std::vector<LoggedLatentUpdate> read_latent_updates(const std::filesystem::path& log_path);

}  // namespace viewconsist
