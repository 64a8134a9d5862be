#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "viewconsist/alignment.hpp"
#include "viewconsist/predictor.hpp"
#include "viewconsist/synthbench.hpp"

namespace viewconsist {

enum class Ablation {
  kFull,
  kDropView,       // no cross-view fusion: every view gets its own latent
  kDropAlign,      // mu = 0
  kReinitLatents,  // latents re-selected by density instead of the MM update
};

std::string to_string(Ablation a);
// Accepts "full", "drop_view"/"drop-view", "drop_align"/"drop-align",
// "reinit_latents"/"reinit".
Ablation parse_ablation(const std::string& text);

struct TrainConfig {
  double lambda = 1.0;
  double mu = 0.1;
  int latent_update_period_epochs = 5;
  int pretrain_epochs = 200;
  int adapt_epochs = 150;
  Ablation ablation = Ablation::kFull;
  std::uint64_t seed = 0;
  SgdConfig sgd;
  SigmaConvention sigma = SigmaConvention::kVarianceIsMeanDistance;

  void validate() const;
  // Weights of the view and alignment terms after applying the ablation.
  double effective_lambda() const { return lambda; }
  double effective_mu() const { return ablation == Ablation::kDropAlign ? 0.0 : mu; }
};

struct TrainState {
  PredictorParams params;
  LatentSet latents;
  bool latents_initialized = false;
  ParamSet velocity;
  int pretrain_epochs_done = 0;
  int adapt_epochs_done = 0;
  std::mt19937_64 rng;
};

struct EpochRecord {
  std::string phase;  // "pretrain" or "adapt"
  int epoch = 0;
  double learning_rate = 0.0;
  double f_labeled = 0.0;
  std::optional<double> f_view;
  std::optional<double> f_align;
  double total = 0.0;
  double wall_time_s = 0.0;
};

struct LatentUpdateRecord {
  int epoch = 0;
  std::string kind;  // "update" or "reinit"
  double objective_before = 0.0;  // latent-step objective, fresh assignments
  double objective_after = 0.0;
  double total_before = 0.0;
  double total_after = 0.0;
};

class TrainObserver {
 public:
  virtual ~TrainObserver() = default;
  virtual void on_epoch(const EpochRecord&) {}
  virtual void on_latent_update(const LatentUpdateRecord&) {}
};

// Targets as the trainer sees them: inputs grouped by object. Ground truth
// stays behind in ViewSample and is never read here.
std::vector<ViewSet> regroup_for_ablation(const std::vector<ViewSet>& targets, Ablation ablation);

LabelBank label_bank(const std::vector<ViewSample>& source);

PerObjectPredictions predict_all(const PredictorParams& params, const std::vector<ViewSet>& targets);

// (1/|source|) sum ||G(I) - Y(I)||_F^2
double labeled_loss(const PredictorParams& params, const std::vector<ViewSample>& source);

// (1/N) sum_i (1/|I_i|) sum_j r(G(I_ij), M_i)
double view_consistency_loss(const PredictorParams& params, const std::vector<ViewSet>& targets,
                             const LatentSet& latents);

struct LossBreakdown {
  double f_labeled = 0.0;
  double f_view = 0.0;
  double f_align = 0.0;
  double total = 0.0;
};

// f_labeled + lambda f_view + mu f_align with the ablation's weights. Terms
// with zero weight are reported as 0 and not evaluated.
LossBreakdown total_loss(const PredictorParams& params, const std::vector<ViewSample>& source,
                         const std::vector<ViewSet>& targets, const LatentSet& latents,
                         const TrainConfig& cfg);

// Fresh state: params initialized from cfg.seed, latents empty.
TrainState make_state(const Architecture& arch, const TrainConfig& cfg);

// Minibatch SGD on the labeled term for cfg.pretrain_epochs.
void pretrain(TrainState& state, const std::vector<ViewSample>& source, const TrainConfig& cfg,
              TrainObserver* observer = nullptr);

// Convenience wrapper returning only the parameters.
PredictorParams pretrain(const Architecture& arch, const std::vector<ViewSample>& source,
                         const TrainConfig& cfg, TrainObserver* observer = nullptr);

// Density-based latent selection from the current predictor.
void initialize_latents(TrainState& state, const std::vector<ViewSample>& source,
                        const std::vector<ViewSet>& targets, const TrainConfig& cfg);

// Sum over one target minibatch of lambda-weighted view-consistency
// gradients; exposed so the ablation algebra can be checked directly.
ParamSet target_batch_gradient(const PredictorParams& params, const std::vector<ViewSet>& targets,
                               const LatentSet& latents,
                               const std::vector<std::pair<std::size_t, std::size_t>>& batch,
                               double lambda, double scale);

// Alternates SGD epochs on theta with periodic latent updates. `targets` must
// already be regrouped for the ablation (see regroup_for_ablation).
void adapt(TrainState& state, const std::vector<ViewSample>& source,
           const std::vector<ViewSet>& targets, const TrainConfig& cfg,
           TrainObserver* observer = nullptr);

}  // namespace viewconsist
