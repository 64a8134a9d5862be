#include "viewconsist/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "viewconsist/errors.hpp"

namespace viewconsist {

namespace {

using Clock = std::chrono::steady_clock;
using TargetIndex = std::pair<std::size_t, std::size_t>;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
std::vector<std::vector<T>> split_batches(std::vector<T> items, int batch_size) {
  std::vector<std::vector<T>> batches;
  const auto b = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < items.size(); start += b) {
    const std::size_t end = std::min(items.size(), start + b);
    batches.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(start),
                         items.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

void require_source(const std::vector<ViewSample>& source) {
  if (source.empty()) throw InvalidInput("labeled source set is empty");
}

void require_targets(const std::vector<ViewSet>& targets) {
  if (targets.empty()) throw InvalidInput("target set is empty");
  for (const auto& t : targets) {
    if (t.views.empty()) throw InvalidInput("target object " + std::to_string(t.object_id) + " has no views");
  }
}

void accumulate_source(const PredictorParams& params, const std::vector<ViewSample>& source,
                       const std::vector<std::size_t>& batch, double weight, ParamSet& grads) {
  for (std::size_t idx : batch) {
    const KeypointConfig& label = source[idx].gt_keypoints;
    forward_backward_accumulate(
        params, source[idx].input,
        [&](const KeypointConfig& g) -> Eigen::Matrix3Xd { return 2.0 * (g.coords() - label.coords()); },
        weight, grads);
  }
}

}  // namespace

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kDropView: return "drop_view";
    case Ablation::kDropAlign: return "drop_align";
    case Ablation::kReinitLatents: return "reinit_latents";
  }
  return "full";
}

Ablation parse_ablation(const std::string& text) {
  if (text == "full") return Ablation::kFull;
  if (text == "drop_view" || text == "drop-view") return Ablation::kDropView;
  if (text == "drop_align" || text == "drop-align") return Ablation::kDropAlign;
  if (text == "reinit_latents" || text == "reinit-latents" || text == "reinit") {
    return Ablation::kReinitLatents;
  }
  throw InvalidInput("unknown ablation '" + text + "'");
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0) || !(mu >= 0.0) || !std::isfinite(lambda) || !std::isfinite(mu)) {
    throw InvalidInput("lambda and mu must be finite and nonnegative");
  }
  if (latent_update_period_epochs < 1) throw InvalidInput("latent update period must be >= 1");
  if (pretrain_epochs < 1) throw InvalidInput("pretrain_epochs must be >= 1");
  if (adapt_epochs < 1) throw InvalidInput("adapt_epochs must be >= 1");
  sgd.validate();
}

std::vector<ViewSet> regroup_for_ablation(const std::vector<ViewSet>& targets, Ablation ablation) {
  if (ablation != Ablation::kDropView) return targets;
  std::vector<ViewSet> out;
  int next_id = 0;
  for (const auto& t : targets) {
    for (const auto& v : t.views) {
      ViewSet single;
      single.object_id = next_id++;
      single.views.push_back(v);
      out.push_back(std::move(single));
    }
  }
  return out;
}

LabelBank label_bank(const std::vector<ViewSample>& source) {
  LabelBank bank;
  bank.labels.reserve(source.size());
  for (const auto& s : source) bank.labels.push_back(s.gt_keypoints);
  return bank;
}

PerObjectPredictions predict_all(const PredictorParams& params, const std::vector<ViewSet>& targets) {
  PerObjectPredictions out;
  out.reserve(targets.size());
  for (const auto& t : targets) {
    std::vector<KeypointConfig> views;
    views.reserve(t.views.size());
    for (const auto& v : t.views) views.push_back(forward(params, v.input));
    out.push_back(std::move(views));
  }
  return out;
}

double labeled_loss(const PredictorParams& params, const std::vector<ViewSample>& source) {
  require_source(source);
  double total = 0.0;
  for (const auto& s : source) {
    total += (forward(params, s.input).coords() - s.gt_keypoints.coords()).squaredNorm();
  }
  return total / static_cast<double>(source.size());
}

double view_consistency_loss(const PredictorParams& params, const std::vector<ViewSet>& targets,
                             const LatentSet& latents) {
  require_targets(targets);
  if (latents.latents.size() != targets.size()) {
    throw InvalidInput("one latent per target object required");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    double per_object = 0.0;
    for (const auto& v : targets[i].views) {
      per_object += pose_invariant_distance(forward(params, v.input), latents.latents[i]);
    }
    total += per_object / static_cast<double>(targets[i].views.size());
  }
  return total / static_cast<double>(targets.size());
}

LossBreakdown total_loss(const PredictorParams& params, const std::vector<ViewSample>& source,
                         const std::vector<ViewSet>& targets, const LatentSet& latents,
                         const TrainConfig& cfg) {
  LossBreakdown out;
  out.f_labeled = labeled_loss(params, source);
  const double lambda = cfg.effective_lambda();
  const double mu = cfg.effective_mu();
  if (lambda != 0.0) out.f_view = view_consistency_loss(params, targets, latents);
  if (mu != 0.0) out.f_align = chamfer_alignment(latents, label_bank(source));
  out.total = out.f_labeled + lambda * out.f_view + mu * out.f_align;
  return out;
}

TrainState make_state(const Architecture& arch, const TrainConfig& cfg) {
  TrainState state;
  state.params = PredictorParams::init(arch, cfg.seed);
  state.velocity = zeros_like(state.params.layers);
  state.rng.seed(cfg.seed ^ 0x5eedc0ffee123457ULL);
  return state;
}

void pretrain(TrainState& state, const std::vector<ViewSample>& source, const TrainConfig& cfg,
              TrainObserver* observer) {
  cfg.validate();
  require_source(source);
  state.velocity = zeros_like(state.params.layers);

  std::vector<std::size_t> order(source.size());
  for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    const auto start = Clock::now();
    const double lr = cfg.sgd.learning_rate_at(epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), state.rng);
    const auto batches = split_batches(order, cfg.sgd.batch_size);
    // Per-sample weight K/|source| makes each step an unbiased estimate of the
    // full labeled-term gradient.
    const double weight = static_cast<double>(batches.size()) / static_cast<double>(source.size());
    for (const auto& batch : batches) {
      ParamSet grads = zeros_like(state.params.layers);
      accumulate_source(state.params, source, batch, weight, grads);
      sgd_step(state.params, grads, state.velocity, lr, cfg.sgd);
    }
    ++state.pretrain_epochs_done;

    if (observer) {
      EpochRecord rec;
      rec.phase = "pretrain";
      rec.epoch = epoch;
      rec.learning_rate = lr;
      rec.f_labeled = labeled_loss(state.params, source);
      rec.total = rec.f_labeled;
      rec.wall_time_s = seconds_since(start);
      observer->on_epoch(rec);
    }
  }
}

PredictorParams pretrain(const Architecture& arch, const std::vector<ViewSample>& source,
                         const TrainConfig& cfg, TrainObserver* observer) {
  TrainState state = make_state(arch, cfg);
  pretrain(state, source, cfg, observer);
  return state.params;
}

void initialize_latents(TrainState& state, const std::vector<ViewSample>& source,
                        const std::vector<ViewSet>& targets, const TrainConfig& cfg) {
  require_source(source);
  require_targets(targets);
  state.latents = init_latents(predict_all(state.params, targets), label_bank(source), cfg.sigma);
  state.latents_initialized = true;
}

ParamSet target_batch_gradient(const PredictorParams& params, const std::vector<ViewSet>& targets,
                               const LatentSet& latents, const std::vector<TargetIndex>& batch,
                               double lambda, double scale) {
  ParamSet grads = zeros_like(params.layers);
  if (lambda == 0.0) return grads;
  const auto n = static_cast<double>(targets.size());
  for (const auto& [i, j] : batch) {
    const KeypointConfig& latent = latents.latents[i];
    const double weight = scale * lambda / (n * static_cast<double>(targets[i].views.size()));
    forward_backward_accumulate(
        params, targets[i].views[j].input,
        [&](const KeypointConfig& g) { return pose_invariant_gradient(g, latent).gradient; }, weight,
        grads);
  }
  return grads;
}

void adapt(TrainState& state, const std::vector<ViewSample>& source,
           const std::vector<ViewSet>& targets, const TrainConfig& cfg, TrainObserver* observer) {
  cfg.validate();
  require_source(source);
  require_targets(targets);
  const double lambda = cfg.effective_lambda();
  const double mu = cfg.effective_mu();
  if (lambda == 0.0 && mu == 0.0) {
    throw InvalidInput("degenerate configuration: lambda = mu = 0 gives no adaptation signal");
  }
  if (!state.latents_initialized) {
    throw InvalidState("adapt called before the latent configurations were initialized");
  }
  if (state.latents.latents.size() != targets.size()) {
    throw InvalidState("latent count does not match the number of target objects");
  }

  const LabelBank bank = label_bank(source);
  state.velocity = zeros_like(state.params.layers);

  std::vector<TargetIndex> target_views;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t j = 0; j < targets[i].views.size(); ++j) target_views.emplace_back(i, j);
  }
  std::vector<std::size_t> source_order(source.size());

  for (int epoch = 0; epoch < cfg.adapt_epochs; ++epoch) {
    const auto start = Clock::now();
    const double lr = cfg.sgd.learning_rate_at(epoch);

    std::iota(source_order.begin(), source_order.end(), std::size_t{0});
    std::shuffle(source_order.begin(), source_order.end(), state.rng);
    const auto source_batches = split_batches(source_order, cfg.sgd.batch_size);

    std::vector<std::vector<TargetIndex>> target_batches;
    if (lambda != 0.0) {
      std::vector<TargetIndex> shuffled = target_views;
      std::shuffle(shuffled.begin(), shuffled.end(), state.rng);
      target_batches = split_batches(std::move(shuffled), cfg.sgd.batch_size);
    }

    // (is_target, batch index), interleaved by a seeded shuffle.
    std::vector<std::pair<bool, std::size_t>> schedule;
    for (std::size_t b = 0; b < source_batches.size(); ++b) schedule.emplace_back(false, b);
    for (std::size_t b = 0; b < target_batches.size(); ++b) schedule.emplace_back(true, b);
    std::shuffle(schedule.begin(), schedule.end(), state.rng);

    // With K batches per epoch, weighting samples by K / (term normalizer)
    // makes every step an unbiased estimate of the full theta-step gradient.
    const auto k = static_cast<double>(schedule.size());
    const double source_weight = k / static_cast<double>(source.size());
    for (const auto& [is_target, b] : schedule) {
      if (is_target) {
        const ParamSet grads =
            target_batch_gradient(state.params, targets, state.latents, target_batches[b], lambda, k);
        sgd_step(state.params, grads, state.velocity, lr, cfg.sgd);
      } else {
        ParamSet grads = zeros_like(state.params.layers);
        accumulate_source(state.params, source, source_batches[b], source_weight, grads);
        sgd_step(state.params, grads, state.velocity, lr, cfg.sgd);
      }
    }
    ++state.adapt_epochs_done;

    const LossBreakdown losses = total_loss(state.params, source, targets, state.latents, cfg);
    if (observer) {
      EpochRecord rec;
      rec.phase = "adapt";
      rec.epoch = epoch;
      rec.learning_rate = lr;
      rec.f_labeled = losses.f_labeled;
      rec.f_view = losses.f_view;
      rec.f_align = losses.f_align;
      rec.total = losses.total;
      rec.wall_time_s = seconds_since(start);
      observer->on_epoch(rec);
    }

    if ((epoch + 1) % cfg.latent_update_period_epochs != 0) continue;

    // Fresh predictions at the current theta.
    const PerObjectPredictions preds = predict_all(state.params, targets);
    LatentUpdateRecord rec;
    rec.epoch = epoch;
    rec.objective_before = latent_objective(state.latents, bank, preds, lambda, mu);
    if (cfg.ablation == Ablation::kReinitLatents) {
      rec.kind = "reinit";
      state.latents = init_latents(preds, bank, cfg.sigma);
    } else {
      rec.kind = "update";
      state.latents = update_latents(state.latents, bank, preds, lambda, mu);
    }
    rec.objective_after = latent_objective(state.latents, bank, preds, lambda, mu);
    rec.total_before = losses.f_labeled + rec.objective_before;
    rec.total_after = losses.f_labeled + rec.objective_after;
    if (observer) observer->on_latent_update(rec);
  }
}

}  // namespace viewconsist
