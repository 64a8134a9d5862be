#include "viewconsist/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "viewconsist/errors.hpp"
#include "viewconsist/quotient_mean.hpp"

namespace viewconsist {

namespace {

void require_nonempty(const std::vector<KeypointConfig>& latents,
                      const std::vector<KeypointConfig>& labels, const char* op) {
  if (latents.empty() || labels.empty()) {
    throw InvalidInput(std::string(op) + ": empty latent or label set");
  }
}

std::size_t argmin_row(const Eigen::MatrixXd& dist, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < dist.cols(); ++k) {
    if (dist(row, k) < dist(row, best)) best = k;
  }
  return static_cast<std::size_t>(best);
}

std::size_t argmin_col(const Eigen::MatrixXd& dist, Eigen::Index col) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < dist.rows(); ++i) {
    if (dist(i, col) < dist(best, col)) best = i;
  }
  return static_cast<std::size_t>(best);
}

void check_predictions(const PerObjectPredictions& predictions, std::size_t n_objects) {
  if (predictions.size() != n_objects) {
    throw InvalidInput("predictions cover " + std::to_string(predictions.size()) +
                       " objects, latents " + std::to_string(n_objects));
  }
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].empty()) {
      throw InvalidInput("object " + std::to_string(i) + " has no view predictions");
    }
  }
}

double view_term(const LatentSet& latents, const PerObjectPredictions& predictions) {
  double total = 0.0;
  for (std::size_t i = 0; i < latents.latents.size(); ++i) {
    double per_object = 0.0;
    for (const auto& p : predictions[i]) {
      per_object += pose_invariant_distance(p, latents.latents[i]);
    }
    total += per_object / static_cast<double>(predictions[i].size());
  }
  return total / static_cast<double>(latents.latents.size());
}

}  // namespace

Eigen::MatrixXd pairwise_distances(const std::vector<KeypointConfig>& latents,
                                   const std::vector<KeypointConfig>& labels) {
  Eigen::MatrixXd dist(static_cast<Eigen::Index>(latents.size()),
                       static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < latents.size(); ++i) {
    for (std::size_t k = 0; k < labels.size(); ++k) {
      dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          pose_invariant_distance(latents[i], labels[k]);
    }
  }
  return dist;
}

double chamfer_alignment(const LatentSet& latents, const LabelBank& bank) {
  require_nonempty(latents.latents, bank.labels, "chamfer_alignment");
  const Eigen::MatrixXd dist = pairwise_distances(latents.latents, bank.labels);
  return dist.rowwise().minCoeff().mean() + dist.colwise().minCoeff().mean();
}

double estimate_sigma(const std::vector<KeypointConfig>& predictions, const LabelBank& bank,
                      SigmaConvention convention) {
  require_nonempty(predictions, bank.labels, "estimate_sigma");
  const double mean_nearest = pairwise_distances(predictions, bank.labels).rowwise().minCoeff().mean();
  const double sigma = convention == SigmaConvention::kVarianceIsMeanDistance
                           ? std::sqrt(mean_nearest)
                           : mean_nearest;
  return std::max(sigma, kSigmaFloor);
}

double density_score(const KeypointConfig& m, const LabelBank& bank, double sigma) {
  if (!(sigma > 0.0)) {
    throw InvalidInput("density_score: sigma must be positive");
  }
  const double denom = 2.0 * sigma * sigma;
  double score = 0.0;
  for (const auto& y : bank.labels) {
    score += std::exp(-pose_invariant_distance(m, y) / denom);
  }
  return score;
}

LatentSet init_latents(const PerObjectPredictions& predictions, const LabelBank& bank,
                       SigmaConvention convention) {
  if (predictions.empty()) {
    throw InvalidInput("init_latents: no objects");
  }
  check_predictions(predictions, predictions.size());
  std::vector<KeypointConfig> pooled;
  for (const auto& views : predictions) pooled.insert(pooled.end(), views.begin(), views.end());
  const double sigma = estimate_sigma(pooled, bank, convention);

  LatentSet out;
  out.latents.reserve(predictions.size());
  for (const auto& views : predictions) {
    std::size_t best = 0;
    double best_score = density_score(views[0], bank, sigma);
    for (std::size_t j = 1; j < views.size(); ++j) {
      const double score = density_score(views[j], bank, sigma);
      if (score > best_score) {
        best = j;
        best_score = score;
      }
    }
    out.latents.push_back(views[best]);
  }
  return out;
}

NearestPairs nearest_pairs(const LatentSet& latents, const LabelBank& bank) {
  require_nonempty(latents.latents, bank.labels, "nearest_pairs");
  const Eigen::MatrixXd dist = pairwise_distances(latents.latents, bank.labels);
  NearestPairs pairs;
  pairs.label_for_latent.resize(latents.latents.size());
  pairs.latent_for_label.resize(bank.labels.size());
  for (Eigen::Index i = 0; i < dist.rows(); ++i) pairs.label_for_latent[i] = argmin_row(dist, i);
  for (Eigen::Index k = 0; k < dist.cols(); ++k) pairs.latent_for_label[k] = argmin_col(dist, k);
  return pairs;
}

double latent_objective(const LatentSet& latents, const LabelBank& bank,
                        const PerObjectPredictions& predictions, double lambda, double mu) {
  check_predictions(predictions, latents.latents.size());
  double value = 0.0;
  if (mu != 0.0) value += mu * chamfer_alignment(latents, bank);
  if (lambda != 0.0) value += lambda * view_term(latents, predictions);
  return value;
}

double frozen_latent_objective(const LatentSet& latents, const LabelBank& bank,
                               const PerObjectPredictions& predictions, const NearestPairs& pairs,
                               double lambda, double mu) {
  check_predictions(predictions, latents.latents.size());
  const auto n = static_cast<double>(latents.latents.size());
  const auto n_labels = static_cast<double>(bank.labels.size());
  double value = 0.0;
  if (mu != 0.0) {
    double to_labels = 0.0;
    for (std::size_t i = 0; i < latents.latents.size(); ++i) {
      to_labels += pose_invariant_distance(latents.latents[i], bank.labels[pairs.label_for_latent[i]]);
    }
    double from_labels = 0.0;
    for (std::size_t k = 0; k < bank.labels.size(); ++k) {
      from_labels += pose_invariant_distance(latents.latents[pairs.latent_for_label[k]], bank.labels[k]);
    }
    value += mu * (to_labels / n + from_labels / n_labels);
  }
  if (lambda != 0.0) value += lambda * view_term(latents, predictions);
  return value;
}

LatentSet update_latents(const LatentSet& latents, const LabelBank& bank,
                         const PerObjectPredictions& predictions, double lambda, double mu) {
  if (lambda < 0.0 || mu < 0.0 || !std::isfinite(lambda) || !std::isfinite(mu)) {
    throw InvalidInput("update_latents: lambda and mu must be finite and nonnegative");
  }
  if (lambda == 0.0 && mu == 0.0) {
    throw InvalidInput("update_latents: lambda = mu = 0 leaves the latents unconstrained");
  }
  check_predictions(predictions, latents.latents.size());
  require_nonempty(latents.latents, bank.labels, "update_latents");

  // Phase (a): assignments at the current latents, fixed for every solve below.
  const NearestPairs pairs = nearest_pairs(latents, bank);

  const auto n = static_cast<double>(latents.latents.size());
  const auto n_labels = static_cast<double>(bank.labels.size());

  // Phase (b): independent per-object weighted quotient means.
  LatentSet out;
  out.latents.reserve(latents.latents.size());
  for (std::size_t i = 0; i < latents.latents.size(); ++i) {
    WeightedConfigSet set;
    if (lambda > 0.0) {
      const double w = lambda / (n * static_cast<double>(predictions[i].size()));
      for (const auto& p : predictions[i]) {
        set.configs.push_back(p);
        set.weights.push_back(w);
      }
    }
    if (mu > 0.0) {
      for (std::size_t k = 0; k < bank.labels.size(); ++k) {
        if (pairs.latent_for_label[k] == i) {
          set.configs.push_back(bank.labels[k]);
          set.weights.push_back(mu / n_labels);
        }
      }
      set.configs.push_back(bank.labels[pairs.label_for_latent[i]]);
      set.weights.push_back(mu / n);
    }
    QuotientMeanOptions options;
    options.init = latents.latents[i];
    const KeypointConfig mean = quotient_weighted_mean(set, options).mean;
    // The mean comes back in the frame of its first configuration; express it
    // in the pose of the previous latent instead so latents do not spin
    // between updates. Every pose-invariant quantity is unaffected.
    out.latents.push_back(optimal_rotation(mean, latents.latents[i]).rotation.apply(mean));
  }
  return out;
}

}  // namespace viewconsist
