#pragma once

#include <cstddef>
#include <vector>

#include "viewconsist/procrustes.hpp"

namespace viewconsist {

// Source-domain ground-truth configurations.
struct LabelBank {
  std::vector<KeypointConfig> labels;
};

// One latent configuration per target object.
struct LatentSet {
  std::vector<KeypointConfig> latents;
};

// Predictions for each target object, one per view.
using PerObjectPredictions = std::vector<std::vector<KeypointConfig>>;

// How the density bandwidth relates to the mean nearest-label distance m.
enum class SigmaConvention {
  kVarianceIsMeanDistance,  // sigma^2 = m (default; keeps r / (2 sigma^2) dimensionless)
  kSigmaIsMeanDistance,     // sigma = m
};

inline constexpr double kSigmaFloor = 1e-8;

// Pose-invariant distances r(latents[i], labels[k]) as an N x |bank| table.
Eigen::MatrixXd pairwise_distances(const std::vector<KeypointConfig>& latents,
                                   const std::vector<KeypointConfig>& labels);

// Two-sided Chamfer distance under r:
// mean_i min_k r(M_i, Y_k) + mean_k min_i r(M_i, Y_k).
double chamfer_alignment(const LatentSet& latents, const LabelBank& bank);

double estimate_sigma(const std::vector<KeypointConfig>& predictions, const LabelBank& bank,
                      SigmaConvention convention = SigmaConvention::kVarianceIsMeanDistance);

// Un-normalized kernel density of `m` over the bank:
// sum_k exp(-r(m, Y_k) / (2 sigma^2)).
double density_score(const KeypointConfig& m, const LabelBank& bank, double sigma);

// Picks, per object, the view prediction with the highest density score.
// Sigma is estimated once from all predictions pooled together.
LatentSet init_latents(const PerObjectPredictions& predictions, const LabelBank& bank,
                       SigmaConvention convention = SigmaConvention::kVarianceIsMeanDistance);

// Nearest-pair assignments between latents and labels (lowest index on ties).
struct NearestPairs {
  std::vector<std::size_t> label_for_latent;  // I^(i)
  std::vector<std::size_t> latent_for_label;  // i^(I)
};

NearestPairs nearest_pairs(const LatentSet& latents, const LabelBank& bank);

// Latent-step objective with freshly minimized assignments:
//   mu * chamfer(latents, bank) + lambda * mean_i mean_j r(G_ij, M_i).
double latent_objective(const LatentSet& latents, const LabelBank& bank,
                        const PerObjectPredictions& predictions, double lambda, double mu);

// The same objective with the assignments held fixed (the MM surrogate).
double frozen_latent_objective(const LatentSet& latents, const LabelBank& bank,
                               const PerObjectPredictions& predictions, const NearestPairs& pairs,
                               double lambda, double mu);

// One majorize-minimize step on the latents: freeze nearest pairs at the
// current latents, then solve each object's weighted quotient mean starting
// from its current latent. Never increases latent_objective. Results are
// posed to match the previous latents.
LatentSet update_latents(const LatentSet& latents, const LabelBank& bank,
                         const PerObjectPredictions& predictions, double lambda, double mu);

}  // namespace viewconsist
