#pragma once

#include <optional>
#include <vector>

#include "viewconsist/procrustes.hpp"

namespace viewconsist {

// Configurations Y_i with positive weights c_i.
struct WeightedConfigSet {
  std::vector<KeypointConfig> configs;
  std::vector<double> weights;

  // Throws InvalidInput when empty, mismatched in length or keypoint count,
  // or when a weight is not strictly positive.
  void validate() const;
};

struct QuotientMeanOptions {
  int max_iters = 100;
  // Stop once one sweep lowers the objective, divided by the total weight,
  // by less than this amount.
  double tol = 1e-10;
  // Starting point; defaults to the configuration with the largest weight
  // (lowest index on ties).
  std::optional<KeypointConfig> init;
};

struct QuotientMean {
  KeypointConfig mean;
  // rotations[i] aligns Y_i onto the mean: mean ~ rotations[i]^T Y_i.
  // rotations[0] is the identity.
  std::vector<Rotation> rotations;
  // Objective sum_i c_i ||X - R_i^T Y_i||^2 after each sweep (first entry is
  // the value at the initial point with optimal rotations).
  std::vector<double> objective_trace;
  int iterations = 0;
};

// Weighted mean in the quotient R^{3xd}/SO(3), minimizing
// sum_i c_i r(X, Y_i) by alternating between per-config rotations and the
// weighted Euclidean mean. The problem is non-convex; the result is a local
// minimum reached from the initial point.
QuotientMean quotient_weighted_mean(const WeightedConfigSet& set,
                                    const QuotientMeanOptions& options = {});

// sum_i c_i ||X - R_i^T Y_i||_F^2 for given rotations.
double quotient_objective(const WeightedConfigSet& set, const KeypointConfig& x,
                          const std::vector<Rotation>& rotations);

}  // namespace viewconsist
