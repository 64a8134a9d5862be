#include "viewconsist/quotient_mean.hpp"

#include <cmath>
#include <string>

#include "viewconsist/errors.hpp"

namespace viewconsist {

namespace {

Eigen::Matrix3Xd weighted_aligned_mean(const WeightedConfigSet& set,
                                       const std::vector<Rotation>& rotations) {
  const Eigen::Index d = set.configs.front().size();
  Eigen::Matrix3Xd acc = Eigen::Matrix3Xd::Zero(3, d);
  double total = 0.0;
  for (std::size_t i = 0; i < set.configs.size(); ++i) {
    acc.noalias() += set.weights[i] * (rotations[i].matrix().transpose() * set.configs[i].coords());
    total += set.weights[i];
  }
  return acc / total;
}

}  // namespace

void WeightedConfigSet::validate() const {
  if (configs.empty()) {
    throw InvalidInput("weighted config set is empty");
  }
  if (configs.size() != weights.size()) {
    throw InvalidInput("weighted config set: " + std::to_string(configs.size()) + " configs but " +
                       std::to_string(weights.size()) + " weights");
  }
  const Eigen::Index d = configs.front().size();
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (configs[i].size() != d) {
      throw InvalidInput("weighted config set: keypoint count mismatch at index " +
                         std::to_string(i));
    }
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw InvalidInput("weighted config set: weights must be positive and finite");
    }
  }
}

double quotient_objective(const WeightedConfigSet& set, const KeypointConfig& x,
                          const std::vector<Rotation>& rotations) {
  double obj = 0.0;
  for (std::size_t i = 0; i < set.configs.size(); ++i) {
    obj += set.weights[i] *
           (x.coords() - rotations[i].matrix().transpose() * set.configs[i].coords()).squaredNorm();
  }
  return obj;
}

QuotientMean quotient_weighted_mean(const WeightedConfigSet& set,
                                    const QuotientMeanOptions& options) {
  set.validate();
  if (options.max_iters < 1) {
    throw InvalidInput("quotient mean: max_iters must be >= 1");
  }
  if (!(options.tol > 0.0)) {
    throw InvalidInput("quotient mean: tol must be positive");
  }
  const std::size_t n = set.configs.size();

  KeypointConfig x;
  if (options.init) {
    if (options.init->size() != set.configs.front().size()) {
      throw InvalidInput("quotient mean: initial point has wrong keypoint count");
    }
    x = *options.init;
  } else {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (set.weights[i] > set.weights[best]) best = i;
    }
    x = set.configs[best];
  }

  double total_weight = 0.0;
  for (double w : set.weights) total_weight += w;

  // The stopping test works on the weight-normalized objective so that the
  // result does not depend on the overall scale of the weights. The mean step
  // lowers the normalized objective by exactly ||X_new - X_old||^2, which is
  // computed directly instead of as a difference of two nearly equal values.
  QuotientMean out;
  std::vector<Rotation> rotations(n);
  double after_previous_mean = 0.0;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      rotations[i] = optimal_rotation(x, set.configs[i]).rotation;
    }
    const double after_rotations = quotient_objective(set, x, rotations);
    out.objective_trace.push_back(after_rotations);
    const double rotation_gain =
        iter == 0 ? 0.0 : std::max(0.0, (after_previous_mean - after_rotations) / total_weight);

    KeypointConfig next(weighted_aligned_mean(set, rotations));
    const double mean_gain = (next.coords() - x.coords()).squaredNorm();
    x = std::move(next);
    after_previous_mean = quotient_objective(set, x, rotations);
    out.objective_trace.push_back(after_previous_mean);
    out.iterations = iter + 1;

    if (rotation_gain + mean_gain < options.tol) break;
  }

  // Gauge fix: express the mean in the frame of the first configuration.
  const Eigen::Matrix3d r1t = rotations.front().matrix().transpose();
  for (std::size_t i = 1; i < n; ++i) {
    rotations[i] = rotations[i] * Rotation(r1t);
  }
  rotations.front() = Rotation::identity();
  out.mean = KeypointConfig(weighted_aligned_mean(set, rotations));
  out.rotations = std::move(rotations);
  return out;
}

}  // namespace viewconsist
