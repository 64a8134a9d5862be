#pragma once

#include <cstdint>
#include <functional>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "viewconsist/procrustes.hpp"

namespace viewconsist {

// Feedforward regressor layout: input -> tanh hidden layers -> linear 3*d
// output, reshaped column-wise into a 3 x d configuration and centered.
struct Architecture {
  int input_dim = 0;
  std::vector<int> hidden;
  int keypoints = 0;

  int output_dim() const { return 3 * keypoints; }
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct LayerParams {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

using ParamSet = std::vector<LayerParams>;

struct PredictorParams {
  Architecture arch;
  std::uint64_t seed = 0;
  ParamSet layers;

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  static PredictorParams init(const Architecture& arch, std::uint64_t seed);

  // Throws InvalidInput if layer shapes disagree with `arch` or entries are
  // not finite.
  void validate() const;
};

// Zero-valued set with the same shapes as `like`.
ParamSet zeros_like(const ParamSet& like);
void add_scaled(ParamSet& acc, const ParamSet& other, double scale);
double squared_norm(const ParamSet& p);

KeypointConfig forward(const PredictorParams& params, const Eigen::VectorXd& input);

// dL/dtheta given dL/d(output). The centering step is part of the model, so
// its Jacobian (subtracting the column mean) is applied to output_grad first.
ParamSet backward(const PredictorParams& params, const Eigen::VectorXd& input,
                  const Eigen::Matrix3Xd& output_grad);

// Same as backward but accumulates scale * gradient into `acc`, reusing one
// forward pass. Returns the forward output.
KeypointConfig forward_backward_accumulate(const PredictorParams& params,
                                           const Eigen::VectorXd& input,
                                           const std::function<Eigen::Matrix3Xd(const KeypointConfig&)>& loss_grad,
                                           double scale, ParamSet& acc);

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 64;
  // Learning rate is multiplied by lr_drop_factor from this epoch (0-based) on.
  int lr_drop_epoch = 100;
  double lr_drop_factor = 0.1;

  void validate() const;
  double learning_rate_at(int epoch) const;
};

// Classical momentum with L2 weight decay folded into the gradient:
//   v <- m v + (g + wd theta);  theta <- theta - lr v.
void sgd_step(PredictorParams& params, const ParamSet& grads, ParamSet& velocity,
              double learning_rate, const SgdConfig& cfg);

// Self-describing JSON checkpoint; doubles are written with round-trip
// precision so save/load is bit-exact.
std::string predictor_to_json(const PredictorParams& params);
PredictorParams predictor_from_json(const std::string& text);
void save_predictor(const PredictorParams& params, const std::filesystem::path& path);
PredictorParams load_predictor(const std::filesystem::path& path);

}  // namespace viewconsist
