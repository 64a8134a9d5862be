#include "viewconsist/predictor.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "viewconsist/errors.hpp"

namespace viewconsist {

namespace {

using json = nlohmann::json;

constexpr const char* kCheckpointFormat = "viewconsist.predictor";
constexpr int kCheckpointVersion = 1;

// Activations of every layer for one input; acts[0] is the input itself.
struct ForwardTrace {
  std::vector<Eigen::VectorXd> acts;
  Eigen::VectorXd output;
};

ForwardTrace run_forward(const PredictorParams& params, const Eigen::VectorXd& input) {
  if (input.size() != params.arch.input_dim) {
    throw InvalidInput("predictor input has " + std::to_string(input.size()) + " entries, expected " +
                       std::to_string(params.arch.input_dim));
  }
  if (!input.allFinite()) {
    throw InvalidInput("predictor input has non-finite entries");
  }
  ForwardTrace trace;
  trace.acts.reserve(params.layers.size());
  trace.acts.push_back(input);
  for (std::size_t l = 0; l + 1 < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Eigen::VectorXd z = layer.weights * trace.acts.back() + layer.bias;
    trace.acts.push_back(z.array().tanh().matrix());
  }
  const auto& last = params.layers.back();
  trace.output = last.weights * trace.acts.back() + last.bias;
  return trace;
}

KeypointConfig to_config(const Eigen::VectorXd& output, int keypoints) {
  return center(Eigen::Map<const Eigen::Matrix3Xd>(output.data(), 3, keypoints));
}

void backprop(const PredictorParams& params, const ForwardTrace& trace,
              const Eigen::Matrix3Xd& output_grad, double scale, ParamSet& acc) {
  const int d = params.arch.keypoints;
  if (output_grad.cols() != d) {
    throw InvalidInput("output gradient has " + std::to_string(output_grad.cols()) +
                       " keypoints, expected " + std::to_string(d));
  }
  if (!output_grad.allFinite()) {
    throw InvalidInput("output gradient has non-finite entries");
  }
  // Centering is a symmetric projection, so its adjoint is itself.
  Eigen::Matrix3Xd centered = output_grad.colwise() - output_grad.rowwise().mean();
  Eigen::VectorXd delta = Eigen::Map<const Eigen::VectorXd>(centered.data(), 3 * d);

  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const Eigen::VectorXd& a_in = trace.acts[l];
    acc[l].weights.noalias() += scale * delta * a_in.transpose();
    acc[l].bias.noalias() += scale * delta;
    if (l == 0) break;
    Eigen::VectorXd back = params.layers[l].weights.transpose() * delta;
    delta = back.array() * (1.0 - a_in.array().square());
  }
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  }
  return arr;
}

}  // namespace

PredictorParams PredictorParams::init(const Architecture& arch, std::uint64_t seed) {
  if (arch.input_dim < 1 || arch.keypoints < 2) {
    throw InvalidInput("architecture needs input_dim >= 1 and keypoints >= 2");
  }
  for (int h : arch.hidden) {
    if (h < 1) throw InvalidInput("hidden layer widths must be positive");
  }
  PredictorParams p;
  p.arch = arch;
  p.seed = seed;
  std::mt19937_64 rng(seed);
  std::vector<int> dims{arch.input_dim};
  dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
  dims.push_back(arch.output_dim());
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    LayerParams layer;
    layer.weights.resize(dims[l + 1], dims[l]);
    layer.bias.resize(dims[l + 1]);
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = dist(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

void PredictorParams::validate() const {
  if (arch.input_dim < 1 || arch.keypoints < 2) {
    throw InvalidInput("architecture needs input_dim >= 1 and keypoints >= 2");
  }
  std::vector<int> dims{arch.input_dim};
  dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
  dims.push_back(arch.output_dim());
  if (layers.size() + 1 != dims.size()) {
    throw InvalidInput("predictor has " + std::to_string(layers.size()) + " layers, architecture " +
                       std::to_string(dims.size() - 1));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].weights.rows() != dims[l + 1] || layers[l].weights.cols() != dims[l] ||
        layers[l].bias.size() != dims[l + 1]) {
      throw InvalidInput("predictor layer " + std::to_string(l) + " has the wrong shape");
    }
    if (!layers[l].weights.allFinite() || !layers[l].bias.allFinite()) {
      throw InvalidInput("predictor layer " + std::to_string(l) + " has non-finite entries");
    }
  }
}

ParamSet zeros_like(const ParamSet& like) {
  ParamSet out;
  out.reserve(like.size());
  for (const auto& layer : like) {
    out.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                   Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return out;
}

void add_scaled(ParamSet& acc, const ParamSet& other, double scale) {
  if (acc.size() != other.size()) throw InvalidInput("parameter sets differ in layer count");
  for (std::size_t l = 0; l < acc.size(); ++l) {
    acc[l].weights += scale * other[l].weights;
    acc[l].bias += scale * other[l].bias;
  }
}

double squared_norm(const ParamSet& p) {
  double s = 0.0;
  for (const auto& layer : p) s += layer.weights.squaredNorm() + layer.bias.squaredNorm();
  return s;
}

KeypointConfig forward(const PredictorParams& params, const Eigen::VectorXd& input) {
  return to_config(run_forward(params, input).output, params.arch.keypoints);
}

ParamSet backward(const PredictorParams& params, const Eigen::VectorXd& input,
                  const Eigen::Matrix3Xd& output_grad) {
  const ForwardTrace trace = run_forward(params, input);
  ParamSet grads = zeros_like(params.layers);
  backprop(params, trace, output_grad, 1.0, grads);
  return grads;
}

KeypointConfig forward_backward_accumulate(
    const PredictorParams& params, const Eigen::VectorXd& input,
    const std::function<Eigen::Matrix3Xd(const KeypointConfig&)>& loss_grad, double scale,
    ParamSet& acc) {
  const ForwardTrace trace = run_forward(params, input);
  KeypointConfig out = to_config(trace.output, params.arch.keypoints);
  backprop(params, trace, loss_grad(out), scale, acc);
  return out;
}

void SgdConfig::validate() const {
  if (!(learning_rate >= 0.0) || !(momentum >= 0.0 && momentum < 1.0) || !(weight_decay >= 0.0) ||
      batch_size < 1 || lr_drop_epoch < 1 || !(lr_drop_factor > 0.0)) {
    throw InvalidInput("invalid SGD configuration");
  }
}

double SgdConfig::learning_rate_at(int epoch) const {
  return epoch >= lr_drop_epoch ? learning_rate * lr_drop_factor : learning_rate;
}

void sgd_step(PredictorParams& params, const ParamSet& grads, ParamSet& velocity,
              double learning_rate, const SgdConfig& cfg) {
  if (grads.size() != params.layers.size() || velocity.size() != params.layers.size()) {
    throw InvalidInput("sgd_step: parameter, gradient and velocity shapes differ");
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    auto& vel = velocity[l];
    if (grads[l].weights.rows() != layer.weights.rows() ||
        grads[l].weights.cols() != layer.weights.cols() ||
        grads[l].bias.size() != layer.bias.size() ||
        vel.weights.rows() != layer.weights.rows() || vel.weights.cols() != layer.weights.cols() ||
        vel.bias.size() != layer.bias.size()) {
      throw InvalidInput("sgd_step: layer " + std::to_string(l) + " shape mismatch");
    }
    vel.weights = cfg.momentum * vel.weights + grads[l].weights + cfg.weight_decay * layer.weights;
    vel.bias = cfg.momentum * vel.bias + grads[l].bias + cfg.weight_decay * layer.bias;
    layer.weights -= learning_rate * vel.weights;
    layer.bias -= learning_rate * vel.bias;
  }
}

std::string predictor_to_json(const PredictorParams& params) {
  params.validate();
  json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = kCheckpointVersion;
  doc["input_dim"] = params.arch.input_dim;
  doc["hidden"] = params.arch.hidden;
  doc["keypoints"] = params.arch.keypoints;
  doc["activation"] = "tanh";
  doc["seed"] = params.seed;
  json layers = json::array();
  for (const auto& layer : params.layers) {
    json l;
    l["rows"] = layer.weights.rows();
    l["cols"] = layer.weights.cols();
    l["weights"] = matrix_to_json(layer.weights);
    l["bias"] = matrix_to_json(layer.bias);
    layers.push_back(std::move(l));
  }
  doc["layers"] = std::move(layers);
  return doc.dump() + "\n";
}

PredictorParams predictor_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("predictor checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat) {
      throw InvalidInput("not a predictor checkpoint");
    }
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw InvalidInput("unsupported predictor checkpoint version");
    }
    PredictorParams p;
    p.arch.input_dim = doc.at("input_dim").get<int>();
    p.arch.hidden = doc.at("hidden").get<std::vector<int>>();
    p.arch.keypoints = doc.at("keypoints").get<int>();
    p.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& l : doc.at("layers")) {
      const auto rows = l.at("rows").get<Eigen::Index>();
      const auto cols = l.at("cols").get<Eigen::Index>();
      const auto w = l.at("weights").get<std::vector<double>>();
      const auto b = l.at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
          static_cast<Eigen::Index>(b.size()) != rows) {
        throw InvalidInput("predictor checkpoint layer has inconsistent sizes");
      }
      LayerParams layer;
      layer.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          w.data(), rows, cols);
      layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
      p.layers.push_back(std::move(layer));
    }
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed predictor checkpoint: ") + e.what());
  }
}

void save_predictor(const PredictorParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << predictor_to_json(params);
}

PredictorParams load_predictor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return predictor_from_json(buf.str());
}

}  // namespace viewconsist
