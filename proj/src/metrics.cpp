#include "viewconsist/metrics.hpp"

#include <algorithm>

#include "viewconsist/errors.hpp"

namespace viewconsist {

namespace {

void check(const KeypointConfig& pred, const KeypointConfig& gt, double diag) {
  if (!(diag > 0.0)) throw InvalidInput("diagonal length must be positive");
  if (pred.size() != gt.size()) throw InvalidInput("prediction and ground truth differ in keypoint count");
}

double mean_percent(const Eigen::Matrix3Xd& diff, double diag) {
  return 100.0 * diff.colwise().norm().mean() / diag;
}

}  // namespace

std::vector<double> keypoint_errors_percent(const KeypointConfig& pred, const KeypointConfig& gt,
                                            double diag) {
  check(pred, gt, diag);
  const Eigen::RowVectorXd norms = (pred.coords() - gt.coords()).colwise().norm();
  std::vector<double> out(static_cast<std::size_t>(norms.size()));
  for (Eigen::Index j = 0; j < norms.size(); ++j) out[static_cast<std::size_t>(j)] = 100.0 * norms(j) / diag;
  return out;
}

double average_error(const KeypointConfig& pred, const KeypointConfig& gt, double diag) {
  check(pred, gt, diag);
  return mean_percent(pred.coords() - gt.coords(), diag);
}

double pose_invariant_average_error(const KeypointConfig& pred, const KeypointConfig& gt,
                                    double diag) {
  check(pred, gt, diag);
  const Rotation r = optimal_rotation(pred, gt).rotation;
  return mean_percent(r.matrix() * pred.coords() - gt.coords(), diag);
}

SampleEval evaluate_sample(const KeypointConfig& pred, const KeypointConfig& gt, double diag,
                           int object_id, int view_id) {
  SampleEval s;
  s.object_id = object_id;
  s.view_id = view_id;
  s.keypoint_errors = keypoint_errors_percent(pred, gt, diag);
  s.ae = average_error(pred, gt, diag);
  s.pae = pose_invariant_average_error(pred, gt, diag);
  return s;
}

PckCurve pck_curve(const std::vector<SampleEval>& samples, const std::vector<double>& thresholds) {
  if (samples.empty()) throw InvalidInput("pck_curve: no samples");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw InvalidInput("pck_curve: thresholds must be ascending");
  }
  std::vector<double> errors;
  for (const auto& s : samples) errors.insert(errors.end(), s.keypoint_errors.begin(), s.keypoint_errors.end());
  if (errors.empty()) throw InvalidInput("pck_curve: no keypoints");
  std::sort(errors.begin(), errors.end());
  PckCurve curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto count = std::upper_bound(errors.begin(), errors.end(), t) - errors.begin();
    curve.emplace_back(t, static_cast<double>(count) / static_cast<double>(errors.size()));
  }
  return curve;
}

std::vector<double> default_pck_thresholds() {
  std::vector<double> t;
  for (int k = 0; k <= 50; ++k) t.push_back(0.5 * k);
  return t;
}

}  // namespace viewconsist
