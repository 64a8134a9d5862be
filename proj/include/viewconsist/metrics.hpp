#pragma once

#include <utility>
#include <vector>

#include "viewconsist/procrustes.hpp"

namespace viewconsist {

// Per-keypoint Euclidean errors as percent of the diagonal.
std::vector<double> keypoint_errors_percent(const KeypointConfig& pred, const KeypointConfig& gt,
                                            double diag);

// Mean per-keypoint distance, percent of the bounding-box diagonal.
double average_error(const KeypointConfig& pred, const KeypointConfig& gt, double diag);

// Same as average_error after rotating pred by optimal_rotation(pred, gt).
// The rotation minimizes the Frobenius residual, not the mean of norms, so
// this is an upper bound on the pose-minimal mean distance.
double pose_invariant_average_error(const KeypointConfig& pred, const KeypointConfig& gt,
                                    double diag);

struct SampleEval {
  int object_id = 0;
  int view_id = 0;
  double ae = 0.0;
  double pae = 0.0;
  std::vector<double> keypoint_errors;  // percent, camera frame (AE-style)
};

SampleEval evaluate_sample(const KeypointConfig& pred, const KeypointConfig& gt, double diag,
                           int object_id = 0, int view_id = 0);

using PckCurve = std::vector<std::pair<double, double>>;

// Fraction of all keypoints whose error is <= each threshold (percent).
PckCurve pck_curve(const std::vector<SampleEval>& samples, const std::vector<double>& thresholds);

// 0, 0.5, ..., 25 percent.
std::vector<double> default_pck_thresholds();

}  // namespace viewconsist
