#include "viewconsist/procrustes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "viewconsist/errors.hpp"

namespace viewconsist {

namespace {

constexpr double kDegenerateDet = 1e-12;

void require_same_size(const KeypointConfig& x, const KeypointConfig& y) {
  if (x.size() != y.size()) {
    throw InvalidInput("keypoint count mismatch: " + std::to_string(x.size()) + " vs " +
                       std::to_string(y.size()));
  }
}

}  // namespace

KeypointConfig::KeypointConfig(Eigen::Matrix3Xd coords) : coords_(std::move(coords)) {
  if (coords_.cols() < 2) {
    throw InvalidInput("a keypoint configuration needs at least 2 keypoints");
  }
  if (!coords_.allFinite()) {
    throw InvalidInput("keypoint configuration has non-finite entries");
  }
  const Eigen::Vector3d sums = coords_.rowwise().sum();
  if (sums.cwiseAbs().maxCoeff() > kCentroidTolerance) {
    throw InvalidInput("keypoint configuration is not centered");
  }
}

KeypointConfig KeypointConfig::zeros(Eigen::Index d) {
  return KeypointConfig(Eigen::Matrix3Xd::Zero(3, d));
}

Rotation::Rotation(const Eigen::Matrix3d& mat) : mat_(mat) {
  if (!mat.allFinite()) {
    throw InvalidInput("rotation has non-finite entries");
  }
  const double ortho_err = (mat.transpose() * mat - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > kTolerance || std::abs(mat.determinant() - 1.0) > kTolerance) {
    throw InvalidInput("matrix is not a proper rotation");
  }
}

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw InvalidInput("quaternion must be finite and nonzero");
  }
  const Eigen::Quaterniond q(w / n, x / n, y / n, z / n);
  return Rotation(q.toRotationMatrix());
}

Rotation Rotation::transposed() const { return Rotation(mat_.transpose(), Unchecked{}); }

Rotation Rotation::operator*(const Rotation& other) const {
  return Rotation(mat_ * other.mat_, Unchecked{});
}

KeypointConfig Rotation::apply(const KeypointConfig& x) const {
  // Re-centering absorbs rounding so the result stays within the invariant.
  return center(mat_ * x.coords());
}

KeypointConfig center(const Eigen::Matrix3Xd& raw) {
  if (raw.cols() < 2) {
    throw InvalidInput("center: need at least 2 keypoints");
  }
  if (!raw.allFinite()) {
    throw InvalidInput("center: non-finite input");
  }
  const Eigen::Vector3d mean = raw.rowwise().mean();
  return KeypointConfig(raw.colwise() - mean);
}

RotationFit optimal_rotation(const KeypointConfig& x, const KeypointConfig& y) {
  require_same_size(x, y);
  const Eigen::Matrix3d cross = y.coords() * x.coords().transpose();

  // Eigen sorts singular values in decreasing order, so diag(1, 1, s) acts on
  // the smallest one.
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  const Eigen::Vector3d sv = svd.singularValues();

  // det(X Y^T) == det(Y X^T).
  const double det = cross.determinant();
  const bool degenerate = std::abs(det) < kDegenerateDet || sv(2) <= kDegenerateDet * sv(0);

  double s = det < 0.0 ? -1.0 : 1.0;
  if (degenerate) {
    // Smallest singular value is zero, so either sign is optimal; pick the one
    // that keeps the result proper.
    s = (u.determinant() * v.determinant()) < 0.0 ? -1.0 : 1.0;
  }
  Eigen::Matrix3d rot = u * Eigen::Vector3d(1.0, 1.0, s).asDiagonal() * v.transpose();
  return {Rotation(rot), degenerate};
}

DistanceResult pose_invariant_distance_ex(const KeypointConfig& x, const KeypointConfig& y) {
  RotationFit fit = optimal_rotation(x, y);
  // Equal to ||X||^2 + ||Y||^2 - 2 tr(R X Y^T), but the residual form does not
  // lose precision when the two configurations nearly coincide.
  const double r = (fit.rotation.matrix() * x.coords() - y.coords()).squaredNorm();
  return {r, fit.rotation, fit.degenerate};
}

double pose_invariant_distance(const KeypointConfig& x, const KeypointConfig& y) {
  return pose_invariant_distance_ex(x, y).value;
}

GradientResult pose_invariant_gradient(const KeypointConfig& x, const KeypointConfig& y) {
  const RotationFit fit = optimal_rotation(x, y);
  Eigen::Matrix3Xd g = 2.0 * (x.coords() - fit.rotation.matrix().transpose() * y.coords());
  return {std::move(g), fit.degenerate};
}

}  // namespace viewconsist
