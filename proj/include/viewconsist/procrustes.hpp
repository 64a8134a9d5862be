#pragma once

#include <Eigen/Dense>

namespace viewconsist {

// Ordered 3D keypoints stored as columns, centroid at the origin.
class KeypointConfig {
 public:
  static constexpr double kCentroidTolerance = 1e-9;

  KeypointConfig() = default;

  // Validates the invariants; throws InvalidInput if `coords` is not
  // centered, has fewer than two columns, or holds non-finite entries.
  explicit KeypointConfig(Eigen::Matrix3Xd coords);

  // Zero configuration with d keypoints.
  static KeypointConfig zeros(Eigen::Index d);

  const Eigen::Matrix3Xd& coords() const { return coords_; }
  Eigen::Index size() const { return coords_.cols(); }
  double squared_norm() const { return coords_.squaredNorm(); }

  friend bool operator==(const KeypointConfig& a, const KeypointConfig& b) {
    return a.coords_.cols() == b.coords_.cols() && a.coords_ == b.coords_;
  }

 private:
  Eigen::Matrix3Xd coords_;
};

// Element of SO(3).
class Rotation {
 public:
  static constexpr double kTolerance = 1e-9;

  Rotation() : mat_(Eigen::Matrix3d::Identity()) {}

  // Throws InvalidInput unless mat is orthonormal with det +1.
  explicit Rotation(const Eigen::Matrix3d& mat);

  static Rotation identity() { return Rotation(); }

  // Rotation from a (not necessarily normalized) quaternion w + xi + yj + zk.
  static Rotation from_quaternion(double w, double x, double y, double z);

  const Eigen::Matrix3d& matrix() const { return mat_; }
  Rotation transposed() const;
  Rotation operator*(const Rotation& other) const;
  KeypointConfig apply(const KeypointConfig& x) const;

 private:
  struct Unchecked {};
  Rotation(const Eigen::Matrix3d& mat, Unchecked) : mat_(mat) {}
  Eigen::Matrix3d mat_;
};

struct RotationFit {
  Rotation rotation;
  // Set when the cross-covariance has (numerically) vanishing determinant; the
  // minimizer is then not unique, but `rotation` is still a valid minimizer.
  bool degenerate = false;
};

struct DistanceResult {
  double value = 0.0;
  Rotation rotation;
  bool degenerate = false;
};

struct GradientResult {
  Eigen::Matrix3Xd gradient;
  bool degenerate = false;
};

// Subtracts the column mean from every column.
KeypointConfig center(const Eigen::Matrix3Xd& raw);

// Proper rotation R minimizing ||R X - Y||_F^2 (Kabsch with sign correction on
// the smallest singular direction).
RotationFit optimal_rotation(const KeypointConfig& x, const KeypointConfig& y);

// min over R in SO(3) of ||R X - Y||_F^2, together with the minimizer.
DistanceResult pose_invariant_distance_ex(const KeypointConfig& x, const KeypointConfig& y);
double pose_invariant_distance(const KeypointConfig& x, const KeypointConfig& y);

// Gradient of the pose-invariant distance with respect to X: 2 (X - R^T Y).
GradientResult pose_invariant_gradient(const KeypointConfig& x, const KeypointConfig& y);

}  // namespace viewconsist
