#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "viewconsist/errors.hpp"
#include "viewconsist/procrustes.hpp"

using namespace viewconsist;

namespace {

KeypointConfig rand_config(oracle::Rng& rng, Eigen::Index d, double scale = 1.0) {
  return KeypointConfig(oracle::random_centered(rng, d, scale));
}

KeypointConfig rotated(const Eigen::Matrix3d& r, const KeypointConfig& x) { return center(r * x.coords()); }

}  // namespace

TEST(Center, SubtractsMean) {
  Eigen::Matrix3Xd raw(3, 2);
  raw << 1, 3, 0, 0, 0, 0;
  const KeypointConfig c = center(raw);
  EXPECT_DOUBLE_EQ(c.coords()(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(c.coords()(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(c.coords().row(1).norm() + c.coords().row(2).norm(), 0.0);
}

TEST(Center, IdempotentOnCenteredInput) {
  oracle::Rng rng(1);
  const Eigen::Matrix3Xd raw = Eigen::Matrix3Xd::Random(3, 7) * 5.0;
  const KeypointConfig once = center(raw);
  EXPECT_LT((center(once.coords()).coords() - once.coords()).cwiseAbs().maxCoeff(), 1e-14);
  Eigen::Matrix3Xd sym(3, 2);
  sym << -1, 1, 2, -2, 0, 0;
  EXPECT_EQ(center(sym).coords(), sym);
}

TEST(KeypointConfig, RejectsInvalid) {
  Eigen::Matrix3Xd one(3, 1);
  one.setZero();
  EXPECT_THROW(KeypointConfig{one}, InvalidInput);
  Eigen::Matrix3Xd off(3, 2);
  off << 1, 1, 0, 0, 0, 0;
  EXPECT_THROW(KeypointConfig{off}, InvalidInput);
  Eigen::Matrix3Xd nan = Eigen::Matrix3Xd::Zero(3, 2);
  nan(0, 0) = std::nan("");
  EXPECT_THROW(KeypointConfig{nan}, InvalidInput);
}

TEST(Rotation, RejectsReflection) {
  EXPECT_THROW(Rotation(Eigen::Matrix3d(Eigen::Vector3d(1, 1, -1).asDiagonal())), InvalidInput);
  EXPECT_THROW(Rotation(Eigen::Matrix3d::Identity() * 2.0), InvalidInput);
}

TEST(OptimalRotation, SelfAlignmentIsIdentity) {
  oracle::Rng rng(2);
  const auto x = rand_config(rng, 6);
  const auto fit = optimal_rotation(x, x);
  EXPECT_FALSE(fit.degenerate);
  EXPECT_LT((fit.rotation.matrix() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OptimalRotation, RecoversKnownRotation) {
  oracle::Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto x = rand_config(rng, 5);
    const Eigen::Matrix3d r0 = oracle::random_rotation(rng);
    const auto fit = optimal_rotation(x, rotated(r0, x));
    EXPECT_LT((fit.rotation.matrix() - r0).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(OptimalRotation, AgreesWithHornQuaternionSolver) {
  oracle::Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto x = rand_config(rng, 3 + t % 8);
    const auto y = rand_config(rng, 3 + t % 8);
    const Eigen::Matrix3d horn = oracle::horn_rotation(x.coords(), y.coords());
    EXPECT_LT((optimal_rotation(x, y).rotation.matrix() - horn).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(OptimalRotation, NoGridRotationDoesBetter) {
  const auto grid = oracle::halton_rotation_grid(100000);
  oracle::Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    const auto x = rand_config(rng, 5);
    const auto y = rand_config(rng, 5);
    const double r_star = (optimal_rotation(x, y).rotation.matrix() * x.coords() - y.coords()).squaredNorm();
    const double grid_best = oracle::grid_min_residual(grid, x.coords(), y.coords());
    EXPECT_LE(r_star, grid_best + 1e-9);
    EXPECT_LE(grid_best, oracle::grid_resolution_bound(r_star, x.coords()));
  }
}

TEST(OptimalRotation, PlanarInputStaysProper) {
  Eigen::Matrix3Xd sq(3, 4);
  sq << 1, -1, -1, 1, 1, 1, -1, -1, 0, 0, 0, 0;
  const KeypointConfig x(sq);
  const auto fit = optimal_rotation(x, KeypointConfig(Eigen::Matrix3Xd(2.0 * sq)));
  EXPECT_TRUE(fit.degenerate);
  EXPECT_NEAR(fit.rotation.matrix().determinant(), 1.0, 1e-12);
}

TEST(Distance, ZeroOnOrbit) {
  oracle::Rng rng(6);
  const auto x = rand_config(rng, 8);
  EXPECT_NEAR(pose_invariant_distance(x, x), 0.0, 1e-12);
  EXPECT_NEAR(pose_invariant_distance(x, rotated(oracle::random_rotation(rng), x)), 0.0, 1e-10);
}

TEST(Distance, ScaledSquareIsEight) {
  Eigen::Matrix3Xd sq(3, 4);
  sq << 1, -1, -1, 1, 1, 1, -1, -1, 0, 0, 0, 0;
  const KeypointConfig x(sq), y(Eigen::Matrix3Xd(2.0 * sq));
  EXPECT_NEAR(pose_invariant_distance(x, y), 8.0, 1e-12);
  const auto grid = oracle::halton_rotation_grid(100000);
  EXPECT_NEAR(oracle::grid_min_residual(grid, sq, 2.0 * sq), 8.0, oracle::grid_resolution_bound(8.0, sq) - 8.0);
  EXPECT_GE(oracle::grid_min_residual(grid, sq, 2.0 * sq), 8.0 - 1e-9);
}

TEST(Distance, SymmetricBiInvariantAndTriangle) {
  oracle::Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index d = (t % 3 == 0) ? 3 : (t % 3 == 1 ? 5 : 10);
    const auto x = rand_config(rng, d), y = rand_config(rng, d), z = rand_config(rng, d);
    const double rxy = pose_invariant_distance(x, y);
    EXPECT_NEAR(rxy, pose_invariant_distance(y, x), 1e-10);
    EXPECT_NEAR(rxy, oracle::horn_distance(x.coords(), y.coords()), 1e-9);
    const auto xr = rotated(oracle::random_rotation(rng), x);
    const auto yr = rotated(oracle::random_rotation(rng), y);
    EXPECT_NEAR(rxy, pose_invariant_distance(xr, yr), 1e-9);
    EXPECT_LE(std::sqrt(rxy),
              std::sqrt(pose_invariant_distance(x, z)) + std::sqrt(pose_invariant_distance(z, y)) + 1e-9);
  }
}

TEST(Distance, RejectsMismatchedSizes) {
  EXPECT_THROW(pose_invariant_distance(KeypointConfig::zeros(3), KeypointConfig::zeros(4)), InvalidInput);
}

TEST(Gradient, VanishesOnOrbit) {
  oracle::Rng rng(8);
  const auto x = rand_config(rng, 6);
  EXPECT_LT(pose_invariant_gradient(x, x).gradient.cwiseAbs().maxCoeff(), 1e-12);
  const auto y = rotated(oracle::random_rotation(rng), x);
  EXPECT_LT(pose_invariant_gradient(x, y).gradient.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Gradient, MatchesFiniteDifferences) {
  oracle::Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto x = rand_config(rng, 5), y = rand_config(rng, 5);
    const auto analytic = pose_invariant_gradient(x, y).gradient;
    // The distance is invariant to translation, so perturb raw coordinates and
    // let the function see the unconstrained matrix.
    auto f = [&](const Eigen::MatrixXd& m) {
      return oracle::horn_distance(Eigen::Matrix3Xd(m), y.coords());
    };
    const Eigen::MatrixXd fd = oracle::central_differences(f, x.coords(), 1e-5);
    EXPECT_LT(oracle::max_relative_error(analytic, fd, 1e-3 * fd.cwiseAbs().maxCoeff()), 1e-4);
  }
}
