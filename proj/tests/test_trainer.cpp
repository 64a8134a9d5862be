#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "viewconsist/errors.hpp"
#include "viewconsist/trainer.hpp"

using namespace viewconsist;

namespace {

constexpr int kD = 10;

Eigen::VectorXd encode(const Eigen::Matrix3Xd& kp) { return Eigen::Map<const Eigen::VectorXd>(kp.data(), kp.size()); }

// Linear predictor whose output is its input reshaped: forward(encode(K)) = K.
PredictorParams identity_predictor(int d) {
  auto p = PredictorParams::init({3 * d, {}, d}, 1);
  p.layers.front().weights = Eigen::MatrixXd::Identity(3 * d, 3 * d);
  p.layers.front().bias.setZero();
  return p;
}

ViewSample sample(const Eigen::Matrix3Xd& input_kp, const KeypointConfig& gt, int obj = 0, int view = 0) {
  ViewSample s;
  s.object_id = obj;
  s.view_id = view;
  s.input = encode(input_kp);
  s.gt_keypoints = gt;
  return s;
}

struct Fixture {
  std::vector<ViewSample> source;
  std::vector<ViewSet> targets;
  LatentSet latents;
};

Fixture random_fixture(oracle::Rng& rng, int n_source, int n_objects, int views) {
  Fixture f;
  for (int k = 0; k < n_source; ++k) {
    f.source.push_back(sample(oracle::random_centered(rng, kD), KeypointConfig(oracle::random_centered(rng, kD)), k));
  }
  for (int i = 0; i < n_objects; ++i) {
    ViewSet set;
    set.object_id = i;
    for (int j = 0; j < views; ++j) {
      set.views.push_back(sample(oracle::random_centered(rng, kD), KeypointConfig::zeros(kD), i, j));
    }
    f.targets.push_back(std::move(set));
    f.latents.latents.emplace_back(oracle::random_centered(rng, kD));
  }
  return f;
}

TrainConfig quiet_config() {
  TrainConfig c;
  c.pretrain_epochs = 3;
  c.adapt_epochs = 5;
  c.sgd.batch_size = 4;
  return c;
}

}  // namespace

TEST(LabeledLoss, ZeroForExactPredictions) {
  oracle::Rng rng(1);
  std::vector<ViewSample> src;
  for (int k = 0; k < 4; ++k) {
    const Eigen::Matrix3Xd kp = oracle::random_centered(rng, kD);
    src.push_back(sample(kp, KeypointConfig(kp)));
  }
  EXPECT_NEAR(labeled_loss(identity_predictor(kD), src), 0.0, 1e-28);
}

TEST(LabeledLoss, EntrywiseOffsetGivesPointThree) {
  // A centered label cannot differ from a centered prediction by +0.1 in every
  // entry; alternating the sign per keypoint keeps both centered with the
  // same Frobenius sum 30 * 0.01.
  oracle::Rng rng(2);
  const Eigen::Matrix3Xd g = oracle::random_centered(rng, kD);
  Eigen::Matrix3Xd y = g;
  for (int j = 0; j < kD; ++j) y.col(j).array() -= (j % 2 ? -0.1 : 0.1);
  EXPECT_NEAR(labeled_loss(identity_predictor(kD), {sample(g, KeypointConfig(y))}), 0.3, 1e-12);
}

TEST(LabeledLoss, MatchesDirectSum) {
  oracle::Rng rng(3);
  const auto f = random_fixture(rng, 9, 1, 1);
  const auto p = PredictorParams::init({3 * kD, {7}, kD}, 3);
  double direct = 0.0;
  for (const auto& s : f.source) direct += (forward(p, s.input).coords() - s.gt_keypoints.coords()).squaredNorm();
  EXPECT_NEAR(labeled_loss(p, f.source), direct / 9.0, 1e-12);
}

TEST(ViewLoss, ZeroOnRotatedCopies) {
  oracle::Rng rng(4);
  const KeypointConfig m(oracle::random_centered(rng, kD));
  ViewSet set;
  for (int j = 0; j < 4; ++j) set.views.push_back(sample(center(oracle::random_rotation(rng) * m.coords()).coords(), m));
  EXPECT_NEAR(view_consistency_loss(identity_predictor(kD), {set}, {{m}}), 0.0, 1e-10);
}

TEST(ViewLoss, SingleViewDistanceFive) {
  oracle::Rng rng(5);
  const KeypointConfig m(oracle::random_centered(rng, kD));
  const double s = 1.0 + std::sqrt(5.0 / m.squared_norm());
  ViewSet set;
  set.views.push_back(sample(s * m.coords(), m));
  EXPECT_NEAR(view_consistency_loss(identity_predictor(kD), {set}, {{m}}), 5.0, 1e-10);
}

TEST(ViewLoss, MatchesDoubleLoop) {
  oracle::Rng rng(6);
  auto f = random_fixture(rng, 2, 4, 3);
  f.targets[2].views.pop_back();
  const auto p = PredictorParams::init({3 * kD, {6}, kD}, 6);
  double total = 0.0;
  for (std::size_t i = 0; i < f.targets.size(); ++i) {
    double obj = 0.0;
    for (const auto& v : f.targets[i].views)
      obj += oracle::horn_distance(forward(p, v.input).coords(), f.latents.latents[i].coords());
    total += obj / f.targets[i].views.size();
  }
  EXPECT_NEAR(view_consistency_loss(p, f.targets, f.latents), total / 4.0, 1e-10);
}

TEST(TotalLoss, ComposesTerms) {
  oracle::Rng rng(7);
  const auto f = random_fixture(rng, 5, 3, 2);
  const auto p = PredictorParams::init({3 * kD, {6}, kD}, 7);
  TrainConfig c;
  c.lambda = 0.7;
  c.mu = 0.3;
  const auto l = total_loss(p, f.source, f.targets, f.latents, c);
  const double expect = labeled_loss(p, f.source) + 0.7 * view_consistency_loss(p, f.targets, f.latents) +
                        0.3 * chamfer_alignment(f.latents, label_bank(f.source));
  EXPECT_NEAR(l.total, expect, 1e-12);

  c.lambda = 0.0;
  c.mu = 0.0;
  EXPECT_DOUBLE_EQ(total_loss(p, f.source, f.targets, f.latents, c).total, labeled_loss(p, f.source));

  c.lambda = 0.7;
  c.mu = 0.3;
  c.ablation = Ablation::kDropAlign;
  EXPECT_NEAR(total_loss(p, f.source, f.targets, f.latents, c).total,
              labeled_loss(p, f.source) + 0.7 * view_consistency_loss(p, f.targets, f.latents), 1e-12);
}

TEST(Ablation, DropViewSplitsObjectsIntoSingleViews) {
  oracle::Rng rng(8);
  const auto f = random_fixture(rng, 2, 3, 4);
  const auto split = regroup_for_ablation(f.targets, Ablation::kDropView);
  ASSERT_EQ(split.size(), 12u);
  for (std::size_t k = 0; k < split.size(); ++k) {
    EXPECT_EQ(split[k].object_id, static_cast<int>(k));
    ASSERT_EQ(split[k].views.size(), 1u);
    EXPECT_EQ(split[k].views[0].input, f.targets[k / 4].views[k % 4].input);
  }
  EXPECT_EQ(regroup_for_ablation(f.targets, Ablation::kFull).size(), 3u);
  EXPECT_EQ(parse_ablation("drop-view"), Ablation::kDropView);
  EXPECT_EQ(parse_ablation("reinit"), Ablation::kReinitLatents);
  EXPECT_THROW(parse_ablation("nope"), InvalidInput);
}

TEST(TargetGradient, ZeroWithoutViewTerm) {
  oracle::Rng rng(9);
  const auto f = random_fixture(rng, 2, 2, 2);
  const auto p = PredictorParams::init({3 * kD, {5}, kD}, 9);
  const auto g = target_batch_gradient(p, f.targets, f.latents, {{0, 0}, {1, 1}}, 0.0, 3.0);
  EXPECT_EQ(squared_norm(g), 0.0);
}

TEST(TargetGradient, BatchesSumToFullGradient) {
  // Summing every view once with scale 1 gives lambda * grad f_view, which
  // is checked against finite differences of the loss.
  oracle::Rng rng(10);
  auto f = random_fixture(rng, 2, 2, 3);
  const Architecture arch{3 * kD, {3}, kD};
  const auto p = PredictorParams::init(arch, 10);
  const auto g = target_batch_gradient(p, f.targets, f.latents, {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}}, 0.5, 1.0);
  // Finite differences over the output bias, whose gradient is cheap to probe.
  const int last = static_cast<int>(p.layers.size()) - 1;
  for (int k = 0; k < 6; ++k) {
    auto q = p;
    q.layers[last].bias(k) += 1e-5;
    const double up = view_consistency_loss(q, f.targets, f.latents);
    q.layers[last].bias(k) -= 2e-5;
    const double down = view_consistency_loss(q, f.targets, f.latents);
    EXPECT_NEAR(g[last].bias(k), 0.5 * (up - down) / 2e-5, 1e-6);
  }
}

TEST(Pretrain, LinearlyRealizableFixtureFits) {
  oracle::Rng rng(11);
  const int in = 12, d = 4;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(3 * d, in) * 0.5;
  std::vector<ViewSample> src;
  for (int k = 0; k < 64; ++k) {
    const Eigen::VectorXd x = Eigen::VectorXd::Random(in);
    const Eigen::VectorXd y = a * x;
    ViewSample s;
    s.object_id = k;
    s.input = x;
    s.gt_keypoints = center(Eigen::Map<const Eigen::Matrix3Xd>(y.data(), 3, d));
    src.push_back(std::move(s));
  }
  TrainConfig c;
  c.pretrain_epochs = 400;
  c.sgd.learning_rate = 0.05;
  c.sgd.weight_decay = 0.0;
  c.sgd.batch_size = 16;
  c.sgd.lr_drop_epoch = 300;
  const auto p = pretrain(Architecture{in, {}, d}, src, c);
  EXPECT_LT(labeled_loss(p, src), 1e-4);
}

TEST(Pretrain, RejectsZeroEpochs) {
  oracle::Rng rng(12);
  auto c = quiet_config();
  c.pretrain_epochs = 0;
  EXPECT_THROW(pretrain(Architecture{3 * kD, {}, kD}, random_fixture(rng, 3, 1, 1).source, c), InvalidInput);
}

TEST(Pretrain, DeterministicForSeed) {
  oracle::Rng rng(13);
  const auto f = random_fixture(rng, 10, 1, 1);
  const Architecture arch{3 * kD, {5}, kD};
  const auto a = pretrain(arch, f.source, quiet_config());
  const auto b = pretrain(arch, f.source, quiet_config());
  EXPECT_EQ(predictor_to_json(a), predictor_to_json(b));
}

TEST(Adapt, RejectsDegenerateAndUninitialized) {
  oracle::Rng rng(14);
  const auto f = random_fixture(rng, 6, 2, 2);
  auto c = quiet_config();
  auto state = make_state({3 * kD, {4}, kD}, c);
  EXPECT_THROW(adapt(state, f.source, f.targets, c), InvalidState);
  initialize_latents(state, f.source, f.targets, c);
  c.lambda = 0.0;
  c.mu = 0.0;
  EXPECT_THROW(adapt(state, f.source, f.targets, c), InvalidInput);
  c.lambda = 1.0;
  EXPECT_THROW(adapt(state, f.source, {f.targets.front()}, c), InvalidState);
}

TEST(Adapt, FixedPointStaysPut) {
  // Targets are rotated copies of source labels, the identity predictor
  // reproduces its input, and latents equal the labels: every term is zero.
  oracle::Rng rng(15);
  std::vector<ViewSample> src;
  std::vector<ViewSet> targets;
  LatentSet lat;
  for (int k = 0; k < 4; ++k) {
    const KeypointConfig y(oracle::random_centered(rng, kD));
    src.push_back(sample(y.coords(), y, k));
    ViewSet set;
    set.object_id = k;
    for (int j = 0; j < 3; ++j) set.views.push_back(sample(center(oracle::random_rotation(rng) * y.coords()).coords(), y, k, j));
    targets.push_back(std::move(set));
    lat.latents.push_back(y);
  }
  auto c = quiet_config();
  c.sgd.weight_decay = 0.0;
  TrainState state;
  state.params = identity_predictor(kD);
  state.velocity = zeros_like(state.params.layers);
  state.latents = lat;
  state.latents_initialized = true;

  struct Recorder : TrainObserver {
    std::vector<EpochRecord> epochs;
    std::vector<LatentUpdateRecord> updates;
    void on_epoch(const EpochRecord& r) override { epochs.push_back(r); }
    void on_latent_update(const LatentUpdateRecord& r) override { updates.push_back(r); }
  } rec;
  adapt(state, src, targets, c, &rec);
  ASSERT_EQ(rec.epochs.size(), 5u);
  for (const auto& e : rec.epochs) EXPECT_LT(e.total, 1e-12);
  ASSERT_EQ(rec.updates.size(), 1u);
  for (int k = 0; k < 4; ++k) EXPECT_LT((state.latents.latents[k].coords() - lat.latents[k].coords()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Adapt, LatentUpdatesNeverIncreaseObjective) {
  oracle::Rng rng(16);
  const auto f = random_fixture(rng, 12, 4, 3);
  auto c = quiet_config();
  c.adapt_epochs = 10;
  c.latent_update_period_epochs = 2;
  auto state = make_state({3 * kD, {6}, kD}, c);
  pretrain(state, f.source, c);
  initialize_latents(state, f.source, f.targets, c);
  struct Recorder : TrainObserver {
    std::vector<LatentUpdateRecord> updates;
    void on_latent_update(const LatentUpdateRecord& r) override { updates.push_back(r); }
  } rec;
  adapt(state, f.source, f.targets, c, &rec);
  ASSERT_EQ(rec.updates.size(), 5u);
  for (const auto& u : rec.updates) EXPECT_LE(u.objective_after, u.objective_before + 1e-9);
}
