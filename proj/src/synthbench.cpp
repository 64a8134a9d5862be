#include "viewconsist/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "viewconsist/errors.hpp"

namespace viewconsist {

namespace {

constexpr int kEdges[11][2] = {
    {0, 4}, {1, 5}, {2, 6}, {3, 7},  // legs
    {4, 5}, {5, 7}, {7, 6}, {6, 4},  // seat rim
    {6, 8}, {7, 9},                  // backrest posts
    {8, 9},                          // backrest top rail
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per (seed, model, purpose).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t model, std::uint64_t purpose) {
  return splitmix64(splitmix64(seed) ^ splitmix64(model * 0x100000001b3ULL + purpose));
}

double draw(std::mt19937_64& rng, const Range& r) {
  std::uniform_real_distribution<double> u(r.lo, r.hi);
  return r.lo == r.hi ? r.lo : u(rng);
}

void check_range(const Range& r, const char* what) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw InvalidInput(std::string("invalid range for ") + what);
  }
}

ChairParams sample_params(const ShapeTemplate& tmpl, const ParamDistribution& dist,
                          std::mt19937_64& rng) {
  std::discrete_distribution<int> pick(dist.subtype_weights.begin(), dist.subtype_weights.end());
  ChairParams p;
  p.subtype = pick(rng);
  const SubtypeRanges& s = tmpl.subtypes[static_cast<std::size_t>(p.subtype)];
  p.leg_height = draw(rng, s.leg_height);
  p.seat_width = draw(rng, s.seat_width);
  p.seat_depth = draw(rng, s.seat_depth);
  p.back_height = draw(rng, s.back_height);
  p.leg_splay = draw(rng, s.leg_splay);
  p.back_tilt = draw(rng, s.back_tilt);
  return p;
}

Rotation sample_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double u1 = u(rng);
  const double u2 = u(rng);
  const double u3 = u(rng);
  return rotation_from_uniforms(u1, u2, u3);
}

Eigen::VectorXd make_input(const Eigen::Matrix3Xd& camera_points, const DomainShiftConfig& shift,
                           std::mt19937_64& rng) {
  Eigen::Matrix3Xd pts = camera_points;
  const Eigen::Index s = pts.cols();

  if (shift.scale_jitter > 0.0) {
    std::uniform_real_distribution<double> u(1.0 - shift.scale_jitter, 1.0 + shift.scale_jitter);
    pts *= u(rng);
  }
  if (shift.noise_std > 0.0) {
    std::normal_distribution<double> n(0.0, shift.noise_std);
    for (Eigen::Index c = 0; c < s; ++c) {
      for (int r = 0; r < 3; ++r) pts(r, c) += n(rng);
    }
  }
  if (shift.clutter_count > 0) {
    std::vector<Eigen::Index> slots(static_cast<std::size_t>(s));
    std::iota(slots.begin(), slots.end(), Eigen::Index{0});
    std::shuffle(slots.begin(), slots.end(), rng);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const auto count = std::min<Eigen::Index>(shift.clutter_count, s);
    for (Eigen::Index k = 0; k < count; ++k) {
      for (int r = 0; r < 3; ++r) pts(r, slots[static_cast<std::size_t>(k)]) = u(rng);
    }
  }

  // Self-occlusion analog: the points deepest along the viewing axis (+z)
  // are removed first.
  std::vector<bool> visible(static_cast<std::size_t>(s), true);
  const auto n_drop = static_cast<Eigen::Index>(std::llround(shift.dropout_rate * static_cast<double>(s)));
  if (n_drop > 0) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(s));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return pts(2, a) > pts(2, b); });
    for (Eigen::Index k = 0; k < n_drop; ++k) visible[static_cast<std::size_t>(order[k])] = false;
  }

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Index n_visible = 0;
  for (Eigen::Index c = 0; c < s; ++c) {
    if (visible[static_cast<std::size_t>(c)]) {
      mean += pts.col(c);
      ++n_visible;
    }
  }
  if (n_visible > 0) mean /= static_cast<double>(n_visible);

  Eigen::VectorXd input(3 * s);
  for (Eigen::Index c = 0; c < s; ++c) {
    const bool keep = visible[static_cast<std::size_t>(c)];
    for (int r = 0; r < 3; ++r) input(3 * c + r) = keep ? pts(r, c) - mean(r) : kSentinel;
  }
  return input;
}

}  // namespace

ShapeTemplate ShapeTemplate::chair() {
  ShapeTemplate t;
  t.subtypes = {
      {"side_chair", {0.40, 0.50}, {0.40, 0.50}, {0.40, 0.50}, {0.40, 0.55}, {0.00, 0.10}, {0.00, 0.08}},
      {"bar_stool", {0.65, 0.80}, {0.32, 0.40}, {0.32, 0.40}, {0.15, 0.30}, {0.10, 0.25}, {0.00, 0.05}},
      {"lounge", {0.15, 0.28}, {0.55, 0.70}, {0.55, 0.70}, {0.50, 0.70}, {0.00, 0.05}, {0.10, 0.25}},
  };
  t.source.subtype_weights = {0.5, 0.3, 0.2};
  t.target.subtype_weights = {0.1, 0.3, 0.6};
  return t;
}

void ShapeTemplate::validate() const {
  if (surface_points < 11) {
    throw InvalidInput("surface_points must cover every skeleton edge (>= 11)");
  }
  if (subtypes.empty()) throw InvalidInput("template has no subtypes");
  for (const auto& s : subtypes) {
    check_range(s.leg_height, "leg_height");
    check_range(s.seat_width, "seat_width");
    check_range(s.seat_depth, "seat_depth");
    check_range(s.back_height, "back_height");
    check_range(s.leg_splay, "leg_splay");
    check_range(s.back_tilt, "back_tilt");
  }
  for (const ParamDistribution* d : {&source, &target}) {
    if (d->subtype_weights.size() != subtypes.size()) {
      throw InvalidInput("subtype weights must have one entry per subtype");
    }
    double total = 0.0;
    for (double w : d->subtype_weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("subtype weights must be nonnegative");
      total += w;
    }
    if (!(total > 0.0)) throw InvalidInput("subtype weights must not all be zero");
  }
}

Eigen::Matrix3Xd ShapeTemplate::skeleton(const ChairParams& p) const {
  const double hw = 0.5 * p.seat_width;
  const double hd = 0.5 * p.seat_depth;
  const double h = p.leg_height;
  const double spread = 1.0 + p.leg_splay;
  Eigen::Matrix3Xd k(3, kKeypoints);
  // seat corners FL FR BL BR
  k.col(4) << -hw, h, hd;
  k.col(5) << hw, h, hd;
  k.col(6) << -hw, h, -hd;
  k.col(7) << hw, h, -hd;
  for (int leg = 0; leg < 4; ++leg) {
    const Eigen::Vector3d seat = k.col(4 + leg);
    k.col(leg) << spread * seat.x(), 0.0, spread * seat.z();
  }
  k.col(8) << -hw, h + p.back_height, -hd - p.back_tilt;
  k.col(9) << hw, h + p.back_height, -hd - p.back_tilt;
  return k;
}

Eigen::Matrix3Xd ShapeTemplate::surface(const ChairParams& p) const {
  const Eigen::Matrix3Xd k = skeleton(p);
  constexpr int n_edges = 11;
  const int base = surface_points / n_edges;
  const int extra = surface_points % n_edges;
  Eigen::Matrix3Xd pts(3, surface_points);
  int slot = 0;
  for (int e = 0; e < n_edges; ++e) {
    const int count = base + (e < extra ? 1 : 0);
    const Eigen::Vector3d a = k.col(kEdges[e][0]);
    const Eigen::Vector3d b = k.col(kEdges[e][1]);
    for (int j = 0; j < count; ++j) {
      const double t = (j + 0.5) / count;
      pts.col(slot++) = a + t * (b - a);
    }
  }
  return pts;
}

void DomainShiftConfig::validate() const {
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw InvalidInput("noise_std must be >= 0");
  if (!(dropout_rate >= 0.0 && dropout_rate <= 1.0)) throw InvalidInput("dropout_rate must be in [0, 1]");
  if (clutter_count < 0) throw InvalidInput("clutter_count must be >= 0");
  if (!(scale_jitter >= 0.0 && scale_jitter < 1.0)) throw InvalidInput("scale_jitter must be in [0, 1)");
}

double bounding_box_diagonal(const Eigen::Matrix3Xd& points) {
  return (points.rowwise().maxCoeff() - points.rowwise().minCoeff()).norm();
}

ObjectGeometry normalized_geometry(const ShapeTemplate& tmpl, const ChairParams& p) {
  const Eigen::Matrix3Xd raw = tmpl.skeleton(p);
  const Eigen::Vector3d centroid = raw.rowwise().mean();
  const double scale = 1.0 / bounding_box_diagonal(raw);
  Eigen::Matrix3Xd kp = (raw.colwise() - centroid) * scale;
  Eigen::Matrix3Xd surf = (tmpl.surface(p).colwise() - centroid) * scale;
  ObjectGeometry g{center(kp), std::move(surf), 0.0};
  g.diagonal = bounding_box_diagonal(g.keypoints.coords());
  return g;
}

Rotation rotation_from_uniforms(double u1, double u2, double u3) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return Rotation::from_quaternion(b * std::cos(two_pi * u3), a * std::sin(two_pi * u2),
                                   a * std::cos(two_pi * u2), b * std::sin(two_pi * u3));
}

std::vector<ViewSet> generate_views(const ShapeTemplate& tmpl, const ParamDistribution& dist,
                                    int n_models, int views_per_model,
                                    const DomainShiftConfig& shift, std::uint64_t seed) {
  if (n_models < 1 || views_per_model < 1) {
    throw InvalidInput("need at least one model and one view per model");
  }
  tmpl.validate();
  shift.validate();
  if (dist.subtype_weights.size() != tmpl.subtypes.size()) {
    throw InvalidInput("subtype weights must have one entry per subtype");
  }

  std::vector<ViewSet> sets;
  sets.reserve(static_cast<std::size_t>(n_models));
  for (int m = 0; m < n_models; ++m) {
    std::mt19937_64 geometry_rng(derive_seed(seed, static_cast<std::uint64_t>(m), 1));
    std::mt19937_64 corruption_rng(derive_seed(seed, static_cast<std::uint64_t>(m), 2));
    const ChairParams params = sample_params(tmpl, dist, geometry_rng);
    const ObjectGeometry geom = normalized_geometry(tmpl, params);

    ViewSet set;
    set.object_id = m;
    for (int v = 0; v < views_per_model; ++v) {
      const Rotation cam = sample_rotation(geometry_rng);
      ViewSample s;
      s.object_id = m;
      s.view_id = v;
      s.camera_rotation = cam;
      s.gt_keypoints = cam.apply(geom.keypoints);
      s.diagonal = geom.diagonal;
      s.input = make_input(cam.matrix() * geom.surface, shift, corruption_rng);
      set.views.push_back(std::move(s));
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

std::vector<ViewSample> generate_source(const ShapeTemplate& tmpl, int n_models,
                                        int views_per_model, std::uint64_t seed) {
  return flatten(generate_views(tmpl, tmpl.source, n_models, views_per_model, DomainShiftConfig{}, seed));
}

std::vector<ViewSet> generate_target(const ShapeTemplate& tmpl, int n_models, int views_per_model,
                                     const DomainShiftConfig& shift, std::uint64_t seed) {
  return generate_views(tmpl, tmpl.target, n_models, views_per_model, shift, seed);
}

std::vector<ViewSample> flatten(const std::vector<ViewSet>& sets) {
  std::vector<ViewSample> out;
  for (const auto& s : sets) out.insert(out.end(), s.views.begin(), s.views.end());
  return out;
}

}  // namespace viewconsist
