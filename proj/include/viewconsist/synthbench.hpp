#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "viewconsist/procrustes.hpp"

namespace viewconsist {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Style parameters of one chair, in raw (unnormalized) object units.
// Axes: x across the seat, y up, z towards the front.
struct ChairParams {
  double leg_height = 1.0;
  double seat_width = 1.0;
  double seat_depth = 1.0;
  double back_height = 1.0;
  double leg_splay = 0.0;  // leg bottoms pushed outward by this fraction of the seat half-extent
  double back_tilt = 0.0;  // backrest top pushed backward by this distance
  int subtype = 0;
};

struct SubtypeRanges {
  std::string name;
  Range leg_height;
  Range seat_width;
  Range seat_depth;
  Range back_height;
  Range leg_splay;
  Range back_tilt;
};

struct ParamDistribution {
  std::vector<double> subtype_weights;
};

// Chair-like keypoint template: 4 leg bottoms, 4 seat corners, 2 backrest top
// corners (d = 10), with surface points traced along the 11 skeleton edges.
struct ShapeTemplate {
  std::string name = "chair";
  int surface_points = 96;
  std::vector<SubtypeRanges> subtypes;
  ParamDistribution source;
  ParamDistribution target;

  static constexpr int kKeypoints = 10;

  static ShapeTemplate chair();

  int keypoints() const { return kKeypoints; }
  int input_dim() const { return 3 * surface_points; }

  // Raw skeleton, columns ordered: leg bottoms FL FR BL BR, seat corners
  // FL FR BL BR, backrest top L R.
  Eigen::Matrix3Xd skeleton(const ChairParams& p) const;
  // surface_points samples along the skeleton edges, in the skeleton's frame.
  // The slot -> (edge, position) layout is fixed.
  Eigen::Matrix3Xd surface(const ChairParams& p) const;

  void validate() const;
};

// Input corruption applied to target views.
struct DomainShiftConfig {
  double noise_std = 0.0;     // Gaussian jitter per coordinate, in diagonal lengths
  double dropout_rate = 0.0;  // fraction of points removed, farthest from the camera first
  int clutter_count = 0;      // surface slots overwritten by random background points
  double scale_jitter = 0.0;  // per-view input scale drawn from [1 - j, 1 + j]

  void validate() const;
  bool is_null() const {
    return noise_std == 0.0 && dropout_rate == 0.0 && clutter_count == 0 && scale_jitter == 0.0;
  }
};

struct ViewSample {
  int object_id = 0;
  int view_id = 0;
  Eigen::VectorXd input;        // flattened camera-frame points (x0 y0 z0 x1 ...)
  KeypointConfig gt_keypoints;  // camera frame; never consumed by adaptation
  double diagonal = 1.0;        // bounding-box diagonal of the object-frame ground truth
  Rotation camera_rotation;     // diagnostics only
};

struct ViewSet {
  int object_id = 0;
  std::vector<ViewSample> views;
};

// Dropped points are replaced by this value after centering.
inline constexpr double kSentinel = 0.0;

// Object-frame ground truth: centered skeleton scaled to unit bounding-box
// diagonal, plus the surface in the same frame.
struct ObjectGeometry {
  KeypointConfig keypoints;
  Eigen::Matrix3Xd surface;
  double diagonal = 1.0;
};

ObjectGeometry normalized_geometry(const ShapeTemplate& tmpl, const ChairParams& p);

double bounding_box_diagonal(const Eigen::Matrix3Xd& points);

// Uniformly distributed rotation from three uniform [0, 1) numbers (Shoemake).
Rotation rotation_from_uniforms(double u1, double u2, double u3);

// Labeled source views. Clean inputs; labels are the gt keypoints.
std::vector<ViewSample> generate_source(const ShapeTemplate& tmpl, int n_models,
                                        int views_per_model, std::uint64_t seed);

// Unlabeled target view sets; corruption touches inputs only.
std::vector<ViewSet> generate_target(const ShapeTemplate& tmpl, int n_models, int views_per_model,
                                     const DomainShiftConfig& shift, std::uint64_t seed);

// Generation with an explicit distribution; the two functions above use the
// template's source/target distributions.
std::vector<ViewSet> generate_views(const ShapeTemplate& tmpl, const ParamDistribution& dist,
                                    int n_models, int views_per_model,
                                    const DomainShiftConfig& shift, std::uint64_t seed);

std::vector<ViewSample> flatten(const std::vector<ViewSet>& sets);

}  // namespace viewconsist
