#pragma once

#include "das/geometry.hpp"

#include <vector>

namespace das {

struct Correspondence {
  Vec2 first;  ///< pixel in the reference (first) frame
  Vec2 other;  ///< pixel in frame t
};

struct CorrespondenceSet {
  Intrinsics intrinsics;
  std::vector<Correspondence> pairs;
};

struct EightPointOptions {
  /// Minimum fraction of correspondences triangulated in front of both
  /// cameras by the winning decomposition.
  double min_in_front = 0.75;
  /// Ratio sigma_8 / sigma_1 of the epipolar system below which the null
  /// space is treated as more than one-dimensional (no parallax).
  double rank_tolerance = 1e-10;
};

/// Relative pose of frame t with respect to the first frame from
/// calibrated correspondences: Hartley-normalized linear eight-point
/// estimate, projection onto the essential manifold, and a cheirality vote
/// among the four (R, +-t) decompositions using midpoint triangulation.
/// x_t = R x_first + t, with t recovered up to scale.
RelPose estimate_relative_pose_8pt(const CorrespondenceSet& corr,
                                   const EightPointOptions& opts = {});

/// Closest point between rays c1 + s d1 and c2 + u d2; false when the rays
/// are parallel.
bool triangulate_midpoint(const Vec3& c1, const Vec3& d1, const Vec3& c2,
                          const Vec3& d2, Vec3& out);

}  // namespace das
