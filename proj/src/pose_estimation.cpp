#include "das/pose_estimation.hpp"

#include "das/error.hpp"

#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <string>

namespace das {

namespace {

// Similarity that moves the centroid to the origin and scales the mean
// distance to sqrt(2).
Mat3 hartley_transform(const std::vector<Vec2>& pts) {
  Vec2 mean = Vec2::Zero();
  for (const Vec2& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double dist = 0;
  for (const Vec2& p : pts) dist += (p - mean).norm();
  dist /= static_cast<double>(pts.size());
  const double s = dist > 0 ? std::sqrt(2.0) / dist : 1.0;
  Mat3 t;
  t << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
  return t;
}

}  // namespace

bool triangulate_midpoint(const Vec3& c1, const Vec3& d1, const Vec3& c2,
                          const Vec3& d2, Vec3& out) {
  // Minimize |c1 + s d1 - c2 - u d2|^2 over (s, u).
  const Vec3 w = c1 - c2;
  const double a = d1.dot(d1), b = d1.dot(d2), c = d2.dot(d2);
  const double d = d1.dot(w), e = d2.dot(w);
  const double denom = a * c - b * b;
  if (std::abs(denom) <= 1e-14 * a * c) return false;
  const double s = (b * e - c * d) / denom;
  const double u = (a * e - b * d) / denom;
  out = 0.5 * ((c1 + s * d1) + (c2 + u * d2));
  return true;
}

RelPose estimate_relative_pose_8pt(const CorrespondenceSet& corr,
                                   const EightPointOptions& opts) {
  const std::size_t m = corr.pairs.size();
  if (m < 8) {
    fail(ErrorCode::TooFewCorrespondences,
         "eight-point needs at least 8 correspondences, got " + std::to_string(m));
  }
  const Intrinsics& k = corr.intrinsics;
  k.validate();

  std::vector<Vec2> x1(m), x2(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& p = corr.pairs[i];
    if (!p.first.allFinite() || !p.other.allFinite()) {
      fail(ErrorCode::NonFiniteValue, "non-finite correspondence");
    }
    x1[i] = {(p.first.x() - k.cx) / k.fx, (p.first.y() - k.cy) / k.fy};
    x2[i] = {(p.other.x() - k.cx) / k.fx, (p.other.y() - k.cy) / k.fy};
  }
  const Mat3 t1 = hartley_transform(x1);
  const Mat3 t2 = hartley_transform(x2);

  // Rows of x2^T E x1 = 0 with E stored row-major.
  Eigen::MatrixXd a(m, 9);
  for (std::size_t i = 0; i < m; ++i) {
    const Vec3 p = t1 * x1[i].homogeneous();
    const Vec3 q = t2 * x2[i].homogeneous();
    a.row(static_cast<Eigen::Index>(i)) << q.x() * p.x(), q.x() * p.y(), q.x(),
        q.y() * p.x(), q.y() * p.y(), q.y(), p.x(), p.y(), 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_a(a, Eigen::ComputeFullV);
  const auto& sv = svd_a.singularValues();
  if (!(sv(0) > 0) || sv(7) / sv(0) < opts.rank_tolerance) {
    fail(ErrorCode::DegenerateConfiguration,
         "epipolar system has no unique solution (no parallax or planar scene)");
  }
  const Eigen::Matrix<double, 9, 1> e_vec = svd_a.matrixV().col(8);
  Mat3 e_norm;
  e_norm << e_vec(0), e_vec(1), e_vec(2), e_vec(3), e_vec(4), e_vec(5), e_vec(6),
      e_vec(7), e_vec(8);
  Mat3 e = t2.transpose() * e_norm * t1;

  Eigen::JacobiSVD<Mat3> svd_e(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd_e.matrixU();
  Mat3 v = svd_e.matrixV();
  if (u.determinant() < 0) u = -u;
  if (v.determinant() < 0) v = -v;
  // Projection onto the essential manifold: singular values (s, s, 0). The
  // decomposition below only depends on U and V, so E itself is not rebuilt.
  Mat3 w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const std::array<Mat3, 2> rotations = {u * w * v.transpose(),
                                         u * w.transpose() * v.transpose()};
  const Vec3 t_base = u.col(2);

  int best_count = -1;
  RelPose best;
  for (const Mat3& r : rotations) {
    for (double sign : {1.0, -1.0}) {
      const Vec3 t = sign * t_base;
      const Vec3 c2 = -(r.transpose() * t);
      int count = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const Vec3 d1 = x1[i].homogeneous();
        const Vec3 d2 = r.transpose() * x2[i].homogeneous();
        Vec3 x;
        if (!triangulate_midpoint(Vec3::Zero(), d1, c2, d2, x)) continue;
        if (x.z() > 0 && (r * x + t).z() > 0) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best.q = quat_from_matrix(r);
        best.t_dir = t.normalized();
      }
    }
  }
  const double frac = static_cast<double>(best_count) / static_cast<double>(m);
  if (frac < opts.min_in_front) {
    fail(ErrorCode::DegenerateConfiguration,
         "best decomposition puts only " + std::to_string(frac) +
             " of the points in front of both cameras");
  }
  return best;
}

}  // namespace das
