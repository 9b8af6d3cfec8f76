#pragma once

// Projective geometry kernel for tracking videos.
//
// Conventions: pinhole camera, OpenCV axes (x right, y down, z forward).
// Poses map world to camera, x_cam = R(q) * x_world + t. The world frame is
// the first frame's camera, so pose[0] of every CameraPath is the identity.
// Integer pixel indices sit at pixel centers: pixel (u, v) unprojects along
// the ray through (u, v), and a projection (u, v) lands in pixel
// (floor(u + 0.5), floor(v + 0.5)).

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace das {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kNearPlane = 1e-4;
inline constexpr double kDegenerateSpan = 1e-9;

struct Intrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  /// Throws InvalidIntrinsics unless fx, fy > 0, 0 <= cx < width and
  /// 0 <= cy < height.
  void validate() const;

  bool operator==(const Intrinsics&) const = default;
};

/// Rigid world-to-camera transform. The stored quaternion is always unit
/// length with a non-negative scalar part.
class Pose {
 public:
  Pose() = default;
  /// Accepts any finite quaternion within 1e-3 of unit norm and
  /// renormalizes it; anything else throws NonUnitQuaternion.
  Pose(const Quat& q, const Vec3& t);

  static Pose identity() { return {}; }
  static Pose from_rotation(const Mat3& r, const Vec3& t);

  const Quat& q() const { return q_; }
  const Vec3& t() const { return t_; }
  Mat3 rotation() const { return q_.toRotationMatrix(); }
  /// Camera center in world coordinates, -R^T t.
  Vec3 center() const;

  Vec3 apply(const Vec3& world) const { return rotation() * world + t_; }
  Pose inverse() const;
  /// (this * other)(x) = this(other(x)).
  Pose operator*(const Pose& other) const;

  bool operator==(const Pose& other) const {
    return q_.coeffs() == other.q_.coeffs() && t_ == other.t_;
  }

 private:
  Quat q_ = Quat::Identity();
  Vec3 t_ = Vec3::Zero();
};

struct CameraPath {
  Intrinsics intrinsics;
  std::vector<Pose> poses;

  std::size_t frames() const { return poses.size(); }
};

/// Dense H x W depth in meters, row-major.
struct DepthMap {
  int width = 0, height = 0;
  std::vector<float> values;

  float at(int u, int v) const {
    return values[static_cast<std::size_t>(v) * width + u];
  }
};

struct PointCloud {
  std::vector<Vec3> positions;
  /// Integer pixel of origin for points sampled from a depth map; empty when
  /// the cloud came from elsewhere.
  std::vector<std::array<int, 2>> source_pixels;

  std::size_t size() const { return positions.size(); }
};

/// Frame-0 normalization ranges of the color encoding.
struct ColorBounds {
  double x_min = 0, x_max = 0;
  double y_min = 0, y_max = 0;
  double inv_z_min = 0, inv_z_max = 0;
};

using Rgb8 = std::array<std::uint8_t, 3>;

/// Per-point RGB colors: R from x, G from y, B from 1/z, each normalized
/// over the frame-0 cloud.
struct ColorMap {
  std::vector<Vec3> colors;
  std::vector<Rgb8> quantized;
  ColorBounds bounds;

  std::size_t size() const { return colors.size(); }
};

struct RelPose {
  Quat q = Quat::Identity();
  Vec3 t_dir = Vec3::Zero();
  /// Set when |t| < 1e-9, in which case t_dir is zero.
  bool pure_rotation = false;
};

struct Projection {
  double u = 0, v = 0;
  double depth = 0;
  bool visible = false;
};

/// Pixel (u, v) with depth d to camera space.
Vec3 unproject_pixel(double u, double v, double depth, const Intrinsics& intr);

/// Samples grid x grid pixels on an even lattice and lifts them to camera
/// space. Pixel k along an axis of length n is floor((k + 0.5) * n / grid).
PointCloud unproject_depth(const DepthMap& depth, const Intrinsics& intr,
                           int grid);

ColorMap colorize(const std::vector<Vec3>& positions);
inline ColorMap colorize(const PointCloud& cloud) {
  return colorize(cloud.positions);
}

/// Pure function of the bounds, shared by colorize and viewers that recolor
/// subsets with a fixed normalization.
Vec3 color_of(const Vec3& p, const ColorBounds& bounds);
Rgb8 quantize(const Vec3& color);

Projection project(const Vec3& world, const Intrinsics& intr, const Pose& pose);

/// Pose of frame b relative to frame a: R = R_b R_a^T, t = t_b - R t_a.
RelPose relative_pose(const Pose& a, const Pose& b);

/// Shortest-arc spherical interpolation between unit quaternions.
Quat slerp(const Quat& q0, const Quat& q1, double s);

Quat quat_from_matrix(const Mat3& r);
/// Flips sign so w >= 0.
Quat canonical(const Quat& q);
/// Angle between two rotations in radians.
double rotation_angle(const Quat& a, const Quat& b);

void require_unit(const Quat& q, double tol = 1e-6);

}  // namespace das
