#include "das/geometry.hpp"

#include "das/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace das {

void Intrinsics::validate() const {
  const bool ok = std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) &&
                  std::isfinite(cy) && fx > 0 && fy > 0 && width > 0 &&
                  height > 0 && cx >= 0 && cx < width && cy >= 0 &&
                  cy < height;
  if (!ok) {
    fail(ErrorCode::InvalidIntrinsics,
         "intrinsics need fx, fy > 0 and a principal point inside the image");
  }
}

Quat canonical(const Quat& q) {
  if (q.w() < 0) return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  return q;
}

void require_unit(const Quat& q, double tol) {
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > tol) {
    fail(ErrorCode::NonUnitQuaternion,
         "quaternion norm " + std::to_string(n) + " is not 1");
  }
}

Pose::Pose(const Quat& q, const Vec3& t) : t_(t) {
  require_unit(q, 1e-3);
  if (!t.allFinite()) fail(ErrorCode::InvalidArgument, "non-finite translation");
  q_ = canonical(q.normalized());
}

Pose Pose::from_rotation(const Mat3& r, const Vec3& t) {
  return Pose(quat_from_matrix(r), t);
}

Vec3 Pose::center() const { return -(rotation().transpose() * t_); }

Pose Pose::inverse() const {
  const Quat qi = q_.conjugate();
  return Pose(qi, -(qi * t_));
}

Pose Pose::operator*(const Pose& other) const {
  return Pose(q_ * other.q_, q_ * other.t_ + t_);
}

Vec3 unproject_pixel(double u, double v, double depth, const Intrinsics& intr) {
  return {(u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy,
          depth};
}

PointCloud unproject_depth(const DepthMap& depth, const Intrinsics& intr,
                           int grid) {
  intr.validate();
  if (depth.width != intr.width || depth.height != intr.height ||
      depth.values.size() !=
          static_cast<std::size_t>(depth.width) * depth.height) {
    fail(ErrorCode::SizeMismatch, "depth map size does not match intrinsics");
  }
  if (grid < 1) fail(ErrorCode::InvalidArgument, "grid must be at least 1");
  if (grid > std::min(depth.width, depth.height)) {
    fail(ErrorCode::GridTooLarge,
         "grid " + std::to_string(grid) + " exceeds image side " +
             std::to_string(std::min(depth.width, depth.height)));
  }

  const auto lattice = [grid](int n, int k) {
    return static_cast<int>(std::floor((k + 0.5) * n / grid));
  };

  PointCloud cloud;
  cloud.positions.reserve(static_cast<std::size_t>(grid) * grid);
  cloud.source_pixels.reserve(cloud.positions.capacity());
  for (int row = 0; row < grid; ++row) {
    const int v = lattice(depth.height, row);
    for (int col = 0; col < grid; ++col) {
      const int u = lattice(depth.width, col);
      const double d = depth.at(u, v);
      if (!std::isfinite(d) || d <= 0) {
        fail(ErrorCode::NonPositiveDepth,
             "depth at pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                 ") is not a positive number");
      }
      cloud.positions.push_back(unproject_pixel(u, v, d, intr));
      cloud.source_pixels.push_back({u, v});
    }
  }
  return cloud;
}

namespace {

double normalize_channel(double value, double lo, double hi) {
  const double span = hi - lo;
  if (span < kDegenerateSpan) return 0.5;
  return std::clamp((value - lo) / span, 0.0, 1.0);
}

}  // namespace

Vec3 color_of(const Vec3& p, const ColorBounds& b) {
  return {normalize_channel(p.x(), b.x_min, b.x_max),
          normalize_channel(p.y(), b.y_min, b.y_max),
          normalize_channel(1.0 / p.z(), b.inv_z_min, b.inv_z_max)};
}

Rgb8 quantize(const Vec3& c) {
  Rgb8 out{};
  for (int k = 0; k < 3; ++k) {
    out[k] = static_cast<std::uint8_t>(
        std::lround(255.0 * std::clamp(c[k], 0.0, 1.0)));
  }
  return out;
}

ColorMap colorize(const std::vector<Vec3>& positions) {
  if (positions.empty()) fail(ErrorCode::InvalidArgument, "empty point set");

  ColorBounds b;
  b.x_min = b.y_min = b.inv_z_min = INFINITY;
  b.x_max = b.y_max = b.inv_z_max = -INFINITY;
  for (const Vec3& p : positions) {
    if (!(p.z() > 0) || !p.allFinite()) {
      fail(ErrorCode::NonPositiveZ, "colorization needs finite points with z > 0");
    }
    const double iz = 1.0 / p.z();
    b.x_min = std::min(b.x_min, p.x());
    b.x_max = std::max(b.x_max, p.x());
    b.y_min = std::min(b.y_min, p.y());
    b.y_max = std::max(b.y_max, p.y());
    b.inv_z_min = std::min(b.inv_z_min, iz);
    b.inv_z_max = std::max(b.inv_z_max, iz);
  }

  ColorMap map;
  map.bounds = b;
  map.colors.reserve(positions.size());
  map.quantized.reserve(positions.size());
  for (const Vec3& p : positions) {
    map.colors.push_back(color_of(p, b));
    map.quantized.push_back(quantize(map.colors.back()));
  }
  return map;
}

Projection project(const Vec3& world, const Intrinsics& intr, const Pose& pose) {
  const Vec3 cam = pose.apply(world);
  Projection out;
  out.depth = cam.z();
  if (!(cam.z() > kNearPlane)) return out;
  out.u = intr.fx * cam.x() / cam.z() + intr.cx;
  out.v = intr.fy * cam.y() / cam.z() + intr.cy;
  out.visible = out.u >= 0 && out.u < intr.width && out.v >= 0 &&
                out.v < intr.height;
  return out;
}

RelPose relative_pose(const Pose& a, const Pose& b) {
  require_unit(a.q());
  require_unit(b.q());
  RelPose rel;
  const Quat q = b.q() * a.q().conjugate();
  rel.q = canonical(q.normalized());
  const Vec3 t = b.t() - rel.q * a.t();
  if (t.norm() < 1e-9) {
    rel.pure_rotation = true;
  } else {
    rel.t_dir = t.normalized();
  }
  return rel;
}

Quat slerp(const Quat& q0, const Quat& q1, double s) {
  require_unit(q0);
  require_unit(q1);
  Eigen::Vector4d a = q0.coeffs();
  Eigen::Vector4d b = q1.coeffs();
  double d = a.dot(b);
  if (d < 0) {
    b = -b;
    d = -d;
  }
  Eigen::Vector4d r;
  if (d > 1.0 - 1e-12) {
    r = ((1.0 - s) * a + s * b).normalized();
  } else {
    const double theta = std::acos(std::min(d, 1.0));
    const double st = std::sin(theta);
    r = (std::sin((1.0 - s) * theta) / st) * a + (std::sin(s * theta) / st) * b;
    r.normalize();
  }
  Quat out;
  out.coeffs() = r;
  return out;
}

Quat quat_from_matrix(const Mat3& r) {
  return canonical(Quat(r).normalized());
}

double rotation_angle(const Quat& a, const Quat& b) {
  // atan2 keeps precision for nearly equal rotations, where acos does not.
  const Quat d = a.conjugate() * b;
  return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

}  // namespace das
