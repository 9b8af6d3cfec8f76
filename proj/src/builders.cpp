#include "das/builders.hpp"

#include "das/error.hpp"
#include "das/formats.hpp"
#include "das/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace das {

std::string_view to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::Left: return "left";
    case TrajectoryKind::Right: return "right";
    case TrajectoryKind::Up: return "up";
    case TrajectoryKind::Down: return "down";
    case TrajectoryKind::Spiral: return "spiral";
    case TrajectoryKind::Keyframed: return "keyframed";
  }
  return "unknown";
}

TrajectoryKind trajectory_kind_from_string(std::string_view name) {
  for (auto k : {TrajectoryKind::Left, TrajectoryKind::Right, TrajectoryKind::Up,
                 TrajectoryKind::Down, TrajectoryKind::Spiral,
                 TrajectoryKind::Keyframed}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorCode::InvalidArgument, "unknown trajectory kind '" + std::string(name) + "'");
}

Mat3 look_at_rotation(const Vec3& center, const Vec3& target) {
  const Vec3 forward = target - center;
  if (forward.norm() < 1e-12) {
    fail(ErrorCode::InvalidArgument, "look_at target coincides with camera center");
  }
  const Vec3 z = forward.normalized();
  Vec3 x = Vec3::UnitY().cross(z);
  if (x.norm() < 1e-9) {
    fail(ErrorCode::InvalidArgument, "look_at direction is parallel to the up hint");
  }
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 cam_to_world;
  cam_to_world << x, y, z;
  return cam_to_world.transpose();
}

namespace {

void validate_pose_keyframes(const std::vector<PoseKeyframe>& keys, int frames) {
  if (keys.empty()) fail(ErrorCode::BadKeyframes, "keyframed trajectory without keyframes");
  if (keys.front().frame != 0 || keys.back().frame != frames - 1) {
    fail(ErrorCode::BadKeyframes, "keyframes must start at frame 0 and end at frame T-1");
  }
  for (std::size_t k = 1; k < keys.size(); ++k) {
    if (keys[k].frame <= keys[k - 1].frame) {
      fail(ErrorCode::BadKeyframes, "keyframe frames must be strictly increasing");
    }
  }
}

Pose interpolate_pose_keyframes(const std::vector<PoseKeyframe>& keys, int frame) {
  auto hi = std::lower_bound(keys.begin(), keys.end(), frame,
                             [](const PoseKeyframe& k, int f) { return k.frame < f; });
  if (hi->frame == frame) return hi->pose;
  auto lo = std::prev(hi);
  const double s = static_cast<double>(frame - lo->frame) / (hi->frame - lo->frame);
  const Quat q = slerp(lo->pose.q(), hi->pose.q(), s);
  const Vec3 t = (1.0 - s) * lo->pose.t() + s * hi->pose.t();
  return Pose(q, t);
}

Pose pose_at_center(const Vec3& center, const std::optional<Vec3>& look_at) {
  if (!look_at) return Pose(Quat::Identity(), -center);
  const Mat3 r = look_at_rotation(center, *look_at);
  return Pose::from_rotation(r, -(r * center));
}

}  // namespace

CameraPath make_camera_path(const TrajectorySpec& spec, const Intrinsics& intr) {
  intr.validate();
  if (spec.frames < 2) {
    fail(ErrorCode::ZeroFrames, "a trajectory needs at least 2 frames");
  }
  if (!std::isfinite(spec.magnitude) || !std::isfinite(spec.turns)) {
    fail(ErrorCode::InvalidArgument, "non-finite trajectory parameter");
  }
  const int n = spec.frames;
  CameraPath path;
  path.intrinsics = intr;
  path.poses.reserve(n);

  if (spec.kind == TrajectoryKind::Keyframed) {
    validate_pose_keyframes(spec.keyframes, n);
    for (int t = 0; t < n; ++t) {
      path.poses.push_back(interpolate_pose_keyframes(spec.keyframes, t));
    }
  } else {
    const double m = spec.magnitude;
    const double radius = spec.radius.value_or(m);
    for (int t = 0; t < n; ++t) {
      const double travel = m * t / (n - 1);
      Vec3 c = Vec3::Zero();
      switch (spec.kind) {
        case TrajectoryKind::Left: c.x() = -travel; break;
        case TrajectoryKind::Right: c.x() = travel; break;
        case TrajectoryKind::Up: c.y() = -travel; break;
        case TrajectoryKind::Down: c.y() = travel; break;
        case TrajectoryKind::Spiral: {
          const double theta = 2.0 * std::numbers::pi * spec.turns * t / n;
          c = Vec3(radius * (std::cos(theta) - 1.0), radius * std::sin(theta), 0.0);
          break;
        }
        case TrajectoryKind::Keyframed: break;
      }
      path.poses.push_back(pose_at_center(c, spec.look_at));
    }
  }

  if (!(path.poses.front() == Pose::identity())) {
    const Pose to_first = path.poses.front().inverse();
    for (Pose& p : path.poses) p = p * to_first;
    path.poses.front() = Pose::identity();
  }
  return path;
}

void validate_timeline(const TransformTimeline& timeline, int frames) {
  if (frames < 1) fail(ErrorCode::ZeroFrames, "timeline needs at least one frame");
  int prev = -1;
  for (const auto& k : timeline.keyframes) {
    if (k.frame <= prev || k.frame < 0 || k.frame > frames - 1) {
      fail(ErrorCode::BadKeyframes,
           "timeline keyframes must be strictly increasing inside [0, T-1]");
    }
    require_unit(k.rotation, 1e-6);
    if (!k.translation.allFinite()) {
      fail(ErrorCode::NonFiniteValue, "non-finite keyframe translation");
    }
    if (k.frame == 0 && (rotation_angle(k.rotation, Quat::Identity()) > 1e-9 ||
                         k.translation.norm() > 1e-12)) {
      fail(ErrorCode::BadKeyframes, "the frame-0 transform must be the identity");
    }
    prev = k.frame;
  }
  if (timeline.pivot && !timeline.pivot->allFinite()) {
    fail(ErrorCode::NonFiniteValue, "non-finite pivot");
  }
}

RigidTransform interpolate_timeline(const TransformTimeline& timeline, int frame) {
  const auto& keys = timeline.keyframes;
  if (keys.empty() || frame <= 0) return {};
  if (frame >= keys.back().frame) {
    return {keys.back().rotation.normalized(), keys.back().translation};
  }
  auto hi = std::lower_bound(keys.begin(), keys.end(), frame,
                             [](const TransformKeyframe& k, int f) { return k.frame < f; });
  if (hi->frame == frame) return {hi->rotation.normalized(), hi->translation};
  TransformKeyframe lo_key;  // implicit identity at frame 0
  if (hi != keys.begin()) lo_key = *std::prev(hi);
  const double s = static_cast<double>(frame - lo_key.frame) / (hi->frame - lo_key.frame);
  return {slerp(lo_key.rotation.normalized(), hi->rotation.normalized(), s),
          (1.0 - s) * lo_key.translation + s * hi->translation};
}

ControlTracks build_camera_control(const PointCloud& points, const CameraPath& path) {
  if (points.size() == 0) fail(ErrorCode::InvalidArgument, "empty point cloud");
  if (path.frames() == 0) fail(ErrorCode::ZeroFrames, "empty camera path");
  ControlTracks out{TrackSet(path.frames(), points.size()), {}};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector3f p = points.positions[i].cast<float>();
    for (std::size_t t = 0; t < path.frames(); ++t) out.tracks.at(t, i) = p;
  }
  out.tracks.validate();
  out.colors = colorize(out.tracks);
  return out;
}

ControlTracks build_object_manipulation(const PointCloud& points, const Mask& mask,
                                        const TransformTimeline& timeline,
                                        int frames) {
  if (points.size() == 0) fail(ErrorCode::InvalidArgument, "empty point cloud");
  if (points.source_pixels.size() != points.size()) {
    fail(ErrorCode::MissingSourcePixels,
         "object manipulation needs the source pixel of every point");
  }
  if (mask.values.size() != static_cast<std::size_t>(mask.width) * mask.height) {
    fail(ErrorCode::SizeMismatch, "malformed mask");
  }
  validate_timeline(timeline, frames);

  std::vector<bool> foreground(points.size(), false);
  Vec3 centroid = Vec3::Zero();
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [u, v] = points.source_pixels[i];
    if (u < 0 || v < 0 || u >= mask.width || v >= mask.height) {
      fail(ErrorCode::SizeMismatch, "source pixel outside the mask");
    }
    if (mask.at(u, v)) {
      foreground[i] = true;
      centroid += points.positions[i];
      ++count;
    }
  }
  if (count == 0) fail(ErrorCode::NoForegroundPoints, "mask selects no points");
  centroid /= static_cast<double>(count);
  const Vec3 pivot = timeline.pivot.value_or(centroid);

  ControlTracks out{TrackSet(frames, points.size()), {}};
  for (int t = 0; t < frames; ++t) {
    const RigidTransform xf = interpolate_timeline(timeline, t);
    const bool identity = xf.rotation.coeffs() == Quat::Identity().coeffs() &&
                          xf.translation == Vec3::Zero();
    const Mat3 r = xf.rotation.toRotationMatrix();
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Vec3& p = points.positions[i];
      if (!foreground[i] || identity) {
        out.tracks.at(t, i) = p.cast<float>();
      } else {
        out.tracks.at(t, i) = (r * (p - pivot) + pivot + xf.translation).cast<float>();
      }
    }
  }
  out.tracks.validate();
  out.colors = colorize(out.tracks);
  return out;
}

void MeshSequence::validate() const {
  if (frames.empty() || frames.front().vertices.empty() || frames.front().faces.empty()) {
    fail(ErrorCode::EmptyMesh, "mesh sequence has no geometry");
  }
  const auto& ref = frames.front();
  for (const auto& f : ref.faces) {
    for (auto idx : f) {
      if (idx >= ref.vertices.size()) fail(ErrorCode::BadMesh, "face index out of range");
    }
  }
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (frames[k].vertices.size() != ref.vertices.size() || frames[k].faces != ref.faces) {
      fail(ErrorCode::TopologyMismatch,
           "mesh frame " + std::to_string(k) + " changes topology");
    }
  }
  for (const auto& f : frames) {
    for (const Vec3& v : f.vertices) {
      if (!v.allFinite()) fail(ErrorCode::NonFiniteValue, "non-finite vertex");
    }
  }
  for (const Vec3& v : ref.vertices) {
    if (!(v.z() > 0)) fail(ErrorCode::NonPositiveZ, "frame-0 vertex with z <= 0");
  }
}

std::vector<SurfaceSample> sample_surface(const TriangleMesh& mesh, std::size_t count,
                                          std::uint64_t seed) {
  std::vector<double> cdf;
  cdf.reserve(mesh.faces.size());
  double total = 0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    total += 0.5 * (b - a).cross(c - a).norm();
    cdf.push_back(total);
  }
  if (!(total > 0)) fail(ErrorCode::EmptyMesh, "mesh has zero surface area");

  Pcg32 rng(seed);
  std::vector<SurfaceSample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), pick);
    if (it == cdf.end()) --it;
    // upper_bound never lands on a zero-area face.
    const auto face = static_cast<std::uint32_t>(it - cdf.begin());
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    out.push_back({face, Vec3(1.0 - r1, r1 * (1.0 - r2), r1 * r2)});
  }
  return out;
}

ControlTracks tracks_from_samples(const MeshSequence& meshes,
                                  const std::vector<SurfaceSample>& samples) {
  meshes.validate();
  if (samples.empty()) fail(ErrorCode::InvalidArgument, "no surface samples");
  ControlTracks out{TrackSet(meshes.frames.size(), samples.size()), {}};
  for (std::size_t t = 0; t < meshes.frames.size(); ++t) {
    const auto& mesh = meshes.frames[t];
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const SurfaceSample& s = samples[i];
      if (s.face >= mesh.faces.size()) fail(ErrorCode::BadMesh, "sample face out of range");
      const auto& f = mesh.faces[s.face];
      const Vec3 p = s.barycentric[0] * mesh.vertices[f[0]] +
                     s.barycentric[1] * mesh.vertices[f[1]] +
                     s.barycentric[2] * mesh.vertices[f[2]];
      out.tracks.at(t, i) = p.cast<float>();
    }
  }
  out.tracks.validate();
  out.colors = colorize(out.tracks);
  return out;
}

ControlTracks build_mesh_tracks(const MeshSequence& meshes, std::size_t samples,
                                std::uint64_t seed) {
  if (samples == 0) fail(ErrorCode::InvalidArgument, "n_samples must be at least 1");
  meshes.validate();
  return tracks_from_samples(meshes, sample_surface(meshes.frames.front(), samples, seed));
}

ControlTracks import_tracks(const std::filesystem::path& trk_file) {
  ControlTracks out{read_trackset(trk_file), {}};
  out.colors = colorize(out.tracks);
  return out;
}

CameraPath broadcast_path(const CameraPath& path, std::size_t frames) {
  if (path.frames() == frames) return path;
  if (path.frames() != 1) {
    fail(ErrorCode::LengthMismatch,
         "camera path has " + std::to_string(path.frames()) + " poses for " +
             std::to_string(frames) + " frames");
  }
  CameraPath out = path;
  out.poses.assign(frames, path.poses.front());
  return out;
}

}  // namespace das
