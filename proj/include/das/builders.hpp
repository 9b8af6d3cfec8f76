#pragma once

// Builders for the four control tasks: camera motion over a static scene,
// rigid manipulation of a masked object, animated meshes, and imported
// tracker output. Each returns a TrackSet plus the ColorMap of its frame 0.

#include "das/geometry.hpp"
#include "das/render.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace das {

enum class TrajectoryKind { Left, Right, Up, Down, Spiral, Keyframed };

std::string_view to_string(TrajectoryKind kind);
/// Throws InvalidArgument on unknown names.
TrajectoryKind trajectory_kind_from_string(std::string_view name);

struct PoseKeyframe {
  int frame = 0;
  Pose pose;
};

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::Right;
  /// Travel distance of the linear presets, meters.
  double magnitude = 0.5;
  /// Spiral circle radius; defaults to magnitude when unset.
  std::optional<double> radius;
  double turns = 1.0;
  std::vector<PoseKeyframe> keyframes;
  int frames = 49;
  std::optional<Vec3> look_at;
};

/// World-to-camera path for a trajectory. Presets move the camera center
/// from the origin over frames 0..T-1; the spiral circles in the xy-plane
/// with angle 2*pi*turns*t/T, so a whole number of turns does not revisit the
/// start. All paths are rebased so pose[0] is the identity.
CameraPath make_camera_path(const TrajectorySpec& spec, const Intrinsics& intr);

/// Rotation whose camera looks from center toward target with +y (down) as
/// the up hint.
Mat3 look_at_rotation(const Vec3& center, const Vec3& target);

struct TransformKeyframe {
  int frame = 0;
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();
};

struct TransformTimeline {
  /// Empty means the foreground centroid.
  std::optional<Vec3> pivot;
  std::vector<TransformKeyframe> keyframes;
};

struct RigidTransform {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();
};

/// Throws BadKeyframes unless frames are strictly increasing inside [0, T-1]
/// and a keyframe at frame 0 is the identity.
void validate_timeline(const TransformTimeline& timeline, int frames);

/// Slerp/lerp between keyframes; frame 0 is the identity and frames after
/// the last keyframe hold it.
RigidTransform interpolate_timeline(const TransformTimeline& timeline, int frame);

/// Binary H x W mask.
struct Mask {
  int width = 0, height = 0;
  std::vector<std::uint8_t> values;

  bool at(int u, int v) const {
    return values[static_cast<std::size_t>(v) * width + u] != 0;
  }
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
};

/// Frames of one animated mesh with constant topology.
struct MeshSequence {
  std::vector<TriangleMesh> frames;

  /// Throws EmptyMesh, TopologyMismatch, BadMesh, or NonPositiveZ.
  void validate() const;
};

struct SurfaceSample {
  std::uint32_t face = 0;
  /// Weights of the face's three vertices, summing to one.
  Vec3 barycentric = Vec3(1, 0, 0);
};

struct ControlTracks {
  TrackSet tracks;
  ColorMap colors;
};

ControlTracks build_camera_control(const PointCloud& points,
                                   const CameraPath& path);

/// Foreground is every point whose source pixel is set in the mask.
ControlTracks build_object_manipulation(const PointCloud& points,
                                        const Mask& mask,
                                        const TransformTimeline& timeline,
                                        int frames);

/// Area-weighted surface samples on mesh frame 0, drawn with Pcg32(seed).
/// Triangles are chosen by inverse CDF on one uniform; barycentrics use
/// (1 - sqrt(r1), sqrt(r1)(1 - r2), sqrt(r1) r2).
std::vector<SurfaceSample> sample_surface(const TriangleMesh& mesh,
                                          std::size_t count, std::uint64_t seed);

/// Carries fixed surface samples through every mesh frame.
ControlTracks tracks_from_samples(const MeshSequence& meshes,
                                  const std::vector<SurfaceSample>& samples);

ControlTracks build_mesh_tracks(const MeshSequence& meshes, std::size_t samples,
                                std::uint64_t seed);

ControlTracks import_tracks(const std::filesystem::path& trk_file);

/// Repeats a single-pose path to the requested length; longer paths must
/// already match.
CameraPath broadcast_path(const CameraPath& path, std::size_t frames);

}  // namespace das
