#pragma once

// End-to-end control bundles shared by the command line and the HTTP
// service, so both produce byte-identical artifacts for the same inputs.
//
// Bundle layout:
//   frame_0000.png ... frame_{T-1}.png   rendered tracking video
//   manifest.json                         {"T", "width", "height", "files"}
//   tracks.trk                            TRK1 tracks
//   camera.json                           camera path used for rendering

#include "das/archive.hpp"
#include "das/builders.hpp"
#include "das/geometry.hpp"
#include "das/render.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace das {

inline constexpr int kDefaultWidth = 720;
inline constexpr int kDefaultHeight = 480;
inline constexpr int kDefaultGrid = 70;

/// fx = fy = width, principal point at the image center.
Intrinsics default_intrinsics(int width, int height);

/// Identity path of the given length.
CameraPath static_path(const Intrinsics& intr, std::size_t frames);

struct Bundle {
  TrackSet tracks;
  ColorMap colors;
  CameraPath path;
  FrameSequence video;
};

Bundle camera_bundle(const PointCloud& points, const Intrinsics& intr,
                     const TrajectorySpec& spec, const RenderOptions& opts = {});

/// Static camera; the masked object follows the timeline.
Bundle object_bundle(const PointCloud& points, const Intrinsics& intr, const Mask& mask,
                     const TransformTimeline& timeline, int frames,
                     const RenderOptions& opts = {});

/// The camera path is broadcast to the mesh length when it has one pose.
Bundle mesh_bundle(const MeshSequence& meshes, std::size_t samples, std::uint64_t seed,
                   const CameraPath& camera, const RenderOptions& opts = {});

/// The camera path is broadcast to the track length when it has one pose.
Bundle tracks_bundle(const TrackSet& tracks, const CameraPath& camera,
                     const RenderOptions& opts = {});

/// Named files of a bundle in a fixed order.
std::vector<ArchiveEntry> bundle_entries(const Bundle& bundle);

/// Creates dir if needed and writes every bundle file into it.
void write_bundle(const std::filesystem::path& dir, const Bundle& bundle);

std::vector<std::uint8_t> bundle_tar(const Bundle& bundle);

std::string frame_name(std::size_t t);

}  // namespace das
