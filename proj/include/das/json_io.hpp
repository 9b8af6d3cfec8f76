#pragma once

// JSON schemas shared by the CLI and the HTTP service.
//
// camera path: {"intrinsics": {"fx","fy","cx","cy","width","height"},
//               "frames": [{"q": [qw,qx,qy,qz], "t": [x,y,z]}, ...]}
// timeline:    {"pivot": "centroid" | [x,y,z],
//               "keyframes": [{"frame": k, "q": [...], "t": [...]}, ...]}
// trajectory:  {"kind": "left"|"right"|"up"|"down"|"spiral"|"keyframed",
//               "frames": T, "magnitude": m, "radius": r, "turns": n,
//               "look_at": [x,y,z], "keyframes": [{"frame","q","t"}, ...]}
// manifest:    {"T": n, "width": w, "height": h, "files": [...]}
//
// Canonical form is nlohmann's sorted-key dump with two-space indent and a
// trailing newline; doubles print in shortest round-trip form.

#include "das/builders.hpp"
#include "das/geometry.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace das {

using Json = nlohmann::json;

std::string canonical_dump(const Json& j);
/// Throws BadJson on syntax errors.
Json parse_json(std::string_view text);
Json read_json(const std::filesystem::path& file);
void write_json(const std::filesystem::path& file, const Json& j);

Json to_json(const Intrinsics& intr);
Intrinsics intrinsics_from_json(const Json& j);

Json to_json(const CameraPath& path);
CameraPath camera_path_from_json(const Json& j);
CameraPath read_camera_path(const std::filesystem::path& file);
void write_camera_path(const std::filesystem::path& file, const CameraPath& path);

Json to_json(const TransformTimeline& timeline);
TransformTimeline timeline_from_json(const Json& j);
TransformTimeline read_timeline(const std::filesystem::path& file);
void write_timeline(const std::filesystem::path& file, const TransformTimeline& timeline);

Json to_json(const TrajectorySpec& spec);
TrajectorySpec trajectory_spec_from_json(const Json& j);

struct FrameManifest {
  std::size_t frames = 0;
  int width = 0, height = 0;
  std::vector<std::string> files;
};

Json to_json(const FrameManifest& manifest);
FrameManifest manifest_from_json(const Json& j);

Json to_json(const ColorBounds& bounds);

}  // namespace das
