#include "das/pipeline.hpp"

#include "das/error.hpp"
#include "das/formats.hpp"
#include "das/json_io.hpp"
#include "das/png_io.hpp"

#include <cstdio>

namespace das {

Intrinsics default_intrinsics(int width, int height) {
  Intrinsics intr{static_cast<double>(width), static_cast<double>(width),
                  (width - 1) / 2.0, (height - 1) / 2.0, width, height};
  intr.validate();
  return intr;
}

CameraPath static_path(const Intrinsics& intr, std::size_t frames) {
  return {intr, std::vector<Pose>(frames, Pose::identity())};
}

namespace {

Bundle render_bundle(ControlTracks control, CameraPath path, const RenderOptions& opts) {
  Bundle b{std::move(control.tracks), std::move(control.colors), std::move(path), {}};
  b.video = render_video(b.tracks, b.colors, b.path, opts);
  return b;
}

}  // namespace

Bundle camera_bundle(const PointCloud& points, const Intrinsics& intr,
                     const TrajectorySpec& spec, const RenderOptions& opts) {
  CameraPath path = make_camera_path(spec, intr);
  ControlTracks control = build_camera_control(points, path);
  return render_bundle(std::move(control), std::move(path), opts);
}

Bundle object_bundle(const PointCloud& points, const Intrinsics& intr, const Mask& mask,
                     const TransformTimeline& timeline, int frames,
                     const RenderOptions& opts) {
  ControlTracks control = build_object_manipulation(points, mask, timeline, frames);
  CameraPath path = static_path(intr, control.tracks.frames());
  return render_bundle(std::move(control), std::move(path), opts);
}

Bundle mesh_bundle(const MeshSequence& meshes, std::size_t samples, std::uint64_t seed,
                   const CameraPath& camera, const RenderOptions& opts) {
  ControlTracks control = build_mesh_tracks(meshes, samples, seed);
  CameraPath path = broadcast_path(camera, control.tracks.frames());
  return render_bundle(std::move(control), std::move(path), opts);
}

Bundle tracks_bundle(const TrackSet& tracks, const CameraPath& camera,
                     const RenderOptions& opts) {
  tracks.validate();
  ControlTracks control{tracks, colorize(tracks)};
  CameraPath path = broadcast_path(camera, tracks.frames());
  return render_bundle(std::move(control), std::move(path), opts);
}

std::string frame_name(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu.png", t);
  return buf;
}

std::vector<ArchiveEntry> bundle_entries(const Bundle& bundle) {
  std::vector<ArchiveEntry> entries;
  FrameManifest manifest;
  manifest.frames = bundle.video.size();
  manifest.width = bundle.path.intrinsics.width;
  manifest.height = bundle.path.intrinsics.height;
  for (std::size_t t = 0; t < bundle.video.size(); ++t) {
    manifest.files.push_back(frame_name(t));
    entries.push_back({manifest.files.back(), encode_png(bundle.video.frames[t])});
  }
  auto text = [](const Json& j) {
    const std::string s = canonical_dump(j);
    return std::vector<std::uint8_t>(s.begin(), s.end());
  };
  entries.push_back({"manifest.json", text(to_json(manifest))});
  entries.push_back({"tracks.trk", encode_trackset(bundle.tracks)});
  entries.push_back({"camera.json", text(to_json(bundle.path))});
  return entries;
}

void write_bundle(const std::filesystem::path& dir, const Bundle& bundle) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string());
  for (const auto& e : bundle_entries(bundle)) write_file(dir / e.name, e.data);
}

std::vector<std::uint8_t> bundle_tar(const Bundle& bundle) {
  return write_tar(bundle_entries(bundle));
}

}  // namespace das
