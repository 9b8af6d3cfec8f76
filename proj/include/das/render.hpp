#pragma once

#include "das/geometry.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace das {

/// T x N point trajectories in first-frame camera space. Stored as 32-bit
/// floats so the TRK1 container round-trips them exactly.
class TrackSet {
 public:
  TrackSet() = default;
  TrackSet(std::size_t frames, std::size_t points);

  std::size_t frames() const { return frames_; }
  std::size_t points() const { return points_; }

  Eigen::Vector3f& at(std::size_t t, std::size_t i) {
    return positions_[t * points_ + i];
  }
  const Eigen::Vector3f& at(std::size_t t, std::size_t i) const {
    return positions_[t * points_ + i];
  }
  Vec3 position(std::size_t t, std::size_t i) const {
    return at(t, i).cast<double>();
  }
  std::vector<Vec3> frame(std::size_t t) const;

  bool has_visibility() const { return !visibility_.empty(); }
  /// Allocates an all-visible plane.
  void enable_visibility();
  bool visible(std::size_t t, std::size_t i) const {
    return visibility_.empty() || visibility_[t * points_ + i] != 0;
  }
  void set_visible(std::size_t t, std::size_t i, bool v) {
    visibility_[t * points_ + i] = v ? 1 : 0;
  }

  std::span<const Eigen::Vector3f> positions() const { return positions_; }
  std::span<const std::uint8_t> visibility() const { return visibility_; }

  /// Throws NonPositiveZ when a frame-0 point is not strictly in front of
  /// the first camera.
  void validate() const;

  bool operator==(const TrackSet&) const = default;

 private:
  std::size_t frames_ = 0;
  std::size_t points_ = 0;
  std::vector<Eigen::Vector3f> positions_;
  std::vector<std::uint8_t> visibility_;
};

/// Colors derived from frame 0 of a TrackSet.
ColorMap colorize(const TrackSet& tracks);

struct Image {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, Rgb8 fill = {0, 0, 0});

  Rgb8 pixel(int x, int y) const {
    const std::size_t k = 3 * (static_cast<std::size_t>(y) * width + x);
    return {rgb[k], rgb[k + 1], rgb[k + 2]};
  }
  void set_pixel(int x, int y, Rgb8 c) {
    const std::size_t k = 3 * (static_cast<std::size_t>(y) * width + x);
    rgb[k] = c[0];
    rgb[k + 1] = c[1];
    rgb[k + 2] = c[2];
  }

  bool operator==(const Image&) const = default;
};

struct FrameSequence {
  std::vector<Image> frames;

  std::size_t size() const { return frames.size(); }
  bool operator==(const FrameSequence&) const = default;
};

struct RenderOptions {
  /// Each point paints a (2r+1)^2 square.
  int splat_radius = 1;
  Rgb8 background{0, 0, 0};
  /// 0 picks the hardware concurrency.
  unsigned workers = 0;
};

struct RenderedFrame {
  Image image;
  /// Winning point per pixel, -1 where the background shows.
  std::vector<std::int32_t> owner;
};

RenderedFrame render_frame_with_owners(const TrackSet& tracks,
                                       const ColorMap& colors,
                                       const Intrinsics& intr, const Pose& pose,
                                       std::size_t frame_idx,
                                       const RenderOptions& opts = {});

Image render_frame(const TrackSet& tracks, const ColorMap& colors,
                   const Intrinsics& intr, const Pose& pose,
                   std::size_t frame_idx, const RenderOptions& opts = {});

/// Frame t is rendered through path.poses[t]. Output is bit-identical for
/// every worker count.
FrameSequence render_video(const TrackSet& tracks, const ColorMap& colors,
                           const CameraPath& path,
                           const RenderOptions& opts = {});

}  // namespace das
