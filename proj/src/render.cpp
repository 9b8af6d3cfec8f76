#include "das/render.hpp"

#include "das/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

namespace das {

TrackSet::TrackSet(std::size_t frames, std::size_t points)
    : frames_(frames), points_(points), positions_(frames * points) {
  if (frames == 0 || points == 0) {
    fail(ErrorCode::InvalidArgument, "a TrackSet needs T >= 1 and N >= 1");
  }
}

std::vector<Vec3> TrackSet::frame(std::size_t t) const {
  std::vector<Vec3> out(points_);
  for (std::size_t i = 0; i < points_; ++i) out[i] = position(t, i);
  return out;
}

void TrackSet::enable_visibility() {
  if (visibility_.empty()) visibility_.assign(frames_ * points_, 1);
}

void TrackSet::validate() const {
  if (frames_ == 0 || points_ == 0) {
    fail(ErrorCode::InvalidArgument, "empty TrackSet");
  }
  for (std::size_t i = 0; i < points_; ++i) {
    if (!(at(0, i).z() > 0)) {
      fail(ErrorCode::NonPositiveZ,
           "frame-0 point " + std::to_string(i) + " has z <= 0");
    }
  }
}

ColorMap colorize(const TrackSet& tracks) { return colorize(tracks.frame(0)); }

Image::Image(int w, int h, Rgb8 fill) : width(w), height(h) {
  rgb.resize(3 * static_cast<std::size_t>(w) * h);
  for (std::size_t k = 0; k < rgb.size(); k += 3) {
    rgb[k] = fill[0];
    rgb[k + 1] = fill[1];
    rgb[k + 2] = fill[2];
  }
}

RenderedFrame render_frame_with_owners(const TrackSet& tracks,
                                       const ColorMap& colors,
                                       const Intrinsics& intr, const Pose& pose,
                                       std::size_t frame_idx,
                                       const RenderOptions& opts) {
  intr.validate();
  if (colors.size() != tracks.points()) {
    fail(ErrorCode::SizeMismatch, "ColorMap has " + std::to_string(colors.size()) +
                                      " entries for " +
                                      std::to_string(tracks.points()) + " points");
  }
  if (frame_idx >= tracks.frames()) {
    fail(ErrorCode::FrameOutOfRange, "frame " + std::to_string(frame_idx) +
                                         " of " + std::to_string(tracks.frames()));
  }
  if (opts.splat_radius < 0) {
    fail(ErrorCode::InvalidArgument, "splat radius must be >= 0");
  }

  const int w = intr.width;
  const int h = intr.height;
  RenderedFrame out;
  out.image = Image(w, h, opts.background);
  out.owner.assign(static_cast<std::size_t>(w) * h, -1);
  std::vector<double> zbuf(out.owner.size(),
                           std::numeric_limits<double>::infinity());

  const int r = opts.splat_radius;
  for (std::size_t i = 0; i < tracks.points(); ++i) {
    if (!tracks.visible(frame_idx, i)) continue;
    const Projection p = project(tracks.position(frame_idx, i), intr, pose);
    if (!p.visible) continue;
    const int cu = static_cast<int>(std::floor(p.u + 0.5));
    const int cv = static_cast<int>(std::floor(p.v + 0.5));
    const int x0 = std::max(cu - r, 0), x1 = std::min(cu + r, w - 1);
    const int y0 = std::max(cv - r, 0), y1 = std::min(cv + r, h - 1);
    const Rgb8 c = colors.quantized[i];
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t k = static_cast<std::size_t>(y) * w + x;
        // Strict test: equal depths keep the lower point index.
        if (p.depth < zbuf[k]) {
          zbuf[k] = p.depth;
          out.owner[k] = static_cast<std::int32_t>(i);
          out.image.set_pixel(x, y, c);
        }
      }
    }
  }
  return out;
}

Image render_frame(const TrackSet& tracks, const ColorMap& colors,
                   const Intrinsics& intr, const Pose& pose,
                   std::size_t frame_idx, const RenderOptions& opts) {
  return render_frame_with_owners(tracks, colors, intr, pose, frame_idx, opts)
      .image;
}

FrameSequence render_video(const TrackSet& tracks, const ColorMap& colors,
                           const CameraPath& path, const RenderOptions& opts) {
  if (path.frames() != tracks.frames()) {
    fail(ErrorCode::LengthMismatch,
         "camera path has " + std::to_string(path.frames()) + " poses for " +
             std::to_string(tracks.frames()) + " frames");
  }
  path.intrinsics.validate();
  if (colors.size() != tracks.points()) {
    fail(ErrorCode::SizeMismatch, "ColorMap does not match TrackSet");
  }

  FrameSequence seq;
  seq.frames.resize(tracks.frames());

  unsigned workers = opts.workers ? opts.workers : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1,
                                 static_cast<unsigned>(tracks.frames()));

  // Frames are independent; each worker pulls the next index and owns its
  // z-buffer, so the result does not depend on scheduling.
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t t = next++; t < tracks.frames(); t = next++) {
      seq.frames[t] =
          render_frame(tracks, colors, path.intrinsics, path.poses[t], t, opts);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned k = 0; k < workers; ++k) pool.emplace_back(work);
  }
  return seq;
}

}  // namespace das
