#pragma once

#include "das/geometry.hpp"
#include "das/render.hpp"

#include <vector>

namespace das {

struct AngularError {
  double degrees = 0;
  std::size_t frames_used = 0;
};

/// arccos of the mean |<q_gen, q_gt>| in degrees. The absolute value makes
/// q and -q count as the same rotation.
AngularError rot_err(const std::vector<Quat>& gen, const std::vector<Quat>& gt);

/// arccos of the mean dot product of unit translation directions in
/// degrees. Frames where either vector is shorter than 1e-6 are skipped;
/// with nothing left the error is 0 and frames_used is 0.
AngularError trans_err(const std::vector<Vec3>& gen, const std::vector<Vec3>& gt);

struct PoseErrors {
  double rot_err = 0;    ///< degrees
  double trans_err = 0;  ///< degrees
  std::size_t frames_used = 0;
};

/// Compares two camera paths through their poses relative to their own
/// first frame, over frames 1..T-1.
PoseErrors compare_paths(const CameraPath& gen, const CameraPath& gt);

inline constexpr double kPsnrCap = 99.0;

/// Mean over frames of 10 log10(255^2 / MSE), MSE over all channels;
/// identical frames score kPsnrCap.
double psnr(const Image& a, const Image& b);
double psnr(const FrameSequence& a, const FrameSequence& b);

/// SSIM on Rec.601 luma with an 11-tap Gaussian window (sigma 1.5), K1 =
/// 0.01, K2 = 0.03, L = 255, averaged over valid window positions and then
/// frames. Images narrower than the window use a window clipped to the
/// image.
double ssim(const Image& a, const Image& b);
double ssim(const FrameSequence& a, const FrameSequence& b);

}  // namespace das
