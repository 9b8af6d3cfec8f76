#include "das/metrics.hpp"

#include "das/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace das {

namespace {

double degrees_of_mean(double sum, std::size_t n) {
  const double mean = std::clamp(sum / static_cast<double>(n), -1.0, 1.0);
  return std::acos(mean) * 180.0 / std::numbers::pi;
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    fail(ErrorCode::LengthMismatch,
         "sequences have " + std::to_string(a) + " and " + std::to_string(b) + " entries");
  }
}

}  // namespace

AngularError rot_err(const std::vector<Quat>& gen, const std::vector<Quat>& gt) {
  check_lengths(gen.size(), gt.size());
  if (gen.empty()) fail(ErrorCode::LengthMismatch, "rot_err needs at least one frame");
  double sum = 0;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    require_unit(gen[i]);
    require_unit(gt[i]);
    sum += std::abs(gen[i].coeffs().dot(gt[i].coeffs()));
  }
  return {degrees_of_mean(sum, gen.size()), gen.size()};
}

AngularError trans_err(const std::vector<Vec3>& gen, const std::vector<Vec3>& gt) {
  check_lengths(gen.size(), gt.size());
  double sum = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    const double na = gen[i].norm();
    const double nb = gt[i].norm();
    if (!(na >= 1e-6) || !(nb >= 1e-6)) continue;
    sum += gen[i].dot(gt[i]) / (na * nb);
    ++used;
  }
  if (used == 0) return {0.0, 0};
  return {degrees_of_mean(sum, used), used};
}

PoseErrors compare_paths(const CameraPath& gen, const CameraPath& gt) {
  check_lengths(gen.frames(), gt.frames());
  if (gen.frames() < 2) {
    fail(ErrorCode::LengthMismatch, "pose comparison needs at least two frames");
  }
  std::vector<Quat> qg, qt;
  std::vector<Vec3> tg, tt;
  for (std::size_t i = 1; i < gen.frames(); ++i) {
    const Pose& g0 = gen.poses.front();
    const Pose& t0 = gt.poses.front();
    // Relative to the first frame; translation keeps its magnitude so that
    // near-zero motion is excluded rather than normalized.
    const Pose rg = gen.poses[i] * g0.inverse();
    const Pose rt = gt.poses[i] * t0.inverse();
    qg.push_back(rg.q());
    qt.push_back(rt.q());
    tg.push_back(rg.t());
    tt.push_back(rt.t());
  }
  const AngularError r = rot_err(qg, qt);
  const AngularError t = trans_err(tg, tt);
  return {r.degrees, t.degrees, t.frames_used};
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.rgb.size() != b.rgb.size()) {
    fail(ErrorCode::DimensionMismatch, "frames differ in size");
  }
  if (a.rgb.empty()) fail(ErrorCode::DimensionMismatch, "empty frame");
  double sse = 0;
  for (std::size_t k = 0; k < a.rgb.size(); ++k) {
    const double d = static_cast<double>(a.rgb[k]) - static_cast<double>(b.rgb[k]);
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.rgb.size());
  if (mse == 0) return kPsnrCap;
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace {

template <typename Fn>
double mean_over_frames(const FrameSequence& a, const FrameSequence& b, Fn fn) {
  if (a.size() != b.size() || a.size() == 0) {
    fail(ErrorCode::DimensionMismatch, "videos differ in frame count");
  }
  double sum = 0;
  for (std::size_t t = 0; t < a.size(); ++t) sum += fn(a.frames[t], b.frames[t]);
  return sum / static_cast<double>(a.size());
}

std::vector<double> luma(const Image& img) {
  std::vector<double> y(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t k = 0; k < y.size(); ++k) {
    y[k] = 0.299 * img.rgb[3 * k] + 0.587 * img.rgb[3 * k + 1] + 0.114 * img.rgb[3 * k + 2];
  }
  return y;
}

std::vector<double> gaussian_taps(int size, double sigma) {
  std::vector<double> taps(size);
  const int half = size / 2;
  double sum = 0;
  for (int k = 0; k < size; ++k) {
    const double x = k - half;
    taps[k] = std::exp(-x * x / (2 * sigma * sigma));
    sum += taps[k];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable 'valid' filtering of a w x h plane.
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::vector<double>& tx,
                                 const std::vector<double>& ty) {
  const int ox = w - static_cast<int>(tx.size()) + 1;
  const int oy = h - static_cast<int>(ty.size()) + 1;
  std::vector<double> rows(static_cast<std::size_t>(ox) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ox; ++x) {
      double acc = 0;
      for (std::size_t k = 0; k < tx.size(); ++k) acc += tx[k] * src[y * w + x + k];
      rows[static_cast<std::size_t>(y) * ox + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ox) * oy);
  for (int y = 0; y < oy; ++y) {
    for (int x = 0; x < ox; ++x) {
      double acc = 0;
      for (std::size_t k = 0; k < ty.size(); ++k) acc += ty[k] * rows[(y + k) * ox + x];
      out[static_cast<std::size_t>(y) * ox + x] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const FrameSequence& a, const FrameSequence& b) {
  return mean_over_frames(a, b, [](const Image& x, const Image& y) { return psnr(x, y); });
}

double ssim(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.rgb.size() != b.rgb.size()) {
    fail(ErrorCode::DimensionMismatch, "frames differ in size");
  }
  if (a.rgb.empty()) fail(ErrorCode::DimensionMismatch, "empty frame");
  constexpr double kL = 255.0;
  constexpr double c1 = (0.01 * kL) * (0.01 * kL);
  constexpr double c2 = (0.03 * kL) * (0.03 * kL);
  const auto odd_at_most = [](int n) { return std::min(11, n % 2 ? n : n - 1); };
  const auto tx = gaussian_taps(odd_at_most(a.width), 1.5);
  const auto ty = gaussian_taps(odd_at_most(a.height), 1.5);

  const int w = a.width, h = a.height;
  const auto ya = luma(a);
  const auto yb = luma(b);
  std::vector<double> aa(ya.size()), bb(ya.size()), ab(ya.size());
  for (std::size_t k = 0; k < ya.size(); ++k) {
    aa[k] = ya[k] * ya[k];
    bb[k] = yb[k] * yb[k];
    ab[k] = ya[k] * yb[k];
  }
  const auto mu_a = filter_valid(ya, w, h, tx, ty);
  const auto mu_b = filter_valid(yb, w, h, tx, ty);
  const auto e_aa = filter_valid(aa, w, h, tx, ty);
  const auto e_bb = filter_valid(bb, w, h, tx, ty);
  const auto e_ab = filter_valid(ab, w, h, tx, ty);

  double sum = 0;
  for (std::size_t k = 0; k < mu_a.size(); ++k) {
    const double ma = mu_a[k], mb = mu_b[k];
    const double va = e_aa[k] - ma * ma;
    const double vb = e_bb[k] - mb * mb;
    const double cov = e_ab[k] - ma * mb;
    sum += ((2 * ma * mb + c1) * (2 * cov + c2)) /
           ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return sum / static_cast<double>(mu_a.size());
}

double ssim(const FrameSequence& a, const FrameSequence& b) {
  return mean_over_frames(a, b, [](const Image& x, const Image& y) { return ssim(x, y); });
}

}  // namespace das
