#include "das/error.hpp"
#include "das/metrics.hpp"
#include "das/random.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace das;

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

Image random_image(int w, int h, std::uint64_t seed) {
  Pcg32 rng(seed);
  Image img(w, h);
  for (auto& c : img.rgb) c = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

// Direct SSIM: per window position, weighted moments with a 2D Gaussian
// built from scratch.
double ssim_oracle(const Image& a, const Image& b) {
  const int wx = std::min(11, a.width % 2 ? a.width : a.width - 1);
  const int wy = std::min(11, a.height % 2 ? a.height : a.height - 1);
  std::vector<double> g(static_cast<std::size_t>(wx) * wy);
  double gs = 0;
  for (int j = 0; j < wy; ++j) {
    for (int i = 0; i < wx; ++i) {
      const double dx = i - wx / 2, dy = j - wy / 2;
      g[j * wx + i] = std::exp(-(dx * dx + dy * dy) / (2 * 1.5 * 1.5));
      gs += g[j * wx + i];
    }
  }
  auto y = [](const Image& im, int x, int yy) {
    const Rgb8 p = im.pixel(x, yy);
    return 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  };
  const double c1 = 6.5025, c2 = 58.5225;
  double total = 0;
  int count = 0;
  for (int oy = 0; oy + wy <= a.height; ++oy) {
    for (int ox = 0; ox + wx <= a.width; ++ox) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int j = 0; j < wy; ++j) {
        for (int i = 0; i < wx; ++i) {
          const double w = g[j * wx + i] / gs;
          const double va = y(a, ox + i, oy + j), vb = y(b, ox + i, oy + j);
          ma += w * va;
          mb += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * va * vb;
        }
      }
      const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return total / count;
}

}  // namespace

TEST_CASE("RotErr") {
  const Quat a(Eigen::AngleAxisd(0.3, Vec3(1, 1, 0).normalized()));
  SUBCASE("equal and sign-flipped rotations") {
    CHECK(rot_err({a}, {a}).degrees < 1e-5);
    Quat neg;
    neg.coeffs() = -a.coeffs();
    CHECK(rot_err({neg}, {a}).degrees < 1e-5);
  }
  SUBCASE("60 degrees apart about any axis gives 30") {
    Pcg32 rng(2);
    for (int k = 0; k < 10; ++k) {
      const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
      const Quat b = a * Quat(Eigen::AngleAxisd(std::numbers::pi / 3, axis));
      CHECK(rot_err({b}, {a}).degrees == doctest::Approx(30.0).epsilon(1e-12));
    }
  }
  SUBCASE("mean of dots, then arccos") {
    const Quat b(Eigen::AngleAxisd(1.0, Vec3::UnitZ()));
    const double want = std::acos((1.0 + std::cos(0.5)) / 2) * kDeg;
    CHECK(rot_err({Quat::Identity(), b}, {Quat::Identity(), Quat::Identity()}).degrees ==
          doctest::Approx(want));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(rot_err({a}, {}), Error);
    CHECK_THROWS_AS(rot_err({Quat(1.1, 0, 0, 0)}, {a}), Error);
  }
}

TEST_CASE("TransErr") {
  SUBCASE("equal nonzero, orthogonal") {
    CHECK(trans_err({{1, 2, 3}}, {{2, 4, 6}}).degrees == doctest::Approx(0).epsilon(1e-6));
    CHECK(trans_err({{1, 0, 0}}, {{0, 3, 0}}).degrees == doctest::Approx(90));
  }
  SUBCASE("dots 1 and 0.5 average to arccos(0.75)") {
    const auto e = trans_err({{1, 0, 0}, {1, 0, 0}},
                             {{2, 0, 0}, {std::cos(std::numbers::pi / 3), std::sin(std::numbers::pi / 3), 0}});
    CHECK(e.degrees == doctest::Approx(std::acos(0.75) * kDeg));
    CHECK(e.degrees == doctest::Approx(41.41).epsilon(1e-4));
    CHECK(e.frames_used == 2);
  }
  SUBCASE("near-zero translations are skipped") {
    const auto e = trans_err({{0, 0, 0}, {1, 0, 0}}, {{1, 0, 0}, {0, 1, 0}});
    CHECK(e.frames_used == 1);
    CHECK(e.degrees == doctest::Approx(90));
    CHECK(trans_err({{0, 0, 0}}, {{0, 0, 0}}).frames_used == 0);
  }
}

TEST_CASE("path comparison works relative to the first frame") {
  const Intrinsics intr{100, 100, 50, 50, 100, 100};
  CameraPath gt{intr, {}};
  for (int t = 0; t < 6; ++t) {
    gt.poses.emplace_back(Quat(Eigen::AngleAxisd(0.05 * t, Vec3::UnitY())), Vec3(-0.1 * t, 0.02 * t, 0));
  }
  // Same motion seen from a different world frame.
  const Pose w(Quat(Eigen::AngleAxisd(0.9, Vec3(1, 2, 3).normalized())), Vec3(4, 5, 6));
  CameraPath moved = gt;
  for (Pose& p : moved.poses) p = p * w;
  const PoseErrors e = compare_paths(moved, gt);
  CHECK(e.rot_err < 1e-5);
  CHECK(e.trans_err < 1e-5);
  CHECK(e.frames_used == 5);
  CHECK_THROWS_AS(compare_paths(gt, CameraPath{intr, {Pose()}}), Error);
}

TEST_CASE("PSNR") {
  const Image a = random_image(32, 24, 1);
  CHECK(psnr(a, a) == kPsnrCap);
  CHECK(psnr(Image(8, 8, {0, 0, 0}), Image(8, 8, {255, 255, 255})) == 0.0);
  SUBCASE("uniform offset of 1") {
    const Image c(16, 16, {100, 100, 100});
    const Image d(16, 16, {101, 101, 101});
    CHECK(psnr(c, d) == doctest::Approx(10 * std::log10(255.0 * 255.0)));
    CHECK(psnr(c, d) == doctest::Approx(48.13).epsilon(1e-4));
  }
  SUBCASE("matches a direct evaluation") {
    const Image b = random_image(32, 24, 2);
    double sse = 0;
    for (std::size_t k = 0; k < a.rgb.size(); ++k) sse += std::pow(double(a.rgb[k]) - b.rgb[k], 2);
    CHECK(psnr(a, b) == doctest::Approx(10 * std::log10(65025.0 / (sse / a.rgb.size()))));
  }
  SUBCASE("video is the mean over frames") {
    const Image b = random_image(32, 24, 3);
    const FrameSequence x{{a, a}}, y{{a, b}};
    CHECK(psnr(x, y) == doctest::Approx((kPsnrCap + psnr(a, b)) / 2));
  }
  CHECK_THROWS_AS(psnr(Image(4, 4), Image(4, 5)), Error);
  CHECK_THROWS_AS(psnr(FrameSequence{{a}}, FrameSequence{{a, a}}), Error);
}

TEST_CASE("SSIM") {
  SUBCASE("identity") {
    for (auto [w, h] : {std::pair{32, 24}, {5, 40}, {11, 11}, {1, 1}}) {
      const Image a = random_image(w, h, 7);
      CHECK(ssim(a, a) == 1.0);
    }
  }
  SUBCASE("agrees with a direct windowed evaluation") {
    for (auto [w, h] : {std::pair{32, 24}, {14, 9}, {6, 30}}) {
      const Image a = random_image(w, h, 8);
      Image b = a;
      Pcg32 rng(9);
      for (auto& c : b.rgb) c = static_cast<std::uint8_t>(std::clamp<int>(c + int(rng.below(41)) - 20, 0, 255));
      CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b)).epsilon(1e-10));
      CHECK(ssim(a, b) < 1.0);
      CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    }
  }
  SUBCASE("constant images") {
    CHECK(ssim(Image(20, 20, {9, 9, 9}), Image(20, 20, {9, 9, 9})) == 1.0);
    CHECK(ssim(Image(20, 20, {0, 0, 0}), Image(20, 20, {255, 255, 255})) < 0.01);
  }
}
