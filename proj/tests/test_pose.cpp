#include "das/error.hpp"
#include "das/pose_estimation.hpp"
#include "das/random.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace das;

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;
const Intrinsics kIntr{720, 720, 359.5, 239.5, 720, 480};

std::vector<Vec3> random_cloud(std::uint64_t seed, int n) {
  Pcg32 rng(seed);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    const double z = 2 + 4 * rng.uniform();
    pts.emplace_back((rng.uniform() - 0.5) * z * 0.9, (rng.uniform() - 0.5) * z * 0.6, z);
  }
  return pts;
}

CorrespondenceSet correspond(const std::vector<Vec3>& pts, const Pose& motion) {
  CorrespondenceSet c{kIntr, {}};
  for (const Vec3& p : pts) {
    const Projection a = project(p, kIntr, Pose::identity());
    const Projection b = project(p, kIntr, motion);
    if (a.visible && b.visible) c.pairs.push_back({{a.u, a.v}, {b.u, b.v}});
  }
  return c;
}

}  // namespace

TEST_CASE("eight-point recovery on noiseless data") {
  Pcg32 rng(17);
  const auto cloud = random_cloud(1, 400);
  for (int trial = 0; trial < 25; ++trial) {
    const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const Quat q(Eigen::AngleAxisd(0.2 * rng.uniform(), axis));
    const Vec3 t = Vec3(rng.normal(), rng.normal(), 0.3 * rng.normal()).normalized() *
                   (0.1 + 0.5 * rng.uniform());
    const Pose motion(q, t);
    const CorrespondenceSet corr = correspond(cloud, motion);
    REQUIRE(corr.pairs.size() >= 8);
    const RelPose est = estimate_relative_pose_8pt(corr);
    CHECK(rotation_angle(est.q, motion.q()) * kDeg < 0.1);
    CHECK(std::acos(std::clamp(est.t_dir.dot(t.normalized()), -1.0, 1.0)) * kDeg < 0.1);
    CHECK(est.t_dir.norm() == doctest::Approx(1.0));
    CHECK_FALSE(est.pure_rotation);
  }
}

TEST_CASE("translation scale does not change the estimate") {
  const auto cloud = random_cloud(2, 300);
  const Quat q(Eigen::AngleAxisd(0.1, Vec3::UnitY()));
  const Vec3 t(0.05, 0.01, 0.02);
  // Scale the scene with the translation so projections are unchanged in
  // structure; the estimate must be the same direction.
  std::vector<Vec3> big;
  for (const Vec3& p : cloud) big.push_back(10 * p);
  const RelPose a = estimate_relative_pose_8pt(correspond(cloud, Pose(q, t)));
  const RelPose b = estimate_relative_pose_8pt(correspond(big, Pose(q, 10 * t)));
  CHECK((a.t_dir - b.t_dir).norm() < 1e-6);
  CHECK(rotation_angle(a.q, b.q) < 1e-6);
}

TEST_CASE("degenerate and invalid inputs") {
  const auto cloud = random_cloud(3, 200);
  SUBCASE("no motion") {
    try {
      estimate_relative_pose_8pt(correspond(cloud, Pose::identity()));
      FAIL("expected DegenerateConfiguration");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateConfiguration);
    }
  }
  SUBCASE("too few points") {
    CorrespondenceSet c = correspond(cloud, Pose(Quat::Identity(), Vec3(0.1, 0, 0)));
    c.pairs.resize(7);
    try {
      estimate_relative_pose_8pt(c);
      FAIL("expected TooFewCorrespondences");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooFewCorrespondences);
    }
  }
  SUBCASE("non-finite pixel") {
    CorrespondenceSet c = correspond(cloud, Pose(Quat::Identity(), Vec3(0.1, 0, 0)));
    c.pairs[3].other.x() = NAN;
    CHECK_THROWS_AS(estimate_relative_pose_8pt(c), Error);
  }
}

TEST_CASE("midpoint triangulation") {
  Vec3 out;
  REQUIRE(triangulate_midpoint(Vec3::Zero(), Vec3(0, 0, 1), Vec3(1, 0, 0),
                               Vec3(-1, 0, 2).normalized(), out));
  CHECK((out - Vec3(0, 0, 2)).norm() < 1e-12);
  CHECK_FALSE(triangulate_midpoint(Vec3::Zero(), Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 0, 1), out));
}
