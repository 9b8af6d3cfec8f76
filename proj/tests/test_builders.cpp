#include "das/builders.hpp"
#include "das/error.hpp"
#include "das/formats.hpp"
#include "das/random.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace das;

namespace {

const Intrinsics kIntr{720, 720, 359.5, 239.5, 720, 480};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoFailure;
}

PointCloud random_scene(std::uint64_t seed, int grid = 20) {
  Pcg32 rng(seed);
  DepthMap d{720, 480, std::vector<float>(720 * 480)};
  for (float& v : d.values) v = static_cast<float>(2.0 + 3.0 * rng.uniform());
  return unproject_depth(d, kIntr, grid);
}

TrajectorySpec preset(TrajectoryKind k, double m, int frames = 49) {
  TrajectorySpec s;
  s.kind = k;
  s.magnitude = m;
  s.frames = frames;
  return s;
}

}  // namespace

TEST_CASE("camera presets") {
  SUBCASE("zero magnitude gives identity poses") {
    for (auto k : {TrajectoryKind::Left, TrajectoryKind::Right, TrajectoryKind::Up,
                   TrajectoryKind::Down, TrajectoryKind::Spiral}) {
      for (int frames : {2, 17, 49}) {
        const CameraPath p = make_camera_path(preset(k, 0.0, frames), kIntr);
        REQUIRE(p.frames() == static_cast<std::size_t>(frames));
        for (const Pose& pose : p.poses) {
          CHECK(pose.t().norm() < 1e-15);
          CHECK(rotation_angle(pose.q(), Quat::Identity()) < 1e-12);
        }
      }
    }
  }
  SUBCASE("right moves the camera center to +x") {
    const CameraPath p = make_camera_path(preset(TrajectoryKind::Right, 0.5), kIntr);
    CHECK(p.poses[48].t().x() == doctest::Approx(-0.5));
    CHECK(p.poses[48].t().y() == 0);
    CHECK(p.poses[48].t().z() == 0);
    CHECK(p.poses[48].center().x() == doctest::Approx(0.5));
  }
  SUBCASE("direction of each linear preset, linear in t") {
    const std::pair<TrajectoryKind, Vec3> cases[] = {
        {TrajectoryKind::Left, {-1, 0, 0}},
        {TrajectoryKind::Right, {1, 0, 0}},
        {TrajectoryKind::Up, {0, -1, 0}},
        {TrajectoryKind::Down, {0, 1, 0}},
    };
    for (const auto& [kind, dir] : cases) {
      const CameraPath p = make_camera_path(preset(kind, 0.8, 9), kIntr);
      CHECK(p.poses[0] == Pose::identity());
      for (int t = 0; t < 9; ++t) {
        CHECK((p.poses[t].center() - dir * 0.8 * t / 8.0).norm() < 1e-15);
      }
    }
  }
  SUBCASE("spiral circles back toward the start without reaching it") {
    TrajectorySpec s = preset(TrajectoryKind::Spiral, 0.5, 48);
    const CameraPath p = make_camera_path(s, kIntr);
    CHECK(p.poses[0] == Pose::identity());
    for (int t = 0; t < 48; ++t) {
      const double theta = 2 * std::numbers::pi * t / 48.0;
      const Vec3 want(0.5 * (std::cos(theta) - 1), 0.5 * std::sin(theta), 0);
      CHECK((p.poses[t].center() - want).norm() < 1e-12);
    }
    CHECK(p.poses[47].center().norm() > 0.05);
    s.radius = 2.0;
    s.turns = 0.5;
    const CameraPath q = make_camera_path(s, kIntr);
    CHECK(q.poses[24].center().x() == doctest::Approx(2.0 * (std::cos(std::numbers::pi / 2) - 1)));
  }
  SUBCASE("look_at keeps a target at the image center") {
    TrajectorySpec s = preset(TrajectoryKind::Right, 1.0, 11);
    s.look_at = Vec3(0, 0, 4);
    const CameraPath p = make_camera_path(s, kIntr);
    CHECK(p.poses[0] == Pose::identity());
    for (const Pose& pose : p.poses) {
      const Projection pr = project({0, 0, 4}, kIntr, pose);
      CHECK(pr.u == doctest::Approx(kIntr.cx));
      CHECK(pr.v == doctest::Approx(kIntr.cy));
    }
  }
  SUBCASE("keyframed path interpolates and rebases") {
    TrajectorySpec s;
    s.kind = TrajectoryKind::Keyframed;
    s.frames = 5;
    const Quat q90(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitY()));
    s.keyframes = {{0, Pose::identity()}, {4, Pose(q90, Vec3(0.4, 0, 0))}};
    const CameraPath p = make_camera_path(s, kIntr);
    CHECK(rotation_angle(p.poses[2].q(), Quat(Eigen::AngleAxisd(std::numbers::pi / 4, Vec3::UnitY()))) <
          1e-12);
    CHECK((p.poses[2].t() - Vec3(0.2, 0, 0)).norm() < 1e-15);

    s.keyframes = {{0, Pose(q90, Vec3(1, 0, 0))}, {4, Pose(q90, Vec3(1, 0, 0))}};
    const CameraPath r = make_camera_path(s, kIntr);
    CHECK(r.poses[0] == Pose::identity());
    for (const Pose& pose : r.poses) {
      CHECK(rotation_angle(pose.q(), Quat::Identity()) < 1e-12);
      CHECK(pose.t().norm() < 1e-12);
    }
  }
  SUBCASE("errors") {
    CHECK(code_of([] { make_camera_path(preset(TrajectoryKind::Left, 0.5, 1), kIntr); }) ==
          ErrorCode::ZeroFrames);
    TrajectorySpec s;
    s.kind = TrajectoryKind::Keyframed;
    s.frames = 5;
    CHECK(code_of([&] { make_camera_path(s, kIntr); }) == ErrorCode::BadKeyframes);
    s.keyframes = {{0, Pose::identity()}, {3, Pose::identity()}};
    CHECK(code_of([&] { make_camera_path(s, kIntr); }) == ErrorCode::BadKeyframes);
    s.keyframes = {{0, Pose::identity()}, {2, Pose::identity()}, {2, Pose::identity()}, {4, Pose::identity()}};
    CHECK(code_of([&] { make_camera_path(s, kIntr); }) == ErrorCode::BadKeyframes);
    CHECK(code_of([] { trajectory_kind_from_string("sideways"); }) == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("camera control") {
  const PointCloud scene = random_scene(1);
  SUBCASE("tracks are the static scene in first-frame coordinates") {
    const CameraPath path = make_camera_path(preset(TrajectoryKind::Left, 0.5), kIntr);
    const ControlTracks c = build_camera_control(scene, path);
    CHECK(c.tracks.frames() == 49);
    CHECK(c.tracks.points() == scene.size());
    for (std::size_t t = 0; t < 49; ++t) {
      for (std::size_t i = 0; i < scene.size(); ++i) {
        CHECK(c.tracks.at(t, i) == scene.positions[i].cast<float>());
      }
    }
  }
  SUBCASE("under preset right every visible point drifts left") {
    const CameraPath path = make_camera_path(preset(TrajectoryKind::Right, 0.5), kIntr);
    const ControlTracks c = build_camera_control(scene, path);
    for (std::size_t i = 0; i < scene.size(); ++i) {
      double prev = INFINITY;
      for (std::size_t t = 0; t < 49; ++t) {
        const Projection p = project(c.tracks.position(t, i), kIntr, path.poses[t]);
        if (!p.visible) continue;
        CHECK(p.u <= prev);
        prev = p.u;
      }
    }
  }
}

TEST_CASE("object timelines") {
  TransformTimeline tl;
  SUBCASE("interpolation rules") {
    tl.keyframes = {{10, Quat::Identity(), Vec3(1, 0, 0)}, {20, Quat::Identity(), Vec3(1, 2, 0)}};
    CHECK(interpolate_timeline(tl, 0).translation == Vec3::Zero());
    CHECK(interpolate_timeline(tl, 5).translation.isApprox(Vec3(0.5, 0, 0)));
    CHECK(interpolate_timeline(tl, 10).translation == Vec3(1, 0, 0));
    CHECK(interpolate_timeline(tl, 15).translation.isApprox(Vec3(1, 1, 0)));
    CHECK(interpolate_timeline(tl, 40).translation == Vec3(1, 2, 0));
    CHECK(interpolate_timeline(TransformTimeline{}, 7).translation == Vec3::Zero());
  }
  SUBCASE("validation") {
    tl.keyframes = {{0, Quat(Eigen::AngleAxisd(0.1, Vec3::UnitX())), Vec3::Zero()}};
    CHECK(code_of([&] { validate_timeline(tl, 10); }) == ErrorCode::BadKeyframes);
    tl.keyframes = {{0, Quat::Identity(), Vec3::Zero()}, {9, Quat::Identity(), Vec3::Ones()}};
    validate_timeline(tl, 10);
    CHECK(code_of([&] { validate_timeline(tl, 9); }) == ErrorCode::BadKeyframes);
    tl.keyframes = {{5, Quat::Identity(), Vec3::Ones()}, {5, Quat::Identity(), Vec3::Ones()}};
    CHECK(code_of([&] { validate_timeline(tl, 10); }) == ErrorCode::BadKeyframes);
    tl.keyframes = {{5, Quat(2, 0, 0, 0), Vec3::Ones()}};
    CHECK(code_of([&] { validate_timeline(tl, 10); }) == ErrorCode::NonUnitQuaternion);
  }
}

TEST_CASE("object manipulation") {
  const PointCloud scene = random_scene(2);
  Mask mask{720, 480, std::vector<std::uint8_t>(720 * 480, 0)};
  for (int v = 100; v < 300; ++v) {
    for (int u = 200; u < 500; ++u) mask.values[static_cast<std::size_t>(v) * 720 + u] = 1;
  }
  std::vector<bool> fg(scene.size());
  Vec3 centroid = Vec3::Zero();
  int count = 0;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    fg[i] = mask.at(scene.source_pixels[i][0], scene.source_pixels[i][1]);
    if (fg[i]) {
      centroid += scene.positions[i];
      ++count;
    }
  }
  REQUIRE(count > 0);
  centroid /= count;

  SUBCASE("identity timeline reproduces the static scene") {
    const ControlTracks c = build_object_manipulation(scene, mask, {}, 49);
    const ControlTracks s = build_camera_control(scene, {kIntr, std::vector<Pose>(49)});
    CHECK(c.tracks == s.tracks);
    CHECK(c.colors.quantized == s.colors.quantized);
  }
  SUBCASE("single translation keyframe is linear in t") {
    TransformTimeline tl;
    tl.keyframes = {{48, Quat::Identity(), Vec3(0.1, 0, 0)}};
    const ControlTracks c = build_object_manipulation(scene, mask, tl, 49);
    for (std::size_t t = 0; t < 49; ++t) {
      for (std::size_t i = 0; i < scene.size(); ++i) {
        const Vec3 want = scene.positions[i] + (fg[i] ? Vec3(0.1 * t / 48.0, 0, 0) : Vec3::Zero());
        CHECK((c.tracks.position(t, i) - want).norm() < 1e-6);
      }
    }
  }
  SUBCASE("rotation about the centroid keeps the centroid") {
    TransformTimeline tl;
    tl.keyframes = {{48, Quat(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitY())), Vec3::Zero()}};
    const ControlTracks c = build_object_manipulation(scene, mask, tl, 49);
    for (std::size_t t = 0; t < 49; ++t) {
      Vec3 m = Vec3::Zero();
      for (std::size_t i = 0; i < scene.size(); ++i) {
        if (fg[i]) m += c.tracks.position(t, i);
        else CHECK(c.tracks.at(t, i) == scene.positions[i].cast<float>());
      }
      CHECK(((m / count) - centroid).norm() < 1e-6);
    }
  }
  SUBCASE("errors") {
    Mask empty{720, 480, std::vector<std::uint8_t>(720 * 480, 0)};
    CHECK(code_of([&] { build_object_manipulation(scene, empty, {}, 49); }) ==
          ErrorCode::NoForegroundPoints);
    PointCloud bare = scene;
    bare.source_pixels.clear();
    CHECK(code_of([&] { build_object_manipulation(bare, mask, {}, 49); }) ==
          ErrorCode::MissingSourcePixels);
    Mask small{10, 10, std::vector<std::uint8_t>(100, 1)};
    CHECK(code_of([&] { build_object_manipulation(scene, small, {}, 49); }) ==
          ErrorCode::SizeMismatch);
  }
}

TEST_CASE("mesh tracks") {
  TriangleMesh tri;
  tri.vertices = {{0, 0, 2}, {1, 0, 2}, {0, 1, 2}};
  tri.faces = {{0, 1, 2}};

  SUBCASE("a vertex-0 sample follows vertex 0") {
    MeshSequence seq;
    for (int t = 0; t < 5; ++t) {
      TriangleMesh m = tri;
      for (Vec3& v : m.vertices) v += Vec3(0.1 * t, -0.05 * t, 0.2 * t);
      seq.frames.push_back(m);
    }
    const ControlTracks c = tracks_from_samples(seq, {{0, Vec3(1, 0, 0)}});
    for (std::size_t t = 0; t < 5; ++t) {
      CHECK(c.tracks.at(t, 0) == seq.frames[t].vertices[0].cast<float>());
    }
  }
  SUBCASE("static mesh gives static tracks") {
    const MeshSequence seq{{tri, tri, tri}};
    const ControlTracks c = build_mesh_tracks(seq, 100, 7);
    for (std::size_t i = 0; i < 100; ++i) {
      CHECK(c.tracks.at(1, i) == c.tracks.at(0, i));
      CHECK(c.tracks.at(2, i) == c.tracks.at(0, i));
    }
  }
  SUBCASE("samples are deterministic and lie inside their triangle") {
    const auto a = sample_surface(tri, 1000, 3);
    const auto b = sample_surface(tri, 1000, 3);
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].barycentric == b[k].barycentric);
      CHECK(a[k].barycentric.minCoeff() >= 0);
      CHECK(a[k].barycentric.sum() == doctest::Approx(1.0));
    }
  }
  SUBCASE("area weighting 9:1 within a 3-sigma binomial bound") {
    TriangleMesh two;
    two.vertices = {{0, 0, 1}, {3, 0, 1}, {0, 3, 1}, {10, 0, 1}, {11, 0, 1}, {10, 1, 1}};
    two.faces = {{0, 1, 2}, {3, 4, 5}};  // areas 4.5 and 0.5
    const std::size_t n = 10000;
    const auto s = sample_surface(two, n, 99);
    const double big = static_cast<double>(std::count_if(s.begin(), s.end(),
                                                         [](const SurfaceSample& x) { return x.face == 0; }));
    const double p = 0.9;
    const double sigma = std::sqrt(n * p * (1 - p));
    CHECK(std::abs(big - n * p) < 3 * sigma);
  }
  SUBCASE("barycentric samples are uniform over the triangle") {
    // Mean of a uniform sample is the centroid; sub-triangle counts near 1/4.
    const auto s = sample_surface(tri, 20000, 5);
    Vec3 mean = Vec3::Zero();
    int corner0 = 0;
    for (const auto& x : s) {
      mean += x.barycentric;
      if (x.barycentric[0] > 0.5) ++corner0;
    }
    mean /= static_cast<double>(s.size());
    CHECK((mean - Vec3::Constant(1.0 / 3)).norm() < 0.01);
    CHECK(std::abs(corner0 / 20000.0 - 0.25) < 3 * std::sqrt(0.25 * 0.75 / 20000));
  }
  SUBCASE("validation") {
    CHECK(code_of([] { MeshSequence{}.validate(); }) == ErrorCode::EmptyMesh);
    TriangleMesh other = tri;
    other.faces = {{0, 2, 1}};
    CHECK(code_of([&] { MeshSequence{{tri, other}}.validate(); }) == ErrorCode::TopologyMismatch);
    TriangleMesh behind = tri;
    behind.vertices[1].z() = -1;
    CHECK(code_of([&] { MeshSequence{{behind}}.validate(); }) == ErrorCode::NonPositiveZ);
    TriangleMesh bad = tri;
    bad.faces = {{0, 1, 3}};
    CHECK(code_of([&] { MeshSequence{{bad}}.validate(); }) == ErrorCode::BadMesh);
    CHECK(code_of([&] { build_mesh_tracks(MeshSequence{{tri}}, 0, 1); }) ==
          ErrorCode::InvalidArgument);
  }
}

TEST_CASE("imported tracks") {
  const auto dir = std::filesystem::temp_directory_path() / "das_builders_test";
  std::filesystem::create_directories(dir);
  const PointCloud scene = random_scene(3, 70);
  const CameraPath identity{kIntr, std::vector<Pose>(49)};
  const ControlTracks built = build_camera_control(scene, identity);
  REQUIRE(built.tracks.points() == 4900);
  write_trackset(dir / "x.trk", built.tracks);
  const ControlTracks imported = import_tracks(dir / "x.trk");
  CHECK(imported.tracks == built.tracks);
  CHECK(imported.colors.quantized == built.colors.quantized);
  CHECK(encode_trackset(imported.tracks) == read_file(dir / "x.trk"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("path broadcasting") {
  const CameraPath one{kIntr, {Pose(Quat::Identity(), Vec3(1, 0, 0))}};
  const CameraPath b = broadcast_path(one, 4);
  CHECK(b.frames() == 4);
  for (const Pose& p : b.poses) CHECK(p == one.poses[0]);
  CHECK(code_of([&] { broadcast_path(b, 5); }) == ErrorCode::LengthMismatch);
}
