// End-to-end runs of the dasctl binary on small synthetic inputs.

#include "das/formats.hpp"
#include "das/json_io.hpp"
#include "das/png_io.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

using namespace das;
namespace fs = std::filesystem;

namespace {

struct Run {
  int exit_code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path& work() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "das_pipeline_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run dasctl(const std::string& args) {
  const fs::path out = work() / "stdout.txt", err = work() / "stderr.txt";
  const std::string cmd = std::string(DASCTL_PATH) + " " + args + " >" + out.string() + " 2>" +
                          err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

// 64x48 scene: a tilted background plane and a nearer box in the middle,
// which the mask selects.
struct Inputs {
  fs::path image, depth, mask, identity_timeline, spin_timeline;
};

const Inputs& inputs() {
  static const Inputs in = [] {
    Inputs p{work() / "image.png", work() / "depth.pfm", work() / "mask.pgm",
             work() / "identity.json", work() / "spin.json"};
    const int w = 64, h = 48;
    Image img(w, h);
    DepthMap depth{w, h, std::vector<float>(w * h)};
    Mask mask{w, h, std::vector<std::uint8_t>(w * h)};
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        const bool box = u >= 20 && u < 44 && v >= 14 && v < 34;
        depth.values[v * w + u] = box ? 1.5f : 3.0f + 0.02f * u;
        mask.values[v * w + u] = box;
        img.set_pixel(u, v, {static_cast<std::uint8_t>(4 * u), static_cast<std::uint8_t>(5 * v), 90});
      }
    }
    write_png(p.image, img);
    write_depth_pfm(p.depth, depth);
    write_mask_pgm(p.mask, mask);
    write_text(p.identity_timeline, R"({"keyframes": [{"frame": 0, "q": [1, 0, 0, 0], "t": [0, 0, 0]}]})");
    write_text(p.spin_timeline,
               R"({"keyframes": [{"frame": 0, "q": [1, 0, 0, 0], "t": [0, 0, 0]},
                                 {"frame": 9, "q": [0.9238795325112867, 0, 0.3826834323650898, 0], "t": [0.1, 0, 0]}]})");
    return p;
  }();
  return in;
}

std::string scene_args() {
  return "--image " + inputs().image.string() + " --depth " + inputs().depth.string() + " --grid 24";
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return files;
}

}  // namespace

TEST_CASE("camera bundle layout") {
  const fs::path out = work() / "cam";
  const Run r = dasctl("camera " + scene_args() + " --frames 10 --out " + out.string());
  REQUIRE(r.exit_code == 0);
  const auto files = tree(out);
  CHECK(files.size() == 13);
  CHECK(files.count("frame_0009.png") == 1);
  const Json manifest = parse_json(files.at("manifest.json"));
  CHECK(manifest["T"] == 10);
  CHECK(manifest["width"] == 64);
  CHECK(manifest["height"] == 48);
  CHECK(manifest["files"].size() == 10);
  const TrackSet ts = read_trackset(out / "tracks.trk");
  CHECK(ts.frames() == 10);
  CHECK(ts.points() == 24 * 24);
  CHECK(read_camera_path(out / "camera.json").poses.size() == 10);
  // Preset right moves the camera, so the video is not static.
  CHECK(files.at("frame_0000.png") != files.at("frame_0009.png"));
}

TEST_CASE("zero magnitude gives a static video") {
  const fs::path out = work() / "still";
  REQUIRE(dasctl("camera " + scene_args() + " --magnitude 0 --frames 6 --out " + out.string())
              .exit_code == 0);
  const auto files = tree(out);
  for (int t = 1; t < 6; ++t) CHECK(files.at("frame_000" + std::to_string(t) + ".png") == files.at("frame_0000.png"));
}

TEST_CASE("trajectory file and preset agree") {
  const fs::path spec = work() / "traj.json";
  write_text(spec, R"({"kind": "spiral", "frames": 8, "magnitude": 0.3, "turns": 2})");
  const fs::path a = work() / "spiral_file", b = work() / "spiral_preset";
  REQUIRE(dasctl("camera " + scene_args() + " --traj " + spec.string() + " --out " + a.string()).exit_code == 0);
  REQUIRE(dasctl("camera " + scene_args() +
                 " --traj preset:spiral --frames 8 --magnitude 0.3 --turns 2 --out " + b.string())
              .exit_code == 0);
  CHECK(tree(a) == tree(b));
}

TEST_CASE("pipelines are deterministic across runs and worker counts") {
  const std::vector<std::string> commands = {
      "camera " + scene_args() + " --traj preset:spiral --frames 12",
      "object " + scene_args() + " --mask " + inputs().mask.string() + " --timeline " +
          inputs().spin_timeline.string() + " --frames 12",
  };
  int k = 0;
  for (const std::string& c : commands) {
    const fs::path a = work() / ("det_a" + std::to_string(k)), b = work() / ("det_b" + std::to_string(k)),
                   one = work() / ("det_1_" + std::to_string(k)), eight = work() / ("det_8_" + std::to_string(k));
    ++k;
    REQUIRE(dasctl(c + " --out " + a.string()).exit_code == 0);
    REQUIRE(dasctl(c + " --out " + b.string()).exit_code == 0);
    REQUIRE(dasctl(c + " --workers 1 --out " + one.string()).exit_code == 0);
    REQUIRE(dasctl(c + " --workers 8 --out " + eight.string()).exit_code == 0);
    CHECK(tree(a) == tree(b));
    CHECK(tree(one) == tree(eight));
    CHECK(tree(a) == tree(one));
  }
}

TEST_CASE("object manipulation") {
  const fs::path still = work() / "obj_still", spin = work() / "obj_spin";
  REQUIRE(dasctl("object " + scene_args() + " --mask " + inputs().mask.string() + " --timeline " +
                 inputs().identity_timeline.string() + " --frames 5 --out " + still.string())
              .exit_code == 0);
  const auto files = tree(still);
  for (int t = 1; t < 5; ++t) CHECK(files.at("frame_000" + std::to_string(t) + ".png") == files.at("frame_0000.png"));

  REQUIRE(dasctl("object " + scene_args() + " --mask " + inputs().mask.string() + " --timeline " +
                 inputs().spin_timeline.string() + " --frames 10 --out " + spin.string())
              .exit_code == 0);
  const TrackSet ts = read_trackset(spin / "tracks.trk");
  // Background points stay put; some object points move.
  std::size_t moved = 0;
  for (std::size_t i = 0; i < ts.points(); ++i) moved += ts.at(9, i) != ts.at(0, i);
  CHECK(moved > 0);
  CHECK(moved < ts.points());

  const Run bad = dasctl("object " + scene_args() + " --mask " + inputs().mask.string() +
                         " --timeline " + inputs().spin_timeline.string() + " --frames 5 --out " +
                         (work() / "obj_bad").string());
  CHECK(bad.exit_code == 1);
  CHECK(bad.err.rfind("error code=BadKeyframes msg=\"", 0) == 0);
}

TEST_CASE("imported tracks reproduce the bundle") {
  const fs::path src = work() / "reimport_src", dst = work() / "reimport_dst";
  REQUIRE(dasctl("camera " + scene_args() + " --traj preset:up --frames 7 --out " + src.string()).exit_code == 0);
  REQUIRE(dasctl("tracks --in " + (src / "tracks.trk").string() + " --camera " +
                 (src / "camera.json").string() + " --out " + dst.string())
              .exit_code == 0);
  CHECK(tree(src) == tree(dst));
}

TEST_CASE("mesh tracks") {
  const fs::path dir = work() / "meshes";
  fs::create_directories(dir);
  for (int k = 0; k < 4; ++k) {
    const double z = 2.0 + 0.1 * k;
    std::ostringstream obj;
    obj << "v -0.5 -0.5 " << z << "\nv 0.5 -0.5 " << z << "\nv 0 0.5 " << z << "\nf 1 2 3\n";
    write_text(dir / ("f_" + std::to_string(k) + ".obj"), obj.str());
  }
  const fs::path a = work() / "mesh_a", b = work() / "mesh_b";
  const std::string args = "mesh --frames-glob '" + (dir / "f_*.obj").string() + "' --samples 300 --seed 3";
  REQUIRE(dasctl(args + " --out " + a.string()).exit_code == 0);
  REQUIRE(dasctl(args + " --out " + b.string()).exit_code == 0);
  CHECK(tree(a) == tree(b));
  const TrackSet ts = read_trackset(a / "tracks.trk");
  CHECK(ts.frames() == 4);
  CHECK(ts.points() == 300);
  const Json manifest = read_json(a / "manifest.json");
  CHECK(manifest["width"] == 720);
  CHECK(manifest["height"] == 480);
}

TEST_CASE("evaluation commands") {
  const fs::path out = work() / "eval";
  REQUIRE(dasctl("camera " + scene_args() + " --frames 5 --out " + out.string()).exit_code == 0);
  const std::string cam = (out / "camera.json").string();
  Run r = dasctl("eval pose --gt " + cam + " --est " + cam);
  CHECK(r.exit_code == 0);
  CHECK(r.out == "RotErr 0.00 TransErr 0.00\n");
  r = dasctl("eval quality --a " + out.string() + " --b " + out.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out == "PSNR 99.00 SSIM 1.0000\n");

  const fs::path evil = work() / "evil";
  fs::create_directories(evil);
  write_text(evil / "manifest.json", R"({"T": 1, "width": 64, "height": 48, "files": ["../eval/frame_0000.png"]})");
  r = dasctl("eval quality --a " + out.string() + " --b " + evil.string());
  CHECK(r.exit_code == 1);
}

TEST_CASE("exit codes and error lines") {
  Run r = dasctl("");
  CHECK(r.exit_code == 2);
  r = dasctl("camera --depth x.pfm --out y");
  CHECK(r.exit_code == 2);
  r = dasctl("camera --image " + (work() / "missing.png").string() + " --depth " +
             inputs().depth.string() + " --out " + (work() / "never").string());
  CHECK(r.exit_code == 1);
  CHECK(r.err.rfind("error code=IoFailure msg=\"", 0) == 0);
  CHECK_FALSE(fs::exists(work() / "never"));
  r = dasctl("camera " + scene_args() + " --traj preset:sideways --out " + (work() / "never").string());
  CHECK(r.exit_code == 1);
  r = dasctl("camera " + scene_args() + " --traj preset:keyframed --out " + (work() / "never").string());
  CHECK(r.exit_code == 1);
  r = dasctl("camera --image " + inputs().image.string() + " --depth " + inputs().depth.string() +
             " --grid 100 --out " + (work() / "never").string());
  CHECK(r.exit_code == 1);
  CHECK(r.err.rfind("error code=GridTooLarge", 0) == 0);
}

TEST_CASE("simulator commands") {
  const Run a = dasctl("sim train --steps 4 --seed 2");
  const Run b = dasctl("sim train --steps 4 --seed 2");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);
  std::istringstream lines(a.out);
  int n = 0;
  for (std::string line; std::getline(lines, line); ++n) CHECK(std::isfinite(std::stod(line)));
  CHECK(n == 4);
  CHECK(dasctl("sim train --steps 2 --noise-rank 0").exit_code == 1);
}
