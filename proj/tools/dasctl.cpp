// dasctl: command-line front end for building, rendering and evaluating
// tracking-video control bundles, the toy conditioning simulator and the
// studio HTTP service.

#include "das/error.hpp"
#include "das/formats.hpp"
#include "das/json_io.hpp"
#include "das/metrics.hpp"
#include "das/pipeline.hpp"
#include "das/png_io.hpp"
#include "das/service.hpp"
#include "das/toy_dit.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

void report_error(std::string_view code, std::string_view msg) {
  std::cerr << "error code=" << code << " msg=" << quoted(msg) << "\n";
}

struct SceneArgs {
  std::string image, depth, intrinsics;
  int grid = das::kDefaultGrid;
};

void add_scene_options(CLI::App* cmd, SceneArgs& a) {
  cmd->add_option("--image", a.image, "First frame (PNG)")->required();
  cmd->add_option("--depth", a.depth, "Depth map (PFM)")->required();
  cmd->add_option("--intrinsics", a.intrinsics, "Intrinsics JSON; default fx=fy=width");
  cmd->add_option("--grid", a.grid, "Points per image axis");
}

struct Scene {
  das::Intrinsics intr;
  das::PointCloud points;
};

Scene load_scene(const SceneArgs& a) {
  const das::Image image = das::read_png(a.image);
  const das::DepthMap depth = das::read_depth_pfm(a.depth);
  if (image.width != depth.width || image.height != depth.height) {
    das::fail(das::ErrorCode::SizeMismatch, "image and depth sizes differ");
  }
  Scene s;
  s.intr = a.intrinsics.empty() ? das::default_intrinsics(depth.width, depth.height)
                                : das::intrinsics_from_json(das::read_json(a.intrinsics));
  s.points = das::unproject_depth(depth, s.intr, a.grid);
  return s;
}

das::CameraPath camera_or_default(const std::string& file) {
  if (file.empty()) {
    return das::static_path(das::default_intrinsics(das::kDefaultWidth, das::kDefaultHeight), 1);
  }
  return das::read_camera_path(file);
}

das::RenderOptions render_options(unsigned workers) {
  das::RenderOptions r;
  r.workers = workers;
  return r;
}

das::FrameSequence read_frames(const std::filesystem::path& dir) {
  const das::FrameManifest m = das::manifest_from_json(das::read_json(dir / "manifest.json"));
  das::FrameSequence seq;
  for (const std::string& name : m.files) {
    if (name.empty() || name.find('/') != std::string::npos ||
        name.find('\\') != std::string::npos || name.find("..") != std::string::npos) {
      das::fail(das::ErrorCode::BadJson, "manifest file names must be plain names");
    }
    seq.frames.push_back(das::read_png(dir / name));
    if (seq.frames.back().width != m.width || seq.frames.back().height != m.height) {
      das::fail(das::ErrorCode::DimensionMismatch, name + " does not match the manifest size");
    }
  }
  return seq;
}

int sim_check(std::uint64_t seed) {
  using namespace das::toy;
  ToyDiTConfig cfg;
  cfg.seed = seed;
  ToyDiT model = ToyDiT::init(cfg);
  model.attach();
  das::Pcg32 rng(seed, 7);
  const auto batch = NoiseCopyTask::make(cfg, cfg.width, rng).batch(cfg, 1, rng);
  const Tokens base = model.forward_base(batch[0].clean, 500);
  const Tokens cond = model.forward_conditioned(batch[0].clean, batch[0].cond, 500);
  const double zero_init = (cond - base).cwiseAbs().maxCoeff();

  std::vector<Eigen::MatrixXd> frozen;
  for (const Param& p : model.params()) {
    if (!p.trainable) frozen.push_back(p.value);
  }
  TrainOptions topts;
  topts.steps = 20;
  topts.seed = seed;
  train_noise_copy(model, topts);
  bool frozen_same = true;
  std::size_t f = 0;
  for (const Param& p : model.params()) {
    if (!p.trainable) frozen_same = frozen_same && (p.value.array() == frozen[f++].array()).all();
  }

  ToyDiT fresh = ToyDiT::init(cfg);
  fresh.attach();
  randomize_injectors(fresh, 0.05, seed);
  const GradCheckReport gc = grad_check(fresh, batch[0], 500);

  const bool ok_zero = zero_init == 0.0;
  const bool ok_grad = gc.max_rel_error < 1e-4;
  std::printf("zero_init max_abs_diff=%.3g %s\n", zero_init, ok_zero ? "PASS" : "FAIL");
  std::printf("frozen_base after_steps=%d %s\n", topts.steps, frozen_same ? "PASS" : "FAIL");
  std::printf("grad_check max_rel_error=%.3g coords=%zu worst=%s %s\n", gc.max_rel_error,
              gc.coordinates, gc.worst_param.c_str(), ok_grad ? "PASS" : "FAIL");
  return ok_zero && frozen_same && ok_grad ? 0 : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build, render and evaluate tracking-video control bundles"};
  app.require_subcommand(1);
  std::function<int()> action;

  unsigned workers = 0;
  auto add_workers = [&](CLI::App* cmd) {
    cmd->add_option("--workers", workers, "Render threads; 0 = hardware concurrency");
  };

  // camera
  SceneArgs cam_scene;
  std::string cam_traj = "preset:right", cam_out;
  double cam_magnitude = 0.5, cam_turns = 1.0;
  std::optional<double> cam_radius;
  int cam_frames = 49;
  auto* camera = app.add_subcommand("camera", "Camera motion over a static scene");
  add_scene_options(camera, cam_scene);
  camera->add_option("--traj", cam_traj,
                                      "preset:left|right|up|down|spiral or a trajectory JSON file");
  auto* mag_opt = camera->add_option("--magnitude", cam_magnitude, "Travel in meters");
  auto* frames_opt = camera->add_option("--frames", cam_frames, "Frame count");
  camera->add_option("--radius", cam_radius, "Spiral radius; defaults to the magnitude");
  auto* turns_opt = camera->add_option("--turns", cam_turns, "Spiral turns");
  camera->add_option("--out", cam_out, "Output directory")->required();
  add_workers(camera);
  camera->callback([&] {
    action = [&] {
      // Presets take every flag; a trajectory file is only overridden by
      // flags given explicitly.
      const bool preset = cam_traj.rfind("preset:", 0) == 0;
      das::TrajectorySpec spec;
      if (preset) {
        spec.kind = das::trajectory_kind_from_string(cam_traj.substr(7));
        if (spec.kind == das::TrajectoryKind::Keyframed) {
          das::fail(das::ErrorCode::InvalidArgument, "keyframed paths need a trajectory file");
        }
      } else {
        spec = das::trajectory_spec_from_json(das::read_json(cam_traj));
      }
      if (preset || mag_opt->count()) spec.magnitude = cam_magnitude;
      if (preset || frames_opt->count()) spec.frames = cam_frames;
      if (turns_opt->count()) spec.turns = cam_turns;
      if (cam_radius) spec.radius = cam_radius;
      const Scene scene = load_scene(cam_scene);
      das::write_bundle(cam_out,
                        das::camera_bundle(scene.points, scene.intr, spec, render_options(workers)));
      return 0;
    };
  });

  // object
  SceneArgs obj_scene;
  std::string obj_mask, obj_timeline, obj_out;
  int obj_frames = 49;
  auto* object = app.add_subcommand("object", "Rigid manipulation of a masked object");
  add_scene_options(object, obj_scene);
  object->add_option("--mask", obj_mask, "Object mask (PGM)")->required();
  object->add_option("--timeline", obj_timeline, "Transform timeline JSON")->required();
  object->add_option("--frames", obj_frames, "Frame count");
  object->add_option("--out", obj_out, "Output directory")->required();
  add_workers(object);
  object->callback([&] {
    action = [&] {
      const Scene scene = load_scene(obj_scene);
      const das::Mask mask = das::read_mask_pgm(obj_mask);
      const das::TransformTimeline timeline = das::read_timeline(obj_timeline);
      das::write_bundle(obj_out, das::object_bundle(scene.points, scene.intr, mask, timeline,
                                                    obj_frames, render_options(workers)));
      return 0;
    };
  });

  // mesh
  std::string mesh_glob, mesh_camera, mesh_out;
  std::size_t mesh_samples = 4900;
  std::uint64_t mesh_seed = 7;
  auto* mesh = app.add_subcommand("mesh", "Tracks sampled on an animated mesh");
  mesh->add_option("--frames-glob", mesh_glob, "OBJ frames, e.g. 'f_*.obj'")->required();
  mesh->add_option("--samples", mesh_samples, "Surface samples");
  mesh->add_option("--seed", mesh_seed, "Sampling seed");
  mesh->add_option("--camera", mesh_camera, "Camera path JSON; default static 720x480");
  mesh->add_option("--out", mesh_out, "Output directory")->required();
  add_workers(mesh);
  mesh->callback([&] {
    action = [&] {
      const das::MeshSequence seq = das::read_mesh_sequence(mesh_glob);
      das::write_bundle(mesh_out, das::mesh_bundle(seq, mesh_samples, mesh_seed,
                                                   camera_or_default(mesh_camera),
                                                   render_options(workers)));
      return 0;
    };
  });

  // tracks
  std::string trk_in, trk_camera, trk_out;
  auto* tracks = app.add_subcommand("tracks", "Render imported TRK1 tracks");
  tracks->add_option("--in", trk_in, "TRK1 file")->required();
  tracks->add_option("--camera", trk_camera, "Camera path JSON; default static 720x480");
  tracks->add_option("--out", trk_out, "Output directory")->required();
  add_workers(tracks);
  tracks->callback([&] {
    action = [&] {
      das::write_bundle(trk_out, das::tracks_bundle(das::read_trackset(trk_in),
                                                    camera_or_default(trk_camera),
                                                    render_options(workers)));
      return 0;
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate poses or frame quality");
  eval->require_subcommand(1);
  std::string gt_file, est_file;
  auto* eval_pose = eval->add_subcommand("pose", "RotErr/TransErr in degrees");
  eval_pose->add_option("--gt", gt_file, "Ground-truth camera path JSON")->required();
  eval_pose->add_option("--est", est_file, "Estimated camera path JSON")->required();
  eval_pose->callback([&] {
    action = [&] {
      const das::PoseErrors e =
          das::compare_paths(das::read_camera_path(est_file), das::read_camera_path(gt_file));
      std::printf("RotErr %.2f TransErr %.2f\n", e.rot_err, e.trans_err);
      return 0;
    };
  });
  std::string qa, qb;
  auto* eval_quality = eval->add_subcommand("quality", "PSNR/SSIM between two frame directories");
  eval_quality->add_option("--a", qa, "Bundle directory")->required();
  eval_quality->add_option("--b", qb, "Bundle directory")->required();
  eval_quality->callback([&] {
    action = [&] {
      const das::FrameSequence a = read_frames(qa);
      const das::FrameSequence b = read_frames(qb);
      std::printf("PSNR %.2f SSIM %.4f\n", das::psnr(a, b), das::ssim(a, b));
      return 0;
    };
  });

  // sim
  auto* sim = app.add_subcommand("sim", "Toy zero-init conditioning simulator");
  sim->require_subcommand(1);
  std::uint64_t check_seed = 0;
  auto* sim_check_cmd = sim->add_subcommand("check", "Zero-init, frozen-base and gradient checks");
  sim_check_cmd->add_option("--seed", check_seed, "Model seed");
  sim_check_cmd->callback([&] { action = [&] { return sim_check(check_seed); }; });

  int train_steps = 500;
  std::uint64_t train_seed = 0;
  std::size_t train_batch = 1;
  int train_rank = 4;
  std::string train_out;
  auto* sim_train = sim->add_subcommand("train", "Train on the noise-copy task");
  sim_train->add_option("--steps", train_steps, "Optimizer steps")->check(CLI::NonNegativeNumber);
  sim_train->add_option("--seed", train_seed, "Model and data seed");
  sim_train->add_option("--batch", train_batch, "Examples per step")->check(CLI::PositiveNumber);
  sim_train->add_option("--noise-rank", train_rank, "Rank of the noise subspace");
  sim_train->add_option("--out", train_out, "Loss trace file; stdout when omitted");
  sim_train->callback([&] {
    action = [&] {
      das::toy::ToyDiTConfig cfg;
      cfg.seed = train_seed;
      das::toy::ToyDiT model = das::toy::ToyDiT::init(cfg);
      model.attach();
      das::toy::TrainOptions opts;
      opts.steps = train_steps;
      opts.seed = train_seed;
      opts.batch_size = train_batch;
      opts.noise_rank = train_rank;
      std::string text;
      char buf[40];
      for (double loss : das::toy::train_noise_copy(model, opts)) {
        std::snprintf(buf, sizeof buf, "%.17g\n", loss);
        text += buf;
      }
      if (train_out.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        das::write_text(train_out, text);
      }
      return 0;
    };
  });

  // serve
  std::optional<int> port;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Run the studio HTTP service");
  serve->add_option("--port", port, "Port; default $DAS_PORT or 8350")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Bind address");
  add_workers(serve);
  serve->callback([&] {
    action = [&] {
      das::ServiceOptions opts;
      opts.render_workers = workers;
      const int p = das::resolve_port(port);
      std::fprintf(stderr, "listening on %s:%d\n", host.c_str(), p);
      das::serve(host, p, opts);
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("Usage", e.what());
    return kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const das::Error& e) {
    report_error(das::to_string(e.code()), e.what());
    return kExitData;
  } catch (const std::exception& e) {
    report_error("Internal", e.what());
    return kExitData;
  }
}
