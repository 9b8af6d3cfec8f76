#include "das/service.hpp"

#include "das/formats.hpp"
#include "das/json_io.hpp"
#include "das/pipeline.hpp"
#include "das/png_io.hpp"

// After Eigen: glibc's resolv.h, pulled in here, defines a _res macro.
#include <httplib.h>

#include <charconv>
#include <cstdlib>
#include <cstring>
#include <list>
#include <mutex>
#include <random>
#include <unordered_map>

namespace das {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadJson:
    case ErrorCode::BadMagic:
    case ErrorCode::BadHeader:
    case ErrorCode::TruncatedFile:
    case ErrorCode::VersionUnsupported:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::BadMesh:
    case ErrorCode::InvalidArgument:
      return 400;
    case ErrorCode::InvalidIntrinsics:
    case ErrorCode::NonUnitQuaternion:
    case ErrorCode::NonPositiveDepth:
    case ErrorCode::NonPositiveZ:
    case ErrorCode::NegativeDepth:
    case ErrorCode::GridTooLarge:
    case ErrorCode::SizeMismatch:
    case ErrorCode::FrameOutOfRange:
    case ErrorCode::LengthMismatch:
    case ErrorCode::BadKeyframes:
    case ErrorCode::ZeroFrames:
    case ErrorCode::NoForegroundPoints:
    case ErrorCode::MissingSourcePixels:
    case ErrorCode::EmptyMesh:
    case ErrorCode::TopologyMismatch:
    case ErrorCode::TooFewCorrespondences:
    case ErrorCode::DegenerateConfiguration:
    case ErrorCode::DimensionMismatch:
      return 422;
    default:
      return 500;
  }
}

namespace {

struct Session {
  std::mutex mu;
  Image image;
  DepthMap depth;
  Intrinsics intr;
  PointCloud points;
};

struct Preview {
  std::vector<std::vector<std::uint8_t>> pngs;
  std::vector<std::uint8_t> tar;
};

struct NotFound {
  std::string what;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view msg) {
  send_json(res, status, {{"error", code}, {"message", msg}});
}

std::string_view bytes_view(const std::string& s) { return s; }

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

const std::string& form_part(const httplib::Request& req, const std::string& key) {
  auto it = req.files.find(key);
  if (it == req.files.end()) fail(ErrorCode::InvalidArgument, "missing form field '" + key + "'");
  return it->second.content;
}

std::optional<std::string> optional_part(const httplib::Request& req, const std::string& key) {
  auto it = req.files.find(key);
  if (it == req.files.end()) return std::nullopt;
  return it->second.content;
}

int parse_int(std::string_view text, std::string_view what) {
  int v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    fail(ErrorCode::InvalidArgument, std::string(what) + " must be an integer");
  }
  return v;
}

}  // namespace

struct Service::State {
  ServiceOptions opts;

  mutable std::mutex mu;
  std::list<std::string> lru;  // most recent first
  std::unordered_map<std::string, std::pair<std::shared_ptr<Session>,
                                            std::list<std::string>::iterator>> sessions;
  std::list<std::string> preview_lru;
  std::unordered_map<std::string, std::pair<std::shared_ptr<const Preview>,
                                            std::list<std::string>::iterator>> previews;
  std::random_device entropy;

  std::string new_id() {
    std::string id;
    for (int k = 0; k < 4; ++k) {
      char buf[9];
      std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(entropy()));
      id += buf;
    }
    return id;
  }

  std::string add_session(std::shared_ptr<Session> s) {
    std::lock_guard lock(mu);
    std::string id;
    do {
      id = new_id();
    } while (sessions.count(id));
    lru.push_front(id);
    sessions.emplace(id, std::make_pair(std::move(s), lru.begin()));
    while (sessions.size() > opts.max_sessions) {
      sessions.erase(lru.back());
      lru.pop_back();
    }
    return id;
  }

  std::shared_ptr<Session> session(const std::string& id) {
    std::lock_guard lock(mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw NotFound{"unknown session"};
    lru.splice(lru.begin(), lru, it->second.second);
    return it->second.first;
  }

  std::shared_ptr<const Preview> preview(const std::string& id) {
    std::lock_guard lock(mu);
    auto it = previews.find(id);
    if (it == previews.end()) return nullptr;
    preview_lru.splice(preview_lru.begin(), preview_lru, it->second.second);
    return it->second.first;
  }

  void store_preview(const std::string& id, std::shared_ptr<const Preview> p) {
    std::lock_guard lock(mu);
    if (previews.count(id)) return;
    preview_lru.push_front(id);
    previews.emplace(id, std::make_pair(std::move(p), preview_lru.begin()));
    while (previews.size() > opts.max_previews) {
      previews.erase(preview_lru.back());
      preview_lru.pop_back();
    }
  }

  RenderOptions render_options() const {
    RenderOptions r;
    r.workers = opts.render_workers;
    return r;
  }

  // Returns the cached or freshly rendered preview for a request on a
  // session, along with its id.
  std::pair<std::string, std::shared_ptr<const Preview>> camera_preview(
      const std::string& sid, const std::string& body) {
    auto s = session(sid);
    const TrajectorySpec spec = trajectory_spec_from_json(parse_json(body));
    check_frames(spec.frames);
    const std::string key = "camera\n" + canonical_dump(to_json(spec));
    const std::string pid = hex64(fnv1a(sid)) + hex64(fnv1a(key));
    if (auto p = preview(pid)) return {pid, p};
    std::lock_guard lock(s->mu);
    auto p = make_preview(camera_bundle(s->points, s->intr, spec, render_options()));
    store_preview(pid, p);
    return {pid, p};
  }

  std::pair<std::string, std::shared_ptr<const Preview>> object_preview(
      const std::string& sid, const httplib::Request& req) {
    auto s = session(sid);
    const std::string& mask_bytes = form_part(req, "mask");
    const Mask mask = decode_mask_pgm(as_bytes(mask_bytes));
    const TransformTimeline timeline = timeline_from_json(parse_json(form_part(req, "timeline")));
    const auto frames_text = optional_part(req, "frames");
    const int frames = frames_text ? parse_int(*frames_text, "frames") : 49;
    check_frames(frames);
    std::string key = "object\n" + canonical_dump(to_json(timeline)) + std::to_string(frames) + "\n";
    const std::string pid =
        hex64(fnv1a(sid)) + hex64(fnv1a(bytes_view(mask_bytes), fnv1a(key)));
    if (auto p = preview(pid)) return {pid, p};
    std::lock_guard lock(s->mu);
    auto p = make_preview(
        object_bundle(s->points, s->intr, mask, timeline, frames, render_options()));
    store_preview(pid, p);
    return {pid, p};
  }

  void check_frames(int frames) const {
    if (frames > opts.max_frames) {
      fail(ErrorCode::ZeroFrames, "at most " + std::to_string(opts.max_frames) + " frames");
    }
  }

  static std::shared_ptr<const Preview> make_preview(const Bundle& bundle) {
    auto p = std::make_shared<Preview>();
    const auto entries = bundle_entries(bundle);
    for (std::size_t t = 0; t < bundle.video.size(); ++t) p->pngs.push_back(entries[t].data);
    p->tar = write_tar(entries);
    return p;
  }
};

Service::Service(ServiceOptions opts) : state_(std::make_unique<State>()) {
  state_->opts = std::move(opts);
  if (state_->opts.max_sessions == 0) state_->opts.max_sessions = 1;
  if (state_->opts.max_previews == 0) state_->opts.max_previews = 1;
}

Service::~Service() = default;

std::size_t Service::session_count() const {
  std::lock_guard lock(state_->mu);
  return state_->sessions.size();
}

namespace {

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const NotFound& e) {
      send_error(res, 404, "NotFound", e.what);
    } catch (const Error& e) {
      const int status = http_status(e.code());
      if (status == 500) {
        send_error(res, 500, "Internal", "internal error");
      } else {
        send_error(res, status, to_string(e.code()), e.what());
      }
    } catch (...) {
      send_error(res, 500, "Internal", "internal error");
    }
  };
}

}  // namespace

void Service::mount(httplib::Server& server) {
  State* st = state_.get();

  server.set_default_headers({{"Access-Control-Allow-Origin", st->opts.cors_origin}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        send_error(res, 500, "Internal", "internal error");
      });

  server.Get("/api/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  server.Post("/api/sessions", guarded([st](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data()) {
      fail(ErrorCode::InvalidArgument, "expected multipart form data");
    }
    auto s = std::make_shared<Session>();
    s->image = decode_png(as_bytes(form_part(req, "image")));
    s->depth = decode_depth_pfm(as_bytes(form_part(req, "depth")));
    if (s->image.width != s->depth.width || s->image.height != s->depth.height) {
      fail(ErrorCode::SizeMismatch, "image and depth sizes differ");
    }
    if (auto intr = optional_part(req, "intrinsics")) {
      s->intr = intrinsics_from_json(parse_json(*intr));
    } else {
      s->intr = default_intrinsics(s->depth.width, s->depth.height);
    }
    const auto grid_text = optional_part(req, "grid");
    const int grid = grid_text ? parse_int(*grid_text, "grid") : kDefaultGrid;
    s->points = unproject_depth(s->depth, s->intr, grid);

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const Vec3& p : s->points.positions) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const std::size_t n = s->points.positions.size();
    const std::string id = st->add_session(std::move(s));
    send_json(res, 200,
              {{"id", id},
               {"n_points", n},
               {"bbox", {{"min", {lo.x(), lo.y(), lo.z()}}, {"max", {hi.x(), hi.y(), hi.z()}}}}});
  }));

  server.Get(R"(/api/sessions/([^/]+)/points)",
             guarded([st](const httplib::Request& req, httplib::Response& res) {
               auto s = st->session(req.matches[1]);
               const int grid = req.has_param("grid")
                                    ? parse_int(req.get_param_value("grid"), "grid")
                                    : kDefaultGrid;
               PointCloud cloud;
               {
                 std::lock_guard lock(s->mu);
                 cloud = unproject_depth(s->depth, s->intr, grid);
               }
               // Colors match the renderer, which works from float positions.
               std::vector<Vec3> stored;
               stored.reserve(cloud.positions.size());
               for (const Vec3& p : cloud.positions) stored.push_back(p.cast<float>().cast<double>());
               const ColorMap colors = colorize(stored);
               Json out = Json::array();
               for (std::size_t i = 0; i < stored.size(); ++i) {
                 const Rgb8 c = colors.quantized[i];
                 out.push_back({{"x", stored[i].x()}, {"y", stored[i].y()}, {"z", stored[i].z()},
                                {"r", c[0]}, {"g", c[1]}, {"b", c[2]}});
               }
               send_json(res, 200, out);
             }));

  server.Post(R"(/api/sessions/([^/]+)/previews/camera)",
              guarded([st](const httplib::Request& req, httplib::Response& res) {
                auto [pid, p] = st->camera_preview(req.matches[1], req.body);
                send_json(res, 200, {{"preview_id", pid}, {"frames", p->pngs.size()}});
              }));

  server.Post(R"(/api/sessions/([^/]+)/previews/object)",
              guarded([st](const httplib::Request& req, httplib::Response& res) {
                if (!req.is_multipart_form_data()) {
                  st->session(req.matches[1]);
                  fail(ErrorCode::InvalidArgument, "expected multipart form data");
                }
                auto [pid, p] = st->object_preview(req.matches[1], req);
                send_json(res, 200, {{"preview_id", pid}, {"frames", p->pngs.size()}});
              }));

  server.Get(R"(/api/previews/([^/]+)/frames/([^/]+))",
             guarded([st](const httplib::Request& req, httplib::Response& res) {
               auto p = st->preview(req.matches[1]);
               if (!p) throw NotFound{"unknown preview"};
               const std::string k_text = req.matches[2];
               std::size_t k = 0;
               auto [end, ec] = std::from_chars(k_text.data(), k_text.data() + k_text.size(), k);
               if (ec != std::errc() || end != k_text.data() + k_text.size()) {
                 fail(ErrorCode::InvalidArgument, "frame index must be a non-negative integer");
               }
               if (k >= p->pngs.size()) throw NotFound{"frame index out of range"};
               const auto& png = p->pngs[k];
               res.set_content(std::string(png.begin(), png.end()), "image/png");
             }));

  server.Post(R"(/api/sessions/([^/]+)/export)",
              guarded([st](const httplib::Request& req, httplib::Response& res) {
                auto [pid, p] = req.is_multipart_form_data()
                                    ? st->object_preview(req.matches[1], req)
                                    : st->camera_preview(req.matches[1], req.body);
                res.set_header("Content-Disposition",
                               "attachment; filename=\"bundle-" + pid + ".tar\"");
                res.set_content(std::string(p->tar.begin(), p->tar.end()), "application/x-tar");
              }));
}

int resolve_port(std::optional<int> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kPortEnv); env && *env) {
    const int port = parse_int(env, kPortEnv);
    if (port < 0 || port > 65535) fail(ErrorCode::InvalidArgument, "port out of range");
    return port;
  }
  return kDefaultPort;
}

void serve(const std::string& host, int port, ServiceOptions opts) {
  httplib::Server server;
  Service service(std::move(opts));
  service.mount(server);
  if (!server.listen(host, port)) {
    fail(ErrorCode::IoFailure, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace das
