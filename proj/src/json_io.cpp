#include "das/json_io.hpp"

#include "das/error.hpp"
#include "das/formats.hpp"

#include <cmath>

namespace das {

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::BadJson, what); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) bad("expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing field '") + key + "'");
  return *it;
}

double number(const Json& j, const char* what) {
  if (!j.is_number()) bad(std::string("'") + what + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, std::string("'") + what + "' is not finite");
  return v;
}

int integer(const Json& j, const char* what) {
  if (!j.is_number_integer()) bad(std::string("'") + what + "' must be an integer");
  const auto v = j.get<std::int64_t>();
  if (v < INT32_MIN || v > INT32_MAX) bad(std::string("'") + what + "' out of range");
  return static_cast<int>(v);
}

Vec3 vec3(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) bad(std::string("'") + what + "' must be [x, y, z]");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

Quat quat(const Json& j) {
  if (!j.is_array() || j.size() != 4) bad("'q' must be [qw, qx, qy, qz]");
  return Quat(number(j[0], "q"), number(j[1], "q"), number(j[2], "q"), number(j[3], "q"));
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
Json quat_json(const Quat& q) { return Json::array({q.w(), q.x(), q.y(), q.z()}); }

}  // namespace

std::string canonical_dump(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    bad(e.what());
  }
}

Json read_json(const std::filesystem::path& file) {
  const auto bytes = read_file(file);
  return parse_json({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

void write_json(const std::filesystem::path& file, const Json& j) {
  write_text(file, canonical_dump(j));
}

Json to_json(const Intrinsics& intr) {
  return {{"fx", intr.fx}, {"fy", intr.fy}, {"cx", intr.cx},
          {"cy", intr.cy}, {"width", intr.width}, {"height", intr.height}};
}

Intrinsics intrinsics_from_json(const Json& j) {
  Intrinsics intr;
  intr.fx = number(field(j, "fx"), "fx");
  intr.fy = number(field(j, "fy"), "fy");
  intr.cx = number(field(j, "cx"), "cx");
  intr.cy = number(field(j, "cy"), "cy");
  intr.width = integer(field(j, "width"), "width");
  intr.height = integer(field(j, "height"), "height");
  intr.validate();
  return intr;
}

Json to_json(const CameraPath& path) {
  Json frames = Json::array();
  for (const Pose& p : path.poses) {
    frames.push_back({{"q", quat_json(p.q())}, {"t", vec_json(p.t())}});
  }
  return {{"intrinsics", to_json(path.intrinsics)}, {"frames", frames}};
}

CameraPath camera_path_from_json(const Json& j) {
  CameraPath path;
  path.intrinsics = intrinsics_from_json(field(j, "intrinsics"));
  const Json& frames = field(j, "frames");
  if (!frames.is_array() || frames.empty()) bad("'frames' must be a non-empty array");
  for (const Json& f : frames) {
    path.poses.emplace_back(quat(field(f, "q")), vec3(field(f, "t"), "t"));
  }
  return path;
}

CameraPath read_camera_path(const std::filesystem::path& file) {
  return camera_path_from_json(read_json(file));
}

void write_camera_path(const std::filesystem::path& file, const CameraPath& path) {
  write_json(file, to_json(path));
}

Json to_json(const TransformTimeline& timeline) {
  Json keys = Json::array();
  for (const auto& k : timeline.keyframes) {
    keys.push_back({{"frame", k.frame}, {"q", quat_json(k.rotation)}, {"t", vec_json(k.translation)}});
  }
  Json pivot = timeline.pivot ? vec_json(*timeline.pivot) : Json("centroid");
  return {{"pivot", pivot}, {"keyframes", keys}};
}

TransformTimeline timeline_from_json(const Json& j) {
  TransformTimeline timeline;
  if (!j.is_object()) bad("timeline must be an object");
  if (auto it = j.find("pivot"); it != j.end()) {
    if (it->is_string()) {
      if (it->get<std::string>() != "centroid") bad("pivot must be \"centroid\" or [x, y, z]");
    } else {
      timeline.pivot = vec3(*it, "pivot");
    }
  }
  const Json& keys = field(j, "keyframes");
  if (!keys.is_array()) bad("'keyframes' must be an array");
  for (const Json& k : keys) {
    TransformKeyframe key;
    key.frame = integer(field(k, "frame"), "frame");
    key.rotation = quat(field(k, "q"));
    key.translation = vec3(field(k, "t"), "t");
    require_unit(key.rotation, 1e-3);
    key.rotation = canonical(key.rotation.normalized());
    timeline.keyframes.push_back(key);
  }
  return timeline;
}

TransformTimeline read_timeline(const std::filesystem::path& file) {
  return timeline_from_json(read_json(file));
}

void write_timeline(const std::filesystem::path& file, const TransformTimeline& timeline) {
  write_json(file, to_json(timeline));
}

Json to_json(const TrajectorySpec& spec) {
  Json j = {{"kind", std::string(to_string(spec.kind))},
            {"frames", spec.frames},
            {"magnitude", spec.magnitude},
            {"turns", spec.turns}};
  if (spec.radius) j["radius"] = *spec.radius;
  if (spec.look_at) j["look_at"] = vec_json(*spec.look_at);
  if (!spec.keyframes.empty()) {
    Json keys = Json::array();
    for (const auto& k : spec.keyframes) {
      keys.push_back({{"frame", k.frame}, {"q", quat_json(k.pose.q())}, {"t", vec_json(k.pose.t())}});
    }
    j["keyframes"] = keys;
  }
  return j;
}

TrajectorySpec trajectory_spec_from_json(const Json& j) {
  TrajectorySpec spec;
  const Json& kind = field(j, "kind");
  if (!kind.is_string()) bad("'kind' must be a string");
  try {
    spec.kind = trajectory_kind_from_string(kind.get<std::string>());
  } catch (const Error& e) {
    bad(e.what());
  }
  if (auto it = j.find("frames"); it != j.end()) spec.frames = integer(*it, "frames");
  if (auto it = j.find("magnitude"); it != j.end()) spec.magnitude = number(*it, "magnitude");
  if (auto it = j.find("turns"); it != j.end()) spec.turns = number(*it, "turns");
  if (auto it = j.find("radius"); it != j.end()) spec.radius = number(*it, "radius");
  if (auto it = j.find("look_at"); it != j.end() && !it->is_null()) spec.look_at = vec3(*it, "look_at");
  if (auto it = j.find("keyframes"); it != j.end()) {
    if (!it->is_array()) bad("'keyframes' must be an array");
    for (const Json& k : *it) {
      spec.keyframes.push_back({integer(field(k, "frame"), "frame"),
                                Pose(quat(field(k, "q")), vec3(field(k, "t"), "t"))});
    }
  }
  return spec;
}

Json to_json(const FrameManifest& m) {
  return {{"T", m.frames}, {"width", m.width}, {"height", m.height}, {"files", m.files}};
}

FrameManifest manifest_from_json(const Json& j) {
  FrameManifest m;
  const int frames = integer(field(j, "T"), "T");
  if (frames < 1) bad("manifest T must be positive");
  m.frames = static_cast<std::size_t>(frames);
  m.width = integer(field(j, "width"), "width");
  m.height = integer(field(j, "height"), "height");
  const Json& files = field(j, "files");
  if (!files.is_array() || files.size() != m.frames) bad("manifest 'files' must list T entries");
  for (const Json& f : files) {
    if (!f.is_string()) bad("manifest file names must be strings");
    m.files.push_back(f.get<std::string>());
  }
  return m;
}

Json to_json(const ColorBounds& b) {
  return {{"x", {b.x_min, b.x_max}}, {"y", {b.y_min, b.y_max}}, {"inv_z", {b.inv_z_min, b.inv_z_max}}};
}

}  // namespace das
