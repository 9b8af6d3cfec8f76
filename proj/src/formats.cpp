#include "das/formats.hpp"

#include "das/error.hpp"

#include <glob.h>

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace das {

namespace {

constexpr char kTrkMagic[8] = {'D', 'A', 'S', '3', 'D', 'T', 'R', 'K'};
// Refuse dimensions whose payload would not fit comfortably in memory.
constexpr std::uint64_t kMaxPayloadBytes = 1ull << 34;
constexpr std::uint64_t kMaxPixels = 1ull << 28;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

}  // namespace

std::vector<std::uint8_t> encode_trackset(const TrackSet& tracks) {
  tracks.validate();
  if (tracks.frames() > std::numeric_limits<std::uint32_t>::max() ||
      tracks.points() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::InvalidArgument, "TrackSet too large for TRK1");
  }
  std::vector<std::uint8_t> out;
  const std::size_t count = tracks.frames() * tracks.points();
  out.reserve(kTrk1HeaderSize + 12 * count + (tracks.has_visibility() ? count : 0));
  for (char c : kTrkMagic) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, kTrk1Version);
  put_u32(out, static_cast<std::uint32_t>(tracks.frames()));
  put_u32(out, static_cast<std::uint32_t>(tracks.points()));
  put_u32(out, tracks.has_visibility() ? kTrk1FlagVisibility : 0u);
  for (const Eigen::Vector3f& p : tracks.positions()) {
    put_f32(out, p.x());
    put_f32(out, p.y());
    put_f32(out, p.z());
  }
  if (tracks.has_visibility()) {
    const auto vis = tracks.visibility();
    out.insert(out.end(), vis.begin(), vis.end());
  }
  return out;
}

TrackSet decode_trackset(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kTrk1HeaderSize) {
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kTrkMagic, 8) != 0) {
      fail(ErrorCode::BadMagic, "not a TRK1 file");
    }
    fail(ErrorCode::TruncatedFile, "TRK1 header is truncated");
  }
  if (std::memcmp(bytes.data(), kTrkMagic, 8) != 0) {
    fail(ErrorCode::BadMagic, "not a TRK1 file");
  }
  const std::uint32_t version = get_u32(bytes.data() + 8);
  const std::uint64_t frames = get_u32(bytes.data() + 12);
  const std::uint64_t points = get_u32(bytes.data() + 16);
  const std::uint32_t flags = get_u32(bytes.data() + 20);
  if (version != kTrk1Version) {
    fail(ErrorCode::VersionUnsupported, "TRK1 version " + std::to_string(version));
  }
  if (frames == 0 || points == 0) fail(ErrorCode::BadHeader, "TRK1 with T or N = 0");
  if ((flags & ~kTrk1FlagVisibility) != 0) fail(ErrorCode::BadHeader, "unknown TRK1 flags");

  const std::uint64_t count = frames * points;  // < 2^64 since both < 2^32
  if (count > kMaxPayloadBytes / 13) fail(ErrorCode::BadHeader, "TRK1 dimensions too large");
  const bool has_vis = (flags & kTrk1FlagVisibility) != 0;
  const std::uint64_t expected = kTrk1HeaderSize + 12 * count + (has_vis ? count : 0);
  if (bytes.size() < expected) fail(ErrorCode::TruncatedFile, "TRK1 payload is truncated");
  if (bytes.size() > expected) fail(ErrorCode::BadHeader, "TRK1 has trailing bytes");

  TrackSet tracks(frames, points);
  const std::uint8_t* p = bytes.data() + kTrk1HeaderSize;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < points; ++i, p += 12) {
      Eigen::Vector3f v(get_f32(p), get_f32(p + 4), get_f32(p + 8));
      if (!v.allFinite()) fail(ErrorCode::NonFiniteValue, "non-finite TRK1 coordinate");
      tracks.at(t, i) = v;
    }
  }
  if (has_vis) {
    tracks.enable_visibility();
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t i = 0; i < points; ++i, ++p) {
        if (*p > 1) fail(ErrorCode::BadHeader, "visibility bytes must be 0 or 1");
        tracks.set_visible(t, i, *p == 1);
      }
    }
  }
  for (std::size_t i = 0; i < points; ++i) {
    if (!(tracks.at(0, i).z() > 0)) {
      fail(ErrorCode::NegativeDepth, "frame-0 point with z <= 0");
    }
  }
  return tracks;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + file.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::IoFailure, "cannot read " + file.string());
  return bytes;
}

void write_file(const std::filesystem::path& file, std::span<const std::uint8_t> bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot create " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + file.string());
}

void write_text(const std::filesystem::path& file, std::string_view text) {
  write_file(file, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void write_trackset(const std::filesystem::path& file, const TrackSet& tracks) {
  write_file(file, encode_trackset(tracks));
}

TrackSet read_trackset(const std::filesystem::path& file) {
  return decode_trackset(read_file(file));
}

// --- Netpbm-style headers ---------------------------------------------------

namespace {

class HeaderScanner {
 public:
  explicit HeaderScanner(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string token(bool allow_comments) {
    skip_space(allow_comments);
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && out.size() < 64) {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) fail(ErrorCode::TruncatedFile, "header is truncated");
    return out;
  }

  /// Consumes the single whitespace byte that ends a header.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      fail(ErrorCode::TruncatedFile, "header is truncated");
    }
    ++pos_;
  }

  std::size_t offset() const { return pos_; }

 private:
  void skip_space(bool allow_comments) {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (allow_comments && bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

int parse_dimension(const std::string& tok) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || v <= 0 || v > (1 << 16)) {
    fail(ErrorCode::BadHeader, "bad image dimension '" + tok + "'");
  }
  return v;
}

}  // namespace

DepthMap decode_depth_pfm(std::span<const std::uint8_t> bytes) {
  HeaderScanner scan(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != 'f') {
    fail(ErrorCode::BadMagic, "not a grayscale PFM file");
  }
  if (scan.token(false) != "Pf") fail(ErrorCode::BadMagic, "not a grayscale PFM file");
  const int width = parse_dimension(scan.token(false));
  const int height = parse_dimension(scan.token(false));
  const std::string scale_tok = scan.token(false);
  scan.end_header();
  double scale = 0;
  {
    std::istringstream ss(scale_tok);
    ss.imbue(std::locale::classic());
    if (!(ss >> scale) || !ss.eof() || scale == 0 || !std::isfinite(scale)) {
      fail(ErrorCode::BadHeader, "bad PFM scale '" + scale_tok + "'");
    }
  }
  const bool little = scale < 0;
  const std::uint64_t pixels = static_cast<std::uint64_t>(width) * height;
  if (pixels > kMaxPixels) fail(ErrorCode::BadHeader, "PFM too large");
  const std::size_t begin = scan.offset();
  if (bytes.size() - begin < 4 * pixels) fail(ErrorCode::TruncatedFile, "PFM data is truncated");
  if (bytes.size() - begin > 4 * pixels) fail(ErrorCode::BadHeader, "PFM has trailing bytes");

  DepthMap depth{width, height, std::vector<float>(pixels)};
  const std::uint8_t* p = bytes.data() + begin;
  for (int row = height - 1; row >= 0; --row) {
    for (int col = 0; col < width; ++col, p += 4) {
      const std::uint32_t raw =
          little ? get_u32(p)
                 : (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
                       (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
      const float d = std::bit_cast<float>(raw);
      if (!std::isfinite(d)) fail(ErrorCode::NonFiniteValue, "non-finite depth");
      if (d < 0) fail(ErrorCode::NegativeDepth, "negative depth");
      depth.values[static_cast<std::size_t>(row) * width + col] = d;
    }
  }
  return depth;
}

std::vector<std::uint8_t> encode_depth_pfm(const DepthMap& depth) {
  if (depth.width <= 0 || depth.height <= 0 ||
      depth.values.size() != static_cast<std::size_t>(depth.width) * depth.height) {
    fail(ErrorCode::InvalidArgument, "malformed depth map");
  }
  const std::string header =
      "Pf\n" + std::to_string(depth.width) + " " + std::to_string(depth.height) + "\n-1.0\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + 4 * depth.values.size());
  for (int row = depth.height - 1; row >= 0; --row) {
    for (int col = 0; col < depth.width; ++col) put_f32(out, depth.at(col, row));
  }
  return out;
}

DepthMap read_depth_pfm(const std::filesystem::path& file) {
  return decode_depth_pfm(read_file(file));
}

void write_depth_pfm(const std::filesystem::path& file, const DepthMap& depth) {
  write_file(file, encode_depth_pfm(depth));
}

Mask decode_mask_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    fail(ErrorCode::BadMagic, "not a binary PGM file");
  }
  HeaderScanner scan(bytes);
  if (scan.token(true) != "P5") fail(ErrorCode::BadMagic, "not a binary PGM file");
  const int width = parse_dimension(scan.token(true));
  const int height = parse_dimension(scan.token(true));
  const std::string maxval = scan.token(true);
  scan.end_header();
  if (maxval != "255") fail(ErrorCode::BadHeader, "PGM maxval must be 255");
  const std::uint64_t pixels = static_cast<std::uint64_t>(width) * height;
  if (pixels > kMaxPixels) fail(ErrorCode::BadHeader, "PGM too large");
  const std::size_t begin = scan.offset();
  if (bytes.size() - begin < pixels) fail(ErrorCode::TruncatedFile, "PGM data is truncated");
  if (bytes.size() - begin > pixels) fail(ErrorCode::BadHeader, "PGM has trailing bytes");

  Mask mask{width, height, std::vector<std::uint8_t>(pixels)};
  for (std::size_t k = 0; k < pixels; ++k) mask.values[k] = bytes[begin + k] >= 128 ? 1 : 0;
  return mask;
}

std::vector<std::uint8_t> encode_mask_pgm(const Mask& mask) {
  if (mask.width <= 0 || mask.height <= 0 ||
      mask.values.size() != static_cast<std::size_t>(mask.width) * mask.height) {
    fail(ErrorCode::InvalidArgument, "malformed mask");
  }
  const std::string header =
      "P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (std::uint8_t v : mask.values) out.push_back(v ? 255 : 0);
  return out;
}

Mask read_mask_pgm(const std::filesystem::path& file) { return decode_mask_pgm(read_file(file)); }

void write_mask_pgm(const std::filesystem::path& file, const Mask& mask) {
  write_file(file, encode_mask_pgm(mask));
}

// --- OBJ ---------------------------------------------------------------------

namespace {

double parse_double(std::string_view tok) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    fail(ErrorCode::BadMesh, "bad number '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    const std::size_t start = k;
    while (k < line.size() && !std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    if (k > start) out.push_back(line.substr(start, k - start));
  }
  return out;
}

}  // namespace

TriangleMesh parse_obj(std::string_view text) {
  TriangleMesh mesh;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].starts_with('#')) continue;
    if (tok[0] == "v") {
      if (tok.size() < 4) fail(ErrorCode::BadMesh, "short vertex on line " + std::to_string(line_no));
      mesh.vertices.emplace_back(parse_double(tok[1]), parse_double(tok[2]), parse_double(tok[3]));
    } else if (tok[0] == "f") {
      if (tok.size() != 4) {
        fail(ErrorCode::BadMesh, "only triangular faces are supported (line " +
                                     std::to_string(line_no) + ")");
      }
      std::array<std::uint32_t, 3> face{};
      for (int k = 0; k < 3; ++k) {
        const std::string_view ref = tok[k + 1].substr(0, tok[k + 1].find('/'));
        long idx = 0;
        auto [ptr, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), idx);
        if (ec != std::errc() || ptr != ref.data() + ref.size() || idx == 0) {
          fail(ErrorCode::BadMesh, "bad face index on line " + std::to_string(line_no));
        }
        const long n = static_cast<long>(mesh.vertices.size());
        const long resolved = idx > 0 ? idx - 1 : n + idx;
        if (resolved < 0 || resolved >= n) {
          fail(ErrorCode::BadMesh, "face index out of range on line " + std::to_string(line_no));
        }
        face[k] = static_cast<std::uint32_t>(resolved);
      }
      mesh.faces.push_back(face);
    }
  }
  return mesh;
}

MeshSequence read_mesh_sequence(const std::string& glob_pattern) {
  glob_t g{};
  const int rc = ::glob(glob_pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> files;
  if (rc == 0) {
    for (std::size_t k = 0; k < g.gl_pathc; ++k) files.emplace_back(g.gl_pathv[k]);
  }
  ::globfree(&g);
  if (files.empty()) fail(ErrorCode::EmptyMesh, "no files match '" + glob_pattern + "'");

  MeshSequence seq;
  for (const auto& f : files) {
    const auto bytes = read_file(f);
    seq.frames.push_back(
        parse_obj({reinterpret_cast<const char*>(bytes.data()), bytes.size()}));
  }
  seq.validate();
  return seq;
}

}  // namespace das
