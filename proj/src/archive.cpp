#include "das/archive.hpp"

#include "das/error.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>

namespace das {

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(std::uint8_t* field, std::size_t width, std::uint64_t value) {
  // width includes the terminating NUL
  std::snprintf(reinterpret_cast<char*>(field), width, "%0*llo", static_cast<int>(width - 1),
                static_cast<unsigned long long>(value));
}

std::uint64_t get_octal(const std::uint8_t* field, std::size_t width) {
  std::uint64_t v = 0;
  std::size_t k = 0;
  while (k < width && field[k] == ' ') ++k;
  for (; k < width && field[k] >= '0' && field[k] <= '7'; ++k) {
    if (v > (UINT64_MAX >> 3)) fail(ErrorCode::BadHeader, "tar number overflow");
    v = v * 8 + (field[k] - '0');
  }
  return v;
}

std::uint64_t header_checksum(const std::uint8_t* h) {
  std::uint64_t sum = 0;
  for (std::size_t k = 0; k < kBlock; ++k) sum += (k >= 148 && k < 156) ? ' ' : h[k];
  return sum;
}

}  // namespace

std::vector<std::uint8_t> write_tar(const std::vector<ArchiveEntry>& entries) {
  std::vector<std::uint8_t> out;
  for (const auto& e : entries) {
    if (e.name.empty() || e.name.size() > 99) {
      fail(ErrorCode::InvalidArgument, "tar entry names must be 1..99 bytes");
    }
    std::uint8_t h[kBlock] = {};
    std::memcpy(h, e.name.data(), e.name.size());
    put_octal(h + 100, 8, 0644);
    put_octal(h + 108, 8, 0);
    put_octal(h + 116, 8, 0);
    put_octal(h + 124, 12, e.data.size());
    put_octal(h + 136, 12, 0);
    h[156] = '0';
    std::memcpy(h + 257, "ustar", 6);
    h[263] = '0';
    h[264] = '0';
    const std::uint64_t sum = header_checksum(h);
    std::snprintf(reinterpret_cast<char*>(h + 148), 8, "%06llo", static_cast<unsigned long long>(sum));
    h[155] = ' ';
    out.insert(out.end(), h, h + kBlock);
    out.insert(out.end(), e.data.begin(), e.data.end());
    out.resize(out.size() + (kBlock - e.data.size() % kBlock) % kBlock, 0);
  }
  out.resize(out.size() + 2 * kBlock, 0);
  return out;
}

std::vector<ArchiveEntry> read_tar(std::span<const std::uint8_t> bytes) {
  std::vector<ArchiveEntry> entries;
  std::size_t pos = 0;
  while (true) {
    if (bytes.size() - pos < kBlock) fail(ErrorCode::TruncatedFile, "tar is truncated");
    const std::uint8_t* h = bytes.data() + pos;
    if (std::all_of(h, h + kBlock, [](std::uint8_t b) { return b == 0; })) break;
    if (get_octal(h + 148, 8) != header_checksum(h)) {
      fail(ErrorCode::BadHeader, "tar header checksum mismatch");
    }
    const std::uint64_t size = get_octal(h + 124, 12);
    pos += kBlock;
    if (size > bytes.size() - pos) fail(ErrorCode::TruncatedFile, "tar entry is truncated");
    const std::size_t name_len = strnlen(reinterpret_cast<const char*>(h), 100);
    if (h[156] == '0' || h[156] == 0) {
      entries.push_back({std::string(reinterpret_cast<const char*>(h), name_len),
                         std::vector<std::uint8_t>(bytes.begin() + pos,
                                                   bytes.begin() + pos + size)});
    }
    pos += size + (kBlock - size % kBlock) % kBlock;
    if (pos > bytes.size()) fail(ErrorCode::TruncatedFile, "tar entry is truncated");
  }
  return entries;
}

}  // namespace das
