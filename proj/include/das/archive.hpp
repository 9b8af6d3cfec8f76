#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace das {

struct ArchiveEntry {
  std::string name;
  std::vector<std::uint8_t> data;
};

/// POSIX ustar archive with fixed metadata (mode 0644, uid/gid 0, mtime 0)
/// so equal entries always produce equal bytes.
std::vector<std::uint8_t> write_tar(const std::vector<ArchiveEntry>& entries);

/// Regular-file entries of a ustar archive. Throws BadHeader or
/// TruncatedFile on malformed input.
std::vector<ArchiveEntry> read_tar(std::span<const std::uint8_t> bytes);

}  // namespace das
