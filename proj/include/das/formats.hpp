#pragma once

// Binary and text readers/writers for the pipeline's file formats.
//
// TRK1 layout (all integers little-endian):
//   offset  0  "DAS3DTRK"
//   offset  8  u32 version (1)
//   offset 12  u32 T (frames)
//   offset 16  u32 N (points)
//   offset 20  u32 flags, bit 0 = visibility plane present
//   offset 24  T*N*3 float32 LE, frame-major, then point, then x,y,z
//   then       T*N bytes of 0/1 visibility when flagged
// The file length must match the header exactly.

#include "das/builders.hpp"
#include "das/geometry.hpp"
#include "das/render.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace das {

inline constexpr std::size_t kTrk1HeaderSize = 24;
inline constexpr std::uint32_t kTrk1Version = 1;
inline constexpr std::uint32_t kTrk1FlagVisibility = 1u;

std::vector<std::uint8_t> encode_trackset(const TrackSet& tracks);
TrackSet decode_trackset(std::span<const std::uint8_t> bytes);

void write_trackset(const std::filesystem::path& file, const TrackSet& tracks);
TrackSet read_trackset(const std::filesystem::path& file);

/// Grayscale PFM ("Pf"). Rows are stored bottom-up on disk and returned
/// top-down.
DepthMap decode_depth_pfm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_depth_pfm(const DepthMap& depth);
DepthMap read_depth_pfm(const std::filesystem::path& file);
void write_depth_pfm(const std::filesystem::path& file, const DepthMap& depth);

/// Binary PGM ("P5", maxval 255); values >= 128 are foreground.
Mask decode_mask_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_mask_pgm(const Mask& mask);
Mask read_mask_pgm(const std::filesystem::path& file);
void write_mask_pgm(const std::filesystem::path& file, const Mask& mask);

/// Vertices ("v") and triangular faces ("f") only; other statements are
/// ignored.
TriangleMesh parse_obj(std::string_view text);
/// Files matching the glob, in lexicographic order, validated for constant
/// topology.
MeshSequence read_mesh_sequence(const std::string& glob_pattern);

std::vector<std::uint8_t> read_file(const std::filesystem::path& file);
void write_file(const std::filesystem::path& file, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& file, std::string_view text);

}  // namespace das
