#pragma once

#include "das/render.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace das {

/// RGB8 PNG; identical images always encode to identical bytes.
std::vector<std::uint8_t> encode_png(const Image& image);
/// Any PNG libpng understands, converted to RGB8.
Image decode_png(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& file, const Image& image);
Image read_png(const std::filesystem::path& file);

}  // namespace das
