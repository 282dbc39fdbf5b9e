#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace voxprint {

/// 8-bit image with 1 (gray) or 4 (RGBA) interleaved channels, rows top to
/// bottom.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;
};

/// PNG via libpng. Output is deterministic: no timestamps or text chunks.
void write_png(const Image8& image, const std::filesystem::path& path);
/// Reads a PNG, converting to `channels` (1 or 4).
Image8 read_png(const std::filesystem::path& path, int channels);

}  // namespace voxprint
