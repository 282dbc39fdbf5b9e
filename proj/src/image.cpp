#include "voxprint/image.hpp"

#include <png.h>

#include <cstring>

#include "voxprint/errors.hpp"

namespace voxprint {

namespace {

png_uint_32 format_for(int channels) {
  if (channels == 1) return PNG_FORMAT_GRAY;
  if (channels == 4) return PNG_FORMAT_RGBA;
  throw ConfigError("PNG images must have 1 or 4 channels");
}

}  // namespace

void write_png(const Image8& image, const std::filesystem::path& path) {
  if (image.width < 1 || image.height < 1) throw ConfigError("cannot write an empty image");
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * image.channels) {
    throw ConfigError("image buffer size does not match its dimensions");
  }
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = format_for(image.channels);
  // Pixel values are written as-is: label codes must not be gamma-adjusted.
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw FormatError("cannot write " + path.string() + ": " + png.message);
  }
}

Image8 read_png(const std::filesystem::path& path, int channels) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw FormatError("cannot read " + path.string() + ": " + png.message);
  }
  png.format = format_for(channels);
  Image8 out;
  out.width = static_cast<int>(png.width);
  out.height = static_cast<int>(png.height);
  out.channels = channels;
  out.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw FormatError("cannot decode " + path.string() + ": " + message);
  }
  return out;
}

}  // namespace voxprint
