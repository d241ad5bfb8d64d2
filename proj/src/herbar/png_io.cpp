#include "herbar/png_io.hpp"

#include "herbar/error.hpp"

#include <png.h>

#include <cstring>
#include <vector>

namespace herbar {

namespace {

void write_raw(const std::filesystem::path& path, int w, int h, png_uint_32 format, const std::uint8_t* data) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::Io, "cannot write " + path.string() + ": " + msg);
  }
}

}  // namespace

ColorImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::Io, "cannot read " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::Io, "cannot decode " + path.string() + ": " + msg);
  }
  return ColorImage(static_cast<int>(image.width), static_cast<int>(image.height), std::move(pixels));
}

void write_png(const ColorImage& img, const std::filesystem::path& path) {
  write_raw(path, img.width(), img.height(), PNG_FORMAT_RGBA, img.data().data());
}

void write_png(const Image& img, const std::filesystem::path& path) {
  write_raw(path, img.width(), img.height(), PNG_FORMAT_GRAY, img.data().data());
}

}  // namespace herbar
