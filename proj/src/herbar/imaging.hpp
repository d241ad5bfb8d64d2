#pragma once

#include "herbar/geometry.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace herbar {

// 8-bit RGBA raster, row-major.
class ColorImage {
 public:
  ColorImage() = default;
  ColorImage(int width, int height, std::uint8_t r = 0, std::uint8_t g = 0, std::uint8_t b = 0,
             std::uint8_t a = 255);
  ColorImage(int width, int height, std::vector<std::uint8_t> rgba);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t* px(int x, int y) noexcept { return &pixels_[4 * (static_cast<std::size_t>(y) * width_ + x)]; }
  const std::uint8_t* px(int x, int y) const noexcept {
    return &pixels_[4 * (static_cast<std::size_t>(y) * width_ + x)];
  }
  std::span<const std::uint8_t> data() const noexcept { return pixels_; }
  std::span<std::uint8_t> data() noexcept { return pixels_; }

  friend bool operator==(const ColorImage&, const ColorImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// 8-bit luminance raster, row-major.
class Image {
 public:
  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0);
  Image(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const noexcept { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) noexcept { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  const std::uint8_t* row(int y) const noexcept { return &pixels_[static_cast<std::size_t>(y) * width_]; }
  std::span<const std::uint8_t> data() const noexcept { return pixels_; }
  std::span<std::uint8_t> data() noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct Pyramid {
  std::vector<Image> levels;
  double scale_factor = 1.2;
};

constexpr int kMinPyramidLevelSize = 32;

// BT.601 luma, round half up. Alpha is ignored.
Image to_grayscale(const ColorImage& img);

// Gray replicated into R, G and B with opaque alpha.
ColorImage expand_to_rgba(const Image& img);

// Area-averaged pyramid; every level is resampled from the base. Levels under
// 32x32 are dropped. Throws ImageTooSmall if the base is under 32x32.
Pyramid build_pyramid(const Image& img, int n_levels, double scale_factor);

// Box-filter resample to an arbitrary size (fractional footprint weights).
Image resize_area(const Image& img, int out_w, int out_h);

// Inverse-mapped bilinear warp. `h` maps source coordinates to output coordinates.
Image warp_perspective(const Image& img, const Homography& h, int out_w, int out_h,
                       std::uint8_t fill = 255);

enum class Side { Left, Right, Top, Bottom };

const char* to_string(Side side) noexcept;

// Blanks floor(fraction * area) pixels starting from the given side.
Image occlude(const Image& img, double fraction, Side side, std::uint8_t fill = 255);

}  // namespace herbar
