#pragma once

#include "herbar/imaging.hpp"

#include <filesystem>

namespace herbar {

// Any PNG decodes to 8-bit RGBA; gray inputs replicate into R, G and B.
ColorImage read_png(const std::filesystem::path& path);
void write_png(const ColorImage& img, const std::filesystem::path& path);
void write_png(const Image& img, const std::filesystem::path& path);

}  // namespace herbar
