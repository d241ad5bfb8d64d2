#pragma once

#include "herbar/content.hpp"
#include "herbar/imaging.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace herbar::fixtures {

constexpr int kCatalogSize = 88;

struct HerbName {
  const char* id;  // pinyin, used as content_id and target name
  const char* cn;
  const char* en;
};

// The 88 herbs of the shipped catalog, in catalog order.
const std::vector<HerbName>& herb_names();

// Synthetic catalog entries; the descriptive text is placeholder material.
std::vector<HerbEntry> synthetic_catalog();

// Dense random shapes over a soft gradient. Distinct seeds give unrelated pictures.
ColorImage herb_picture(std::uint64_t seed, int width, int height);

// A single small dark square in the middle of a white page.
ColorImage low_texture_picture(int width, int height);

// Size used for the seeded picture of the i-th herb (varies aspect ratio).
std::pair<int, int> picture_size(std::uint64_t seed);

}  // namespace herbar::fixtures
