#pragma once

#include "herbar/imaging.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <vector>

namespace herbar {

struct Keypoint {
  float x = 0;  // base-image frame
  float y = 0;
  std::uint8_t level = 0;
  float angle = 0;  // radians, [-pi, pi]
  float score = 0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

// 256-bit binary descriptor. Bit k lives in byte k/8 at position k%8 (LSB first).
struct Descriptor {
  std::array<std::uint8_t, 32> bytes{};

  bool bit(int k) const noexcept { return (bytes[k >> 3] >> (k & 7)) & 1u; }
  void set_bit(int k) noexcept { bytes[k >> 3] |= static_cast<std::uint8_t>(1u << (k & 7)); }

  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

int hamming(const Descriptor& a, const Descriptor& b) noexcept;

struct FeatureSet {
  int width = 0;  // source dims
  int height = 0;
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;

  std::size_t size() const noexcept { return keypoints.size(); }
  bool empty() const noexcept { return keypoints.empty(); }

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

struct PatternPair {
  std::int8_t ax, ay, bx, by;
};

constexpr int kDescriptorBits = 256;
constexpr int kPatternRadius = 13;
constexpr int kOrientationRadius = 15;
constexpr int kDescriptorMargin = 19;
constexpr int kFastBorder = 16;

using SamplingPattern = std::array<PatternPair, kDescriptorBits>;

// The fixed, seeded test-pair layout. Generated once and shared read-only.
const SamplingPattern& sampling_pattern();
SamplingPattern generate_sampling_pattern(std::uint64_t seed);

struct ExtractParams {
  int threshold = 20;
  int n_levels = 4;
  double scale_factor = 1.2;
  int max_features = 500;
  int nms_radius = 3;
};

// FAST-9 segment test with non-maximum suppression. Coordinates are integer,
// level-local; angle is left at 0.
std::vector<Keypoint> detect_corners(const Image& img, int threshold, int nms_radius,
                                     int border = kFastBorder);

// Intensity-centroid orientation over a disc around (x, y).
double compute_orientation(const Image& img, int x, int y, int radius = kOrientationRadius);

// Steered binary tests around (x, y) rotated by `angle`.
Descriptor compute_descriptor(const Image& img, int x, int y, double angle,
                              const SamplingPattern& pattern = sampling_pattern());

FeatureSet extract(const Image& img, const ExtractParams& params = {});

}  // namespace herbar
