#pragma once

#include "herbar/features.hpp"
#include "herbar/matcher.hpp"
#include "herbar/targetdb.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace herbar {

// Synthetic reproductions of the four confusion tests: in-plane rotation,
// half-page occlusion, a neighbouring distractor picture, and colour removal.
struct BenchOptions {
  std::filesystem::path targets_dir;             // holds <target name>.png
  std::optional<std::filesystem::path> dump_dir;  // every synthesized frame is written here
  int threads = 1;
  ExtractParams extract;
  RecognizeParams recognize;
  // Targets below this keypoint count are treated as low-texture: their
  // occlusion cases expect no detection and all their cases are expected failures.
  int min_keypoints = kDefaultMinKeypoints;
};

inline constexpr double kBenchRotations[] = {45.0, 90.0, 180.0};
inline constexpr double kBenchOcclusion = 0.5;
inline constexpr double kInterferenceGutter = 0.10;
inline constexpr double kInterferenceVisibleDistractor = 0.5;

struct BenchCase {
  std::string test;  // rotation | occlusion | interference | color
  std::uint32_t target_id = 0;
  std::string target_name;
  nlohmann::json parameter;  // degrees | fraction | distractor id | null
  std::string side;          // occlusion only
  std::optional<std::uint32_t> expected_id;
  std::optional<std::uint32_t> got_id;
  std::optional<std::uint32_t> gray_got_id;  // color only
  bool verdicts_identical = true;            // color only
  int inliers = 0;
  double confidence = 0.0;
  bool pass = false;
  bool skipped = false;
  bool expected_failure = false;
};

struct BenchReport {
  std::vector<BenchCase> cases;

  // Every case that is neither skipped nor an expected failure passed.
  bool all_passed() const;
  nlohmann::json to_json() const;
};

// Rotation about the image center onto a canvas sized to the rotated bounds.
Image rotate_on_canvas(const Image& img, double degrees, std::uint8_t fill = 255);

// Target at full size, a white gutter of 10% of its width, then the distractor
// scaled to equal height; the frame keeps the first half of the distractor.
Image interference_frame(const Image& target, const Image& distractor);

BenchReport run_bench(const TargetDatabase& db, const BenchOptions& options);

}  // namespace herbar
