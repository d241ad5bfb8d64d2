#pragma once

#include "herbar/features.hpp"
#include "herbar/geometry.hpp"
#include "herbar/rng.hpp"
#include "herbar/targetdb.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace herbar {

struct Match {
  std::uint32_t query_idx = 0;
  std::uint32_t target_idx = 0;
  int distance = 0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct MatchParams {
  double ratio = 0.8;
  int max_dist = 64;
};

// Nearest-neighbour Hamming matching with ratio test and one-to-one
// enforcement. Nearest ties go to the lower target index; when two queries
// claim one target the smaller distance wins, then the lower query index.
// A target set with a single descriptor has no second neighbour, so only
// max_dist applies. Output is ordered by query index.
std::vector<Match> match_descriptors(const FeatureSet& query, const FeatureSet& target,
                                     const MatchParams& params = {});

// Normalized DLT. Needs >= 4 pairs; throws DegenerateConfiguration on
// collinear minimal samples or a rank-deficient system.
Homography estimate_homography_dlt(std::span<const Vec2> src, std::span<const Vec2> dst);

// Euclidean distance between h(src) and dst; infinity when src maps to infinity.
double reprojection_error(const Homography& h, const Vec2& src, const Vec2& dst);

struct RansacParams {
  int iterations = 500;
  double inlier_px = 3.0;
  std::uint64_t seed = XorShift64Star::kDefaultSeed;
};

struct RansacResult {
  Homography homography;     // refit on all inliers of the best hypothesis
  std::vector<bool> inliers;  // mask of the best hypothesis
  int inlier_count = 0;
};

// When C(n,4) <= iterations every minimal sample is visited in lexicographic
// order; otherwise samples are drawn from the seeded generator. Returns
// nullopt when fewer than 4 inliers are found.
std::optional<RansacResult> ransac_homography(std::span<const Vec2> src, std::span<const Vec2> dst,
                                              const RansacParams& params = {});

struct RecognizeParams {
  MatchParams match;
  RansacParams ransac;
  int min_inliers = 12;
  double min_confidence = 0.25;
};

struct Detection {
  std::uint32_t target_id = 0;
  Homography homography;  // target image -> frame
  int inliers = 0;
  int matched = 0;
  double confidence = 0.0;
};

bool operator==(const Detection& a, const Detection& b);

// Best-verified target for a frame: most inliers, ties to the lower id.
std::optional<Detection> recognize(const FeatureSet& frame, const TargetDatabase& db,
                                   const RecognizeParams& params = {});

// Candidate detection for a single target, before the acceptance thresholds.
std::optional<Detection> verify_target(const FeatureSet& frame, const Target& target, const RecognizeParams& params,
                                       int min_matches = 4);

}  // namespace herbar
