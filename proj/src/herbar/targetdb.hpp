#pragma once

#include "herbar/error.hpp"
#include "herbar/features.hpp"
#include "herbar/imaging.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace herbar {

constexpr std::uint32_t kDbFormatVersion = 1;
constexpr int kDefaultMinKeypoints = 50;

struct Target {
  std::uint32_t id = 0;
  std::string name;
  int image_width = 0;
  int image_height = 0;
  FeatureSet features;
  std::string content_id;

  friend bool operator==(const Target&, const Target&) = default;
};

struct QualityRating {
  int stars = 0;
  int keypoint_count = 0;
  double spread = 0.0;  // fraction of the 8x8 grid cells holding a keypoint
};

class TooFewFeatures : public Error {
 public:
  TooFewFeatures(const std::string& what, QualityRating rating)
      : Error(ErrorCode::TooFewFeatures, what), rating_(rating) {}
  const QualityRating& rating() const noexcept { return rating_; }

 private:
  QualityRating rating_;
};

class TargetDatabase {
 public:
  std::uint32_t format_version() const noexcept { return kDbFormatVersion; }
  const std::vector<Target>& targets() const noexcept { return targets_; }
  std::size_t size() const noexcept { return targets_.size(); }
  bool empty() const noexcept { return targets_.empty(); }

  const Target* find(std::uint32_t id) const noexcept;
  const Target* find_by_name(std::string_view name) const noexcept;
  std::uint32_t next_id() const noexcept { return targets_.empty() ? 1 : targets_.back().id + 1; }

  // Appends a target; ids must be strictly increasing and names unique and non-empty.
  void add(Target target);

  friend bool operator==(const TargetDatabase&, const TargetDatabase&) = default;

 private:
  std::vector<Target> targets_;
};

struct RegisterParams {
  ExtractParams extract;
  int min_keypoints = kDefaultMinKeypoints;
};

QualityRating rate_features(const FeatureSet& features, int image_width, int image_height);
inline QualityRating rate_target(const Target& t) { return rate_features(t.features, t.image_width, t.image_height); }

// Builds a target with the database's next free id. Does not modify `db`.
// Throws DuplicateName or TooFewFeatures.
Target register_target(const TargetDatabase& db, const std::string& name, const std::string& content_id,
                       const ColorImage& img, const RegisterParams& params = {});

std::vector<std::uint8_t> serialize_db(const TargetDatabase& db);
TargetDatabase deserialize_db(std::span<const std::uint8_t> bytes);

// Writes through a sibling temp file and renames, so a failed save leaves no partial file.
void save_db(const TargetDatabase& db, const std::filesystem::path& path);
TargetDatabase load_db(const std::filesystem::path& path);

}  // namespace herbar
