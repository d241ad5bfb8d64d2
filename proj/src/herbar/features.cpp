#include "herbar/features.hpp"

#include "herbar/error.hpp"
#include "herbar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace herbar {

namespace {

constexpr int kCircle[16][2] = {{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
                                {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};

// Longest circular run of `flags`; returns {start, length}.
std::pair<int, int> longest_run(const bool (&flags)[16]) {
  int best_len = 0;
  int best_start = 0;
  int anchor = -1;
  for (int i = 0; i < 16; ++i) {
    if (!flags[i]) {
      anchor = i;
      break;
    }
  }
  if (anchor < 0) return {0, 16};
  int len = 0;
  int start = 0;
  for (int step = 1; step <= 16; ++step) {
    const int i = (anchor + step) % 16;
    if (flags[i]) {
      if (len == 0) start = i;
      ++len;
      if (len > best_len) {
        best_len = len;
        best_start = start;
      }
    } else {
      len = 0;
    }
  }
  return {best_start, best_len};
}

// Segment-test score of pixel (x, y), 0 if it is not a corner.
int fast_score(const Image& img, int x, int y, int t) {
  const int center = img.at(x, y);
  int values[16];
  bool brighter[16];
  bool darker[16];
  int n_bright = 0;
  int n_dark = 0;
  for (int i = 0; i < 16; ++i) {
    values[i] = img.at(x + kCircle[i][0], y + kCircle[i][1]);
    brighter[i] = values[i] > center + t;
    darker[i] = values[i] < center - t;
    n_bright += brighter[i];
    n_dark += darker[i];
  }
  const bool(*flags)[16] = nullptr;
  if (n_bright >= 9) {
    flags = &brighter;
  } else if (n_dark >= 9) {
    flags = &darker;
  } else {
    return 0;
  }
  const auto [start, len] = longest_run(*flags);
  if (len < 9) return 0;
  int score = 0;
  for (int k = 0; k < len; ++k) score += std::abs(values[(start + k) % 16] - center);
  return score;
}

struct Candidate {
  Keypoint kp;
  Descriptor desc;
  int lx, ly;
};

bool stronger(const Candidate& a, const Candidate& b) {
  if (a.kp.score != b.kp.score) return a.kp.score > b.kp.score;
  if (a.kp.level != b.kp.level) return a.kp.level < b.kp.level;
  if (a.ly != b.ly) return a.ly < b.ly;
  return a.lx < b.lx;
}

}  // namespace

int hamming(const Descriptor& a, const Descriptor& b) noexcept {
  int d = 0;
  for (int w = 0; w < 4; ++w) {
    std::uint64_t x;
    std::uint64_t y;
    std::memcpy(&x, a.bytes.data() + 8 * w, 8);
    std::memcpy(&y, b.bytes.data() + 8 * w, 8);
    d += std::popcount(x ^ y);
  }
  return d;
}

SamplingPattern generate_sampling_pattern(std::uint64_t seed) {
  XorShift64Star rng(seed);
  constexpr std::uint64_t span = 2 * kPatternRadius + 1;
  auto draw = [&] { return static_cast<std::int8_t>(static_cast<int>(rng.next() % span) - kPatternRadius); };
  SamplingPattern pattern{};
  for (auto& pair : pattern) {
    do {
      pair.ax = draw();
      pair.ay = draw();
      pair.bx = draw();
      pair.by = draw();
    } while (pair.ax == pair.bx && pair.ay == pair.by);
  }
  return pattern;
}

const SamplingPattern& sampling_pattern() {
  static const SamplingPattern pattern = generate_sampling_pattern(XorShift64Star::kDefaultSeed);
  return pattern;
}

std::vector<Keypoint> detect_corners(const Image& img, int threshold, int nms_radius, int border) {
  if (threshold < 1) throw Error(ErrorCode::InvalidArgument, "corner threshold must be >= 1");
  if (img.width() < 7 || img.height() < 7) throw Error(ErrorCode::ImageTooSmall, "corner detection needs >= 7x7");
  border = std::max(border, 3);
  const int w = img.width();
  const int h = img.height();
  std::vector<int> score(static_cast<std::size_t>(w) * h, 0);
  for (int y = border; y < h - border; ++y) {
    for (int x = border; x < w - border; ++x) score[static_cast<std::size_t>(y) * w + x] = fast_score(img, x, y, threshold);
  }

  std::vector<Keypoint> out;
  for (int y = border; y < h - border; ++y) {
    for (int x = border; x < w - border; ++x) {
      const int s = score[static_cast<std::size_t>(y) * w + x];
      if (s == 0) continue;
      bool is_max = true;
      for (int dy = -nms_radius; dy <= nms_radius && is_max; ++dy) {
        const int qy = y + dy;
        if (qy < 0 || qy >= h) continue;
        for (int dx = -nms_radius; dx <= nms_radius; ++dx) {
          const int qx = x + dx;
          if (qx < 0 || qx >= w || (dx == 0 && dy == 0)) continue;
          const int q = score[static_cast<std::size_t>(qy) * w + qx];
          // Equal scores: the earlier pixel in raster order wins.
          if (q > s || (q == s && (dy < 0 || (dy == 0 && dx < 0)))) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) out.push_back({static_cast<float>(x), static_cast<float>(y), 0, 0.0f, static_cast<float>(s)});
    }
  }
  return out;
}

double compute_orientation(const Image& img, int x, int y, int radius) {
  if (x - radius < 0 || y - radius < 0 || x + radius >= img.width() || y + radius >= img.height()) {
    throw Error(ErrorCode::InvalidArgument, "orientation patch out of bounds");
  }
  std::int64_t m10 = 0;
  std::int64_t m01 = 0;
  const int r2 = radius * radius;
  for (int dy = -radius; dy <= radius; ++dy) {
    const std::uint8_t* row = img.row(y + dy);
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy > r2) continue;
      const int v = row[x + dx];
      m10 += static_cast<std::int64_t>(dx) * v;
      m01 += static_cast<std::int64_t>(dy) * v;
    }
  }
  if (m10 == 0 && m01 == 0) return 0.0;
  return std::atan2(static_cast<double>(m01), static_cast<double>(m10));
}

Descriptor compute_descriptor(const Image& img, int x, int y, double angle, const SamplingPattern& pattern) {
  if (x < kDescriptorMargin || y < kDescriptorMargin || x >= img.width() - kDescriptorMargin ||
      y >= img.height() - kDescriptorMargin) {
    throw Error(ErrorCode::InvalidArgument, "descriptor patch out of bounds");
  }
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  auto sample = [&](int ox, int oy) {
    const int rx = static_cast<int>(std::round(ox * c - oy * s));
    const int ry = static_cast<int>(std::round(ox * s + oy * c));
    return img.at(x + rx, y + ry);
  };
  Descriptor d;
  for (int k = 0; k < kDescriptorBits; ++k) {
    const auto& p = pattern[k];
    if (sample(p.ax, p.ay) < sample(p.bx, p.by)) d.set_bit(k);
  }
  return d;
}

FeatureSet extract(const Image& img, const ExtractParams& params) {
  if (img.width() < 64 || img.height() < 64) throw Error(ErrorCode::ImageTooSmall, "feature extraction needs >= 64x64");
  if (params.max_features < 1) throw Error(ErrorCode::InvalidArgument, "max_features must be positive");
  const Pyramid pyramid = build_pyramid(img, params.n_levels, params.scale_factor);
  const auto& pattern = sampling_pattern();

  std::vector<Candidate> candidates;
  for (std::size_t level = 0; level < pyramid.levels.size(); ++level) {
    const Image& li = pyramid.levels[level];
    const double scale = std::pow(params.scale_factor, static_cast<double>(level));
    for (const Keypoint& c : detect_corners(li, params.threshold, params.nms_radius)) {
      const int lx = static_cast<int>(c.x);
      const int ly = static_cast<int>(c.y);
      if (lx < kDescriptorMargin || ly < kDescriptorMargin || lx >= li.width() - kDescriptorMargin ||
          ly >= li.height() - kDescriptorMargin) {
        continue;
      }
      const double angle = compute_orientation(li, lx, ly);
      Candidate cand;
      cand.kp = {static_cast<float>(lx * scale), static_cast<float>(ly * scale), static_cast<std::uint8_t>(level),
                 static_cast<float>(angle), c.score};
      cand.desc = compute_descriptor(li, lx, ly, angle, pattern);
      cand.lx = lx;
      cand.ly = ly;
      candidates.push_back(cand);
    }
  }
  std::sort(candidates.begin(), candidates.end(), stronger);

  // 8x8 bucketing with a per-cell cap, then global top-N in score order.
  constexpr int kGrid = 8;
  const int cap = ((params.max_features + kGrid * kGrid - 1) / (kGrid * kGrid)) * 2;
  std::array<int, kGrid * kGrid> used{};
  FeatureSet fs;
  fs.width = img.width();
  fs.height = img.height();
  for (const Candidate& c : candidates) {
    if (static_cast<int>(fs.size()) >= params.max_features) break;
    const int cx = std::clamp(static_cast<int>(c.kp.x * kGrid / img.width()), 0, kGrid - 1);
    const int cy = std::clamp(static_cast<int>(c.kp.y * kGrid / img.height()), 0, kGrid - 1);
    if (used[cy * kGrid + cx] >= cap) continue;
    ++used[cy * kGrid + cx];
    fs.keypoints.push_back(c.kp);
    fs.descriptors.push_back(c.desc);
  }
  return fs;
}

}  // namespace herbar
