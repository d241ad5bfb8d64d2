#include "herbar/matcher.hpp"

#include "herbar/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace herbar {

namespace {

// Similarity transform moving the centroid to the origin with mean distance sqrt(2).
Mat3 normalizing_transform(std::span<const Vec2> pts) {
  Vec2 c = Vec2::Zero();
  for (const Vec2& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean = 0.0;
  for (const Vec2& p : pts) mean += (p - c).norm();
  mean /= static_cast<double>(pts.size());
  if (mean < 1e-12) throw Error(ErrorCode::DegenerateConfiguration, "all points coincide");
  const double s = std::sqrt(2.0) / mean;
  Mat3 t;
  t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return t;
}

bool has_collinear_triple(std::span<const Vec2> p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      for (std::size_t k = j + 1; k < p.size(); ++k) {
        const Vec2 a = p[j] - p[i];
        const Vec2 b = p[k] - p[i];
        const double denom = a.norm() * b.norm();
        if (denom < 1e-12) return true;
        if (std::abs(a.x() * b.y() - a.y() * b.x()) / denom < 1e-6) return true;
      }
    }
  }
  return false;
}

int count_inliers(const Homography& h, std::span<const Vec2> src, std::span<const Vec2> dst, double tol,
                  std::vector<bool>* mask) {
  int n = 0;
  if (mask) mask->assign(src.size(), false);
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (reprojection_error(h, src[i], dst[i]) <= tol) {
      ++n;
      if (mask) (*mask)[i] = true;
    }
  }
  return n;
}

std::uint64_t choose4(std::uint64_t n) {
  if (n < 4) return 0;
  return n * (n - 1) * (n - 2) * (n - 3) / 24;
}

}  // namespace

std::vector<Match> match_descriptors(const FeatureSet& query, const FeatureSet& target, const MatchParams& params) {
  std::vector<Match> out;
  if (query.empty() || target.empty()) return out;

  constexpr int kNone = -1;
  std::vector<Match> candidates;
  for (std::size_t q = 0; q < query.size(); ++q) {
    int d1 = std::numeric_limits<int>::max();
    int d2 = std::numeric_limits<int>::max();
    int best = kNone;
    for (std::size_t t = 0; t < target.size(); ++t) {
      const int d = hamming(query.descriptors[q], target.descriptors[t]);
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = static_cast<int>(t);
      } else if (d < d2) {
        d2 = d;
      }
    }
    if (d1 > params.max_dist) continue;
    if (d2 != std::numeric_limits<int>::max() && !(d1 < params.ratio * d2)) continue;
    candidates.push_back({static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(best), d1});
  }

  // One-to-one: candidates are in query order, so the first strict minimum per target wins.
  std::vector<int> owner(target.size(), kNone);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    int& o = owner[candidates[i].target_idx];
    if (o == kNone || candidates[i].distance < candidates[o].distance) o = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (owner[candidates[i].target_idx] == static_cast<int>(i)) out.push_back(candidates[i]);
  }
  return out;
}

Homography estimate_homography_dlt(std::span<const Vec2> src, std::span<const Vec2> dst) {
  if (src.size() != dst.size()) throw Error(ErrorCode::InvalidArgument, "correspondence lists differ in length");
  if (src.size() < 4) throw Error(ErrorCode::DegenerateConfiguration, "need at least 4 correspondences");
  if (src.size() == 4 && (has_collinear_triple(src) || has_collinear_triple(dst))) {
    throw Error(ErrorCode::DegenerateConfiguration, "three of four points are collinear");
  }
  const Mat3 ts = normalizing_transform(src);
  const Mat3 td = normalizing_transform(dst);

  // Accumulate the 9x9 normal matrix of the 2n x 9 system; its eigenvalues are
  // the squared singular values of A.
  using Mat9 = Eigen::Matrix<double, 9, 9>;
  using Vec9 = Eigen::Matrix<double, 9, 1>;
  Mat9 ata = Mat9::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 p = ts * Vec3(src[i].x(), src[i].y(), 1.0);
    const Vec3 q = td * Vec3(dst[i].x(), dst[i].y(), 1.0);
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    Vec9 r1;
    Vec9 r2;
    r1 << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    r2 << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    ata.selfadjointView<Eigen::Lower>().rankUpdate(r1);
    ata.selfadjointView<Eigen::Lower>().rankUpdate(r2);
  }
  Eigen::SelfAdjointEigenSolver<Mat9> eig(ata.selfadjointView<Eigen::Lower>());
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::DegenerateConfiguration, "eigen-decomposition failed");
  // Ascending eigenvalues: sv(0) is the smallest singular value.
  const Vec9 sv = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  if (sv(1) <= 1e-6 * sv(8) || sv(0) / sv(1) > 0.99) {
    throw Error(ErrorCode::DegenerateConfiguration, "correspondence system is rank deficient");
  }
  const Vec9 hv = eig.eigenvectors().col(0);
  Mat3 hn;
  hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
  return Homography::from(td.inverse() * hn * ts);
}

double reprojection_error(const Homography& h, const Vec2& src, const Vec2& dst) {
  const auto p = h.apply(src.x(), src.y());
  if (!p) return std::numeric_limits<double>::infinity();
  return (*p - dst).norm();
}

std::optional<RansacResult> ransac_homography(std::span<const Vec2> src, std::span<const Vec2> dst,
                                              const RansacParams& params) {
  if (src.size() != dst.size()) throw Error(ErrorCode::InvalidArgument, "correspondence lists differ in length");
  const std::size_t n = src.size();
  if (n < 4) return std::nullopt;

  int best_count = -1;
  Homography best_h;
  std::array<Vec2, 4> s{};
  std::array<Vec2, 4> d{};

  auto try_sample = [&](const std::array<std::size_t, 4>& idx) {
    for (int k = 0; k < 4; ++k) {
      s[k] = src[idx[k]];
      d[k] = dst[idx[k]];
    }
    Homography h;
    try {
      h = estimate_homography_dlt(s, d);
    } catch (const Error&) {
      return;
    }
    if (std::abs(h.det()) <= 1e-12) return;
    const int c = count_inliers(h, src, dst, params.inlier_px, nullptr);
    if (c > best_count) {
      best_count = c;
      best_h = h;
    }
  };

  const std::uint64_t total = choose4(n);
  if (params.iterations > 0 && total <= static_cast<std::uint64_t>(params.iterations)) {
    std::array<std::size_t, 4> idx{};
    for (idx[0] = 0; idx[0] < n; ++idx[0])
      for (idx[1] = idx[0] + 1; idx[1] < n; ++idx[1])
        for (idx[2] = idx[1] + 1; idx[2] < n; ++idx[2])
          for (idx[3] = idx[2] + 1; idx[3] < n; ++idx[3]) try_sample(idx);
  } else {
    XorShift64Star rng(params.seed);
    for (int it = 0; it < params.iterations; ++it) {
      std::array<std::size_t, 4> idx{};
      for (int k = 0; k < 4; ++k) {
        bool fresh = false;
        while (!fresh) {
          idx[k] = static_cast<std::size_t>(rng.below(n));
          fresh = std::find(idx.begin(), idx.begin() + k, idx[k]) == idx.begin() + k;
        }
      }
      try_sample(idx);
    }
  }
  if (best_count < 4) return std::nullopt;

  RansacResult result;
  result.inlier_count = count_inliers(best_h, src, dst, params.inlier_px, &result.inliers);
  std::vector<Vec2> in_src;
  std::vector<Vec2> in_dst;
  for (std::size_t i = 0; i < n; ++i) {
    if (result.inliers[i]) {
      in_src.push_back(src[i]);
      in_dst.push_back(dst[i]);
    }
  }
  result.homography = best_h;
  try {
    const Homography refit = estimate_homography_dlt(in_src, in_dst);
    if (std::abs(refit.det()) > 1e-12) result.homography = refit;
  } catch (const Error&) {
  }
  return result;
}

bool operator==(const Detection& a, const Detection& b) {
  return a.target_id == b.target_id && a.inliers == b.inliers && a.matched == b.matched &&
         a.confidence == b.confidence && a.homography.h == b.homography.h;
}

std::optional<Detection> verify_target(const FeatureSet& frame, const Target& target, const RecognizeParams& params,
                                       int min_matches) {
  const std::vector<Match> matches = match_descriptors(frame, target.features, params.match);
  if (matches.size() < 4 || static_cast<int>(matches.size()) < min_matches) return std::nullopt;
  std::vector<Vec2> src;
  std::vector<Vec2> dst;
  src.reserve(matches.size());
  dst.reserve(matches.size());
  for (const Match& m : matches) {
    const Keypoint& tk = target.features.keypoints[m.target_idx];
    const Keypoint& qk = frame.keypoints[m.query_idx];
    src.emplace_back(tk.x, tk.y);
    dst.emplace_back(qk.x, qk.y);
  }
  const auto fit = ransac_homography(src, dst, params.ransac);
  if (!fit || std::abs(fit->homography.det()) <= 1e-12) return std::nullopt;
  Detection det;
  det.target_id = target.id;
  det.homography = fit->homography;
  det.inliers = fit->inlier_count;
  det.matched = static_cast<int>(matches.size());
  det.confidence = static_cast<double>(det.inliers) / det.matched;
  return det;
}

std::optional<Detection> recognize(const FeatureSet& frame, const TargetDatabase& db, const RecognizeParams& params) {
  std::optional<Detection> best;
  if (frame.empty()) return best;
  for (const Target& target : db.targets()) {
    // inliers <= matched, so a target with too few matches can never pass.
    auto cand = verify_target(frame, target, params, params.min_inliers);
    if (!cand || cand->inliers < params.min_inliers || cand->confidence < params.min_confidence) continue;
    // Targets are visited in ascending id order, so strict > keeps the lower id on ties.
    if (!best || cand->inliers > best->inliers) best = std::move(cand);
  }
  return best;
}

}  // namespace herbar
