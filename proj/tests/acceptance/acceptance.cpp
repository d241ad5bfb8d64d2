// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "herbar/bench.hpp"
#include "herbar/content.hpp"
#include "herbar/error.hpp"
#include "herbar/matcher.hpp"
#include "herbar/png_io.hpp"
#include "herbar/pose.hpp"
#include "herbar/targetdb.hpp"

#include "test_support.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

using namespace herbar;
namespace fs = std::filesystem;

namespace {

constexpr int kTextured = 12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Fixture {
  herbar::testing::TempDir dir{"acceptance"};
  TargetDatabase db;
  std::vector<Image> gray;  // by target id - 1
  std::uint32_t low_texture_id = 0;
  BenchReport report;
  std::string report_text;
};

Fixture& fixture() {
  static const auto f = [] {
    auto holder = std::make_unique<Fixture>();
    Fixture& out = *holder;
    const auto& names = fixtures::herb_names();
    for (int i = 0; i < kTextured; ++i) {
      const auto seed = static_cast<std::uint64_t>(i + 1);
      const auto [w, h] = fixtures::picture_size(seed);
      const ColorImage img = fixtures::herb_picture(seed, w, h);
      write_png(img, out.dir / (std::string(names[i].id) + ".png"));
      out.db.add(register_target(out.db, names[i].id, names[i].id, img));
      out.gray.push_back(to_grayscale(img));
    }
    // The low-texture card only enters the database with a lowered keypoint floor.
    const ColorImage low = fixtures::low_texture_picture(320, 320);
    write_png(low, out.dir / (std::string(names[kTextured].id) + ".png"));
    RegisterParams lenient;
    lenient.min_keypoints = 1;
    const Target t = register_target(out.db, names[kTextured].id, names[kTextured].id, low, lenient);
    out.low_texture_id = t.id;
    out.db.add(t);
    out.gray.push_back(to_grayscale(low));

    BenchOptions o;
    o.targets_dir = out.dir.path();
    o.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    out.report = run_bench(out.db, o);
    out.report_text = out.report.to_json().dump();
    return holder;
  }();
  return *f;
}

std::string case_label(const BenchCase& c) {
  std::string s = c.test + " " + c.target_name + " " + c.parameter.dump();
  if (!c.side.empty()) s += " " + c.side;
  return s;
}

// Tallies one bench family; `want` decides each case.
Outcome family(const std::string& test, const std::function<bool(const BenchCase&)>& want) {
  int total = 0, ok = 0;
  std::string first_bad;
  for (const BenchCase& c : fixture().report.cases) {
    if (c.test != test) continue;
    ++total;
    if (c.skipped) {
      if (first_bad.empty()) first_bad = "skipped " + case_label(c);
      continue;
    }
    if (want(c)) ++ok;
    else if (first_bad.empty()) first_bad = case_label(c);
  }
  Outcome o{total > 0 && ok == total, std::to_string(ok) + "/" + std::to_string(total) + " cases"};
  if (!first_bad.empty()) o.detail += ", first failure: " + first_bad;
  return o;
}

Outcome self_recognition() {
  const Fixture& f = fixture();
  int ok = 0;
  double worst_conf = 1.0, worst_err = 0.0;
  for (int i = 0; i < kTextured; ++i) {
    const Target& t = f.db.targets()[i];
    const auto det = recognize(extract(f.gray[i]), f.db);
    if (!det || det->target_id != t.id) continue;
    double err = 0.0;
    for (const auto& kp : t.features.keypoints) err += reprojection_error(det->homography, {kp.x, kp.y}, {kp.x, kp.y});
    err /= static_cast<double>(t.features.size());
    worst_conf = std::min(worst_conf, det->confidence);
    worst_err = std::max(worst_err, err);
    if (det->confidence >= 0.9 && err <= 1.0) ++ok;
  }
  std::ostringstream s;
  s << ok << "/" << kTextured << " targets, min confidence " << worst_conf << ", max mean reprojection " << worst_err
    << " px";
  return {ok == kTextured, s.str()};
}

Outcome rotation() {
  return family("rotation", [](const BenchCase& c) {
    if (c.target_id == fixture().low_texture_id) return c.expected_failure;
    return c.pass && c.got_id == c.target_id;
  });
}

Outcome occlusion() {
  const std::uint32_t low = fixture().low_texture_id;
  return family("occlusion", [low](const BenchCase& c) {
    if (c.target_id == low) return c.expected_failure && !c.got_id.has_value();
    return c.pass && c.got_id == c.target_id;
  });
}

Outcome interference() {
  const std::uint32_t low = fixture().low_texture_id;
  return family("interference", [low](const BenchCase& c) {
    if (c.target_id == low) return c.expected_failure;
    return c.pass && c.got_id == c.target_id;
  });
}

Outcome color() {
  return family("color", [](const BenchCase& c) { return c.verdicts_identical && c.got_id == c.gray_got_id; });
}

// ---- oracle equivalences ----------------------------------------------------

std::vector<Match> match_oracle(const FeatureSet& q, const FeatureSet& t, double ratio, int max_dist) {
  std::vector<Match> cand;
  if (q.empty() || t.empty()) return {};
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < t.size(); ++j)
      if (hamming(q.descriptors[i], t.descriptors[j]) < hamming(q.descriptors[i], t.descriptors[best])) best = j;
    const int d1 = hamming(q.descriptors[i], t.descriptors[best]);
    int d2 = -1;
    for (std::size_t j = 0; j < t.size(); ++j)
      if (j != best && (d2 < 0 || hamming(q.descriptors[i], t.descriptors[j]) < d2))
        d2 = hamming(q.descriptors[i], t.descriptors[j]);
    if (d1 > max_dist || (d2 >= 0 && !(d1 < ratio * d2))) continue;
    cand.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(best), d1});
  }
  std::vector<Match> out;
  for (const Match& m : cand) {
    const bool beaten = std::any_of(cand.begin(), cand.end(), [&](const Match& o) {
      return o.target_idx == m.target_idx && o.query_idx != m.query_idx &&
             (o.distance < m.distance || (o.distance == m.distance && o.query_idx < m.query_idx));
    });
    if (!beaten) out.push_back(m);
  }
  return out;
}

FeatureSet descriptor_set(std::vector<Descriptor> ds) {
  FeatureSet fs;
  fs.width = 640;
  fs.height = 480;
  for (std::size_t i = 0; i < ds.size(); ++i) fs.keypoints.push_back({static_cast<float>(i), 0.0f, 0, 0.0f, 0.0f});
  fs.descriptors = std::move(ds);
  return fs;
}

Vec2 apply(const Mat3& h, const Vec2& p) {
  const Vec3 q = h * Vec3(p.x(), p.y(), 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

int best_subset_count(const std::vector<Vec2>& src, const std::vector<Vec2>& dst, double tol) {
  const std::size_t n = src.size();
  int best = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c)
        for (std::size_t d = c + 1; d < n; ++d) {
          Eigen::Matrix<double, 8, 8> m;
          Eigen::Matrix<double, 8, 1> rhs;
          const std::size_t idx[4] = {a, b, c, d};
          for (int k = 0; k < 4; ++k) {
            const double x = src[idx[k]].x(), y = src[idx[k]].y();
            const double u = dst[idx[k]].x(), v = dst[idx[k]].y();
            m.row(2 * k) << x, y, 1, 0, 0, 0, -u * x, -u * y;
            m.row(2 * k + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
            rhs(2 * k) = u;
            rhs(2 * k + 1) = v;
          }
          Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(m);
          if (lu.rank() < 8) continue;
          const auto hv = lu.solve(rhs);
          Mat3 h;
          h << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), 1.0;
          int count = 0;
          for (std::size_t i = 0; i < n; ++i) {
            const Vec3 q = h * Vec3(src[i].x(), src[i].y(), 1.0);
            if (std::abs(q.z()) > 1e-12 && (Vec2(q.x() / q.z(), q.y() / q.z()) - dst[i]).norm() <= tol) ++count;
          }
          best = std::max(best, count);
        }
  return best;
}

Mat3 random_homography(XorShift64Star& rng) {
  Mat3 h;
  h << 0.7 + 0.6 * rng.uniform(), 0.3 * (rng.uniform() - 0.5), 50 * (rng.uniform() - 0.5),
      0.3 * (rng.uniform() - 0.5), 0.7 + 0.6 * rng.uniform(), 50 * (rng.uniform() - 0.5), 4e-4 * (rng.uniform() - 0.5),
      4e-4 * (rng.uniform() - 0.5), 1.0;
  return h;
}

std::vector<Vec2> random_points(XorShift64Star& rng, int n) {
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(rng.uniform() * 600.0, rng.uniform() * 400.0);
  return pts;
}

Outcome oracles() {
  std::ostringstream s;
  bool ok = true;

  XorShift64Star rng(20240501);
  int match_trials = 0, match_equal = 0;
  for (; match_trials < 200; ++match_trials) {
    const int nt = 1 + static_cast<int>(rng.below(96));
    const int nq = 1 + static_cast<int>(rng.below(96));
    std::vector<Descriptor> t, q;
    for (int j = 0; j < nt; ++j)
      t.push_back(j > 0 && rng.below(8) == 0 ? t[rng.below(t.size())] : herbar::testing::random_descriptor(rng));
    for (int i = 0; i < nq; ++i)
      q.push_back(rng.below(5) == 0 ? herbar::testing::random_descriptor(rng)
                                    : herbar::testing::perturb(t[rng.below(t.size())],
                                                               static_cast<int>(rng.below(70)), rng));
    const FeatureSet qs = descriptor_set(std::move(q)), ts = descriptor_set(std::move(t));
    if (match_descriptors(qs, ts) == match_oracle(qs, ts, 0.8, 64)) ++match_equal;
  }
  ok &= match_equal == match_trials;
  s << "match " << match_equal << "/" << match_trials;

  int ransac_trials = 0, ransac_equal = 0;
  for (; ransac_trials < 80; ++ransac_trials) {
    const int n = 6 + static_cast<int>(rng.below(7));
    const int outliers = static_cast<int>(rng.below(static_cast<std::uint64_t>(n / 3 + 1)));
    const Mat3 h = random_homography(rng);
    const auto src = random_points(rng, n);
    std::vector<Vec2> dst;
    for (const auto& p : src) dst.push_back(apply(h, p));
    for (int k = 0; k < outliers; ++k) {
      const std::size_t i = rng.below(static_cast<std::uint64_t>(n));
      dst[i] += Vec2(30 + 200 * rng.uniform(), -30 - 200 * rng.uniform());
    }
    RansacParams p;
    p.seed = rng.next();
    const auto r = ransac_homography(src, dst, p);
    if (r && r->inlier_count == best_subset_count(src, dst, p.inlier_px)) ++ransac_equal;
  }
  ok &= ransac_equal == ransac_trials;
  s << ", ransac " << ransac_equal << "/" << ransac_trials;

  int dlt_trials = 0, dlt_ok = 0;
  double dlt_worst = 0.0;
  for (; dlt_trials < 100; ++dlt_trials) {
    const Mat3 h = random_homography(rng);
    const auto src = random_points(rng, 6 + static_cast<int>(rng.below(30)));
    std::vector<Vec2> dst;
    for (const auto& p : src) dst.push_back(apply(h, p));
    try {
      const double err = (estimate_homography_dlt(src, dst).h - h).cwiseAbs().maxCoeff();
      dlt_worst = std::max(dlt_worst, err);
      if (err <= 1e-6) ++dlt_ok;
    } catch (const Error&) {
    }
  }
  ok &= dlt_ok == dlt_trials;
  s << ", dlt " << dlt_ok << "/" << dlt_trials << " (max " << dlt_worst << ")";

  const CameraIntrinsics k{576.0, 576.0, 320.0, 180.0};
  int pose_trials = 0, pose_ok = 0;
  double pose_worst = 0.0;
  for (; pose_trials < 100; ++pose_trials) {
    Vec3 axis(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5);
    if (axis.norm() < 1e-3) axis = Vec3::UnitX();
    const Mat3 r = Eigen::AngleAxisd(rng.uniform() * 60.0 * 3.14159265358979 / 180.0, axis.normalized())
                       .toRotationMatrix();
    const Vec3 t(rng.uniform() - 0.5, rng.uniform() - 0.5, 0.5 + 4.5 * rng.uniform());
    Mat3 m;
    m << r.col(0), r.col(1), t;
    try {
      const Pose p = decompose_homography(Homography::from(k.matrix() * m), k);
      const double err = std::max((p.r - r).cwiseAbs().maxCoeff(), (p.t - t).cwiseAbs().maxCoeff());
      pose_worst = std::max(pose_worst, err);
      if (err <= 1e-6) ++pose_ok;
    } catch (const Error&) {
    }
  }
  ok &= pose_ok == pose_trials;
  s << ", pose " << pose_ok << "/" << pose_trials << " (max " << pose_worst << ")";
  return {ok, s.str()};
}

// ---- formats ----------------------------------------------------------------

Outcome formats() {
  const Fixture& f = fixture();
  std::ostringstream s;
  bool ok = true;

  const fs::path path = f.dir / "acceptance.hdb";
  save_db(f.db, path);
  std::ifstream in(path, std::ios::binary);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const TargetDatabase back = load_db(path);
  const bool round_trip = serialize_db(back) == bytes && bytes == serialize_db(f.db);
  ok &= round_trip;
  s << "round trip " << (round_trip ? "byte-exact" : "differs") << " (" << bytes.size() << " bytes)";

  XorShift64Star rng(77);
  int flips = 0, caught = 0;
  for (; flips < 200; ++flips) {
    std::vector<std::uint8_t> bad = bytes;
    const std::size_t at = 8 + rng.below(bad.size() - 8);
    bad[at] ^= static_cast<std::uint8_t>(1 + rng.below(255));
    try {
      deserialize_db(bad);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ChecksumMismatch) ++caught;
    }
  }
  ok &= caught == flips;
  s << ", corrupt byte -> checksum mismatch " << caught << "/" << flips;

  // Every herb of the shipped catalog registered from its fixture picture.
  TargetDatabase all;
  const auto& names = fixtures::herb_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto seed = static_cast<std::uint64_t>(i + 1);
    const auto [w, h] = fixtures::picture_size(seed);
    all.add(register_target(all, names[i].id, names[i].id, fixtures::herb_picture(seed, w, h)));
  }
  const Catalog catalog = load_catalog_file(fs::path(HERBAR_DATA_DIR) / "catalog.json");
  const ConsistencyReport r = validate_against_db(catalog, all);
  ok &= r.consistent() && catalog.size() == 88 && all.size() == 88;
  s << ", integrity " << all.size() << " targets vs " << catalog.size() << " entries: " << r.missing_entries.size()
    << " missing, " << r.orphan_entries.size() << " orphan";
  return {ok, s.str()};
}

Outcome determinism() {
  Fixture& f = fixture();
  BenchOptions o;
  o.targets_dir = f.dir.path();
  o.threads = 1;
  const std::string again = run_bench(f.db, o).to_json().dump();
  bool ok = again == f.report_text;
  int same = 0;
  for (const Image& g : f.gray) {
    const FeatureSet a = extract(g), b = extract(g);
    const auto da = recognize(a, f.db), db = recognize(b, f.db);
    if (a == b && da == db) ++same;
  }
  ok &= same == static_cast<int>(f.gray.size());
  std::ostringstream s;
  s << "bench report " << (again == f.report_text ? "identical" : "differs") << " (" << f.report_text.size()
    << " bytes), recognize identical " << same << "/" << f.gray.size();
  return {ok, s.str()};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"self-recognition", self_recognition},
      {"rotation family", rotation},
      {"occlusion family", occlusion},
      {"interference family", interference},
      {"color family", color},
      {"oracle equivalences", oracles},
      {"formats", formats},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%s  %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
