#include "herbar/bench.hpp"

#include "herbar/error.hpp"
#include "herbar/png_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace herbar {

namespace {

using nlohmann::json;

struct Verdict {
  std::optional<Detection> det;
  std::optional<std::uint32_t> id() const { return det ? std::optional(det->target_id) : std::nullopt; }
};

Verdict run_recognize(const Image& frame, const TargetDatabase& db, const BenchOptions& opt) {
  return {recognize(extract(frame, opt.extract), db, opt.recognize)};
}

void fill_outcome(BenchCase& c, const Verdict& v) {
  c.got_id = v.id();
  c.inliers = v.det ? v.det->inliers : 0;
  c.confidence = v.det ? v.det->confidence : 0.0;
  c.pass = c.got_id == c.expected_id;
}

std::string param_tag(const json& p) {
  if (p.is_null()) return "na";
  std::ostringstream ss;
  ss << p;
  std::string s = ss.str();
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

void dump(const BenchOptions& opt, const BenchCase& c, const std::string& suffix, const Image* gray,
          const ColorImage* color) {
  if (!opt.dump_dir) return;
  std::string file = std::to_string(c.target_id) + "_" + c.target_name + "_" + c.test + "_" + param_tag(c.parameter);
  if (!c.side.empty()) file += "_" + c.side;
  file += suffix + ".png";
  const auto path = *opt.dump_dir / file;
  if (gray) write_png(*gray, path);
  if (color) write_png(*color, path);
}

bool low_texture(const Target& t, const BenchOptions& opt) {
  return static_cast<int>(t.features.size()) < opt.min_keypoints;
}

std::vector<BenchCase> skeleton_cases(const Target& t, const std::optional<std::uint32_t>& distractor, bool weak) {
  std::vector<BenchCase> out;
  auto make = [&](std::string test, json param, std::string side = {}) {
    BenchCase c;
    c.test = std::move(test);
    c.target_id = t.id;
    c.target_name = t.name;
    c.parameter = std::move(param);
    c.side = std::move(side);
    c.expected_id = t.id;
    c.expected_failure = weak;
    return c;
  };
  for (double deg : kBenchRotations) out.push_back(make("rotation", deg));
  for (Side s : {Side::Left, Side::Right, Side::Top, Side::Bottom}) {
    BenchCase c = make("occlusion", kBenchOcclusion, to_string(s));
    if (weak) c.expected_id.reset();
    out.push_back(std::move(c));
  }
  if (distractor) out.push_back(make("interference", *distractor));
  out.push_back(make("color", nullptr));
  return out;
}

std::vector<BenchCase> bench_target(const TargetDatabase& db, const Target& t, const BenchOptions& opt,
                                    const std::map<std::uint32_t, ColorImage>& sources,
                                    const std::optional<std::uint32_t>& distractor) {
  const bool weak = low_texture(t, opt);
  std::vector<BenchCase> cases = skeleton_cases(t, distractor, weak);
  auto src_it = sources.find(t.id);
  if (src_it == sources.end()) {
    for (BenchCase& c : cases) c.skipped = true;
    return cases;
  }
  const ColorImage& color = src_it->second;
  const Image gray = to_grayscale(color);

  for (BenchCase& c : cases) {
    if (c.test == "rotation") {
      const Image frame = rotate_on_canvas(gray, c.parameter.get<double>());
      dump(opt, c, "", &frame, nullptr);
      fill_outcome(c, run_recognize(frame, db, opt));
    } else if (c.test == "occlusion") {
      Side side = Side::Left;
      for (Side s : {Side::Left, Side::Right, Side::Top, Side::Bottom})
        if (c.side == to_string(s)) side = s;
      const Image frame = occlude(gray, kBenchOcclusion, side);
      dump(opt, c, "", &frame, nullptr);
      fill_outcome(c, run_recognize(frame, db, opt));
    } else if (c.test == "interference") {
      const Image other = to_grayscale(sources.at(*distractor));
      const Image frame = interference_frame(gray, other);
      dump(opt, c, "", &frame, nullptr);
      fill_outcome(c, run_recognize(frame, db, opt));
    } else if (c.test == "color") {
      const ColorImage gray_copy = expand_to_rgba(gray);
      dump(opt, c, "_rgba", nullptr, &color);
      dump(opt, c, "_gray", nullptr, &gray_copy);
      const Verdict from_color = run_recognize(to_grayscale(color), db, opt);
      const Verdict from_gray = run_recognize(to_grayscale(gray_copy), db, opt);
      fill_outcome(c, from_color);
      c.gray_got_id = from_gray.id();
      c.verdicts_identical = from_color.det.has_value() == from_gray.det.has_value() &&
                             (!from_color.det || *from_color.det == *from_gray.det);
      c.pass = c.pass && c.verdicts_identical;
    }
  }
  return cases;
}

json opt_id(const std::optional<std::uint32_t>& id) { return id ? json(*id) : json(nullptr); }

}  // namespace

Image rotate_on_canvas(const Image& img, double degrees, std::uint8_t fill) {
  const Homography probe = Homography::rotation_about(degrees, 0, 0, 0, 0);
  const double c = std::abs(probe.h(0, 0));
  const double s = std::abs(probe.h(1, 0));
  const int w = img.width();
  const int h = img.height();
  const int out_w = static_cast<int>(std::ceil(w * c + h * s - 1e-9));
  const int out_h = static_cast<int>(std::ceil(w * s + h * c - 1e-9));
  const Homography rot =
      Homography::rotation_about(degrees, (w - 1) / 2.0, (h - 1) / 2.0, (out_w - 1) / 2.0, (out_h - 1) / 2.0);
  return warp_perspective(img, rot, out_w, out_h, fill);
}

Image interference_frame(const Image& target, const Image& distractor) {
  const int h = target.height();
  const int dw = std::max(1, static_cast<int>(std::lround(distractor.width() * static_cast<double>(h) / distractor.height())));
  const Image scaled = (dw == distractor.width() && h == distractor.height()) ? distractor : resize_area(distractor, dw, h);
  const int gutter = static_cast<int>(std::lround(kInterferenceGutter * target.width()));
  const int visible = static_cast<int>(std::lround(kInterferenceVisibleDistractor * dw));
  Image frame(target.width() + gutter + visible, h, 255);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < target.width(); ++x) frame.at(x, y) = target.at(x, y);
    for (int x = 0; x < visible; ++x) frame.at(target.width() + gutter + x, y) = scaled.at(x, y);
  }
  return frame;
}

bool BenchReport::all_passed() const {
  return std::all_of(cases.begin(), cases.end(),
                     [](const BenchCase& c) { return c.skipped || c.expected_failure || c.pass; });
}

json BenchReport::to_json() const {
  json arr = json::array();
  std::map<std::string, std::map<std::string, int>> summary;
  for (const char* family : {"rotation", "occlusion", "interference", "color"}) {
    summary[family] = {{"total", 0}, {"passed", 0}, {"failed", 0}, {"skipped", 0}, {"expected_failures", 0}};
  }
  for (const BenchCase& c : cases) {
    json j{{"test", c.test},
           {"target_id", c.target_id},
           {"target", c.target_name},
           {"parameter", c.parameter},
           {"expected_id", opt_id(c.expected_id)},
           {"got_id", opt_id(c.got_id)},
           {"inliers", c.inliers},
           {"confidence", c.confidence},
           {"pass", c.pass},
           {"skipped", c.skipped},
           {"expected_failure", c.expected_failure}};
    if (!c.side.empty()) j["side"] = c.side;
    if (c.test == "color") {
      j["gray_got_id"] = opt_id(c.gray_got_id);
      j["verdicts_identical"] = c.verdicts_identical;
    }
    arr.push_back(std::move(j));
    auto& s = summary[c.test];
    ++s["total"];
    if (c.skipped) ++s["skipped"];
    else if (c.expected_failure) ++s["expected_failures"];
    else if (c.pass) ++s["passed"];
    else ++s["failed"];
  }
  return json{{"cases", arr}, {"summary", summary}, {"all_passed", all_passed()}};
}

BenchReport run_bench(const TargetDatabase& db, const BenchOptions& options) {
  if (options.dump_dir) std::filesystem::create_directories(*options.dump_dir);

  std::map<std::uint32_t, ColorImage> sources;
  for (const Target& t : db.targets()) {
    const auto path = options.targets_dir / (t.name + ".png");
    if (std::filesystem::exists(path)) sources.emplace(t.id, read_png(path));
  }

  // Distractor: the next textured target (cyclic id order) with a source image.
  std::vector<const Target*> eligible;
  for (const Target& t : db.targets())
    if (!low_texture(t, options) && sources.count(t.id)) eligible.push_back(&t);
  auto distractor_for = [&](const Target& t) -> std::optional<std::uint32_t> {
    if (eligible.size() < 2 && !(eligible.size() == 1 && eligible[0]->id != t.id)) return std::nullopt;
    for (const Target* e : eligible)
      if (e->id > t.id) return e->id;
    for (const Target* e : eligible)
      if (e->id != t.id) return e->id;
    return std::nullopt;
  };

  const auto& targets = db.targets();
  std::vector<std::vector<BenchCase>> per_target(targets.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    try {
      for (std::size_t i = next++; i < targets.size(); i = next++) {
        per_target[i] = bench_target(db, targets[i], options, sources, distractor_for(targets[i]));
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next = targets.size();
    }
  };
  const int n_threads = std::clamp(options.threads, 1, 64);
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);

  BenchReport report;
  for (auto& cs : per_target)
    for (auto& c : cs) report.cases.push_back(std::move(c));
  return report;
}

}  // namespace herbar
