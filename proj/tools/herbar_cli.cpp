#include <herbar/herbar.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool verbose = false;
};

GlobalOptions g_opts;

class Failure : public std::runtime_error {
 public:
  Failure(herbar_status status, const std::string& what) : std::runtime_error(what), status_(status) {}
  herbar_status status() const { return status_; }

 private:
  herbar_status status_;
};

void check(herbar_status status, const std::string& context) {
  if (status == HERBAR_OK) return;
  std::string msg = context + ": " + herbar_status_name(status);
  const std::string detail = herbar_last_error();
  if (!detail.empty()) msg += " (" + detail + ")";
  throw Failure(status, msg);
}

void log(const std::string& msg) {
  if (g_opts.verbose) std::cerr << "[herbar] " << msg << "\n";
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using ImagePtr = std::unique_ptr<herbar_image, Deleter<herbar_image, herbar_image_free>>;
using DbPtr = std::unique_ptr<herbar_db, Deleter<herbar_db, herbar_db_free>>;
using CatalogPtr = std::unique_ptr<herbar_catalog, Deleter<herbar_catalog, herbar_catalog_free>>;
using ModelPtr = std::unique_ptr<herbar_model, Deleter<herbar_model, herbar_model_free>>;
using ServerPtr = std::unique_ptr<herbar_server, Deleter<herbar_server, herbar_server_free>>;

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { herbar_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

ImagePtr load_image(const std::string& path) {
  herbar_image* img = nullptr;
  check(herbar_image_load_png(path.c_str(), &img), "cannot read " + path);
  return ImagePtr(img);
}

DbPtr load_db(const std::string& path) {
  herbar_db* db = nullptr;
  check(herbar_db_load(path.c_str(), &db), "cannot load database " + path);
  return DbPtr(db);
}

CatalogPtr load_catalog(const std::string& path) {
  herbar_catalog* c = nullptr;
  check(herbar_catalog_load(path.c_str(), &c), "cannot load catalog " + path);
  return CatalogPtr(c);
}

herbar_recognize_params recognize_params(int min_inliers) {
  herbar_recognize_params p;
  herbar_recognize_params_default(&p);
  if (g_opts.seed) p.seed = *g_opts.seed;
  if (min_inliers > 0) p.min_inliers = min_inliers;
  return p;
}

herbar_extract_params extract_params() {
  herbar_extract_params p;
  herbar_extract_params_default(&p);
  return p;
}

int thread_count() {
  if (g_opts.threads > 0) return g_opts.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::optional<herbar_target_info> target_by_id(const herbar_db* db, std::uint32_t id) {
  const std::size_t n = herbar_db_target_count(db);
  for (std::size_t i = 0; i < n; ++i) {
    herbar_target_info info;
    if (herbar_db_target_at(db, i, &info) == HERBAR_OK && info.id == id) return info;
  }
  return std::nullopt;
}

std::string stars(int n) { return std::string(n, '*') + std::string(5 - n, '.'); }

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

void print_rating_row(std::ostream& os, const std::string& id, const std::string& name, const herbar_rating& r,
                      const std::string& status) {
  os << std::left;
  os.width(5);
  os << id;
  os.width(22);
  os << name;
  os << stars(r.stars) << "  ";
  os.width(7);
  os << r.keypoint_count;
  os.width(8);
  os << fixed(r.spread, 3);
  os << status << "\n";
}

// ---- build-db ---------------------------------------------------------------

struct ManifestEntry {
  std::string name;
  std::string image_path;
  std::string content_id;
};

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure(HERBAR_E_IO, "cannot open manifest " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Failure(HERBAR_E_PARSE_ERROR, "manifest " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw Failure(HERBAR_E_PARSE_ERROR, "manifest must be a JSON array");
  const fs::path base = fs::path(path).parent_path();
  std::vector<ManifestEntry> out;
  for (const auto& item : doc) {
    try {
      ManifestEntry e{item.at("name").get<std::string>(), item.at("image_path").get<std::string>(),
                      item.at("content_id").get<std::string>()};
      fs::path p(e.image_path);
      if (p.is_relative()) e.image_path = (base / p).string();
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw Failure(HERBAR_E_PARSE_ERROR, std::string("manifest entry: ") + e.what());
    }
  }
  return out;
}

int cmd_build_db(const std::string& manifest_path, const std::string& out_path, int min_keypoints) {
  const auto entries = read_manifest(manifest_path);

  // Decode everything first so a missing file aborts before any work.
  std::vector<ImagePtr> images;
  for (const auto& e : entries) {
    log("reading " + e.image_path);
    images.push_back(load_image(e.image_path));
  }

  herbar_db* raw = nullptr;
  check(herbar_db_create(&raw), "cannot create database");
  DbPtr db(raw);
  const herbar_extract_params ep = extract_params();

  std::cout << "id   name                  stars  kp     spread  status\n";
  bool ok = true;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    std::uint32_t id = 0;
    herbar_rating rating{0, 0, 0.0};
    const herbar_status st =
        herbar_db_register(db.get(), e.name.c_str(), e.content_id.c_str(), images[i].get(), &ep, min_keypoints, &id,
                           &rating);
    if (st == HERBAR_OK) {
      print_rating_row(std::cout, std::to_string(id), e.name, rating, "ok");
    } else {
      ok = false;
      print_rating_row(std::cout, "-", e.name, rating, std::string("rejected: ") + herbar_status_name(st));
      std::cerr << "error: " << e.name << ": " << herbar_status_name(st) << " (" << herbar_last_error() << ")\n";
    }
  }
  if (!ok) {
    std::cerr << "error: database not written\n";
    return 1;
  }
  check(herbar_db_save(db.get(), out_path.c_str()), "cannot write " + out_path);
  log("wrote " + std::to_string(entries.size()) + " targets to " + out_path);
  return 0;
}

// ---- recognize / overlay ------------------------------------------------------

struct Recognition {
  bool found = false;
  herbar_detection det{};
  herbar_intrinsics k{};
};

herbar_intrinsics intrinsics_for(const herbar_image* frame, const std::string& path) {
  herbar_intrinsics k;
  if (!path.empty()) {
    check(herbar_intrinsics_load(path.c_str(), &k), "cannot load intrinsics " + path);
  } else {
    herbar_intrinsics_default(herbar_image_width(frame), herbar_image_height(frame), &k);
  }
  return k;
}

Recognition run_recognize(const herbar_db* db, const herbar_image* frame, int min_inliers,
                          const std::string& intrinsics) {
  Recognition r;
  const herbar_extract_params ep = extract_params();
  const herbar_recognize_params rp = recognize_params(min_inliers);
  int found = 0;
  check(herbar_recognize(db, frame, &ep, &rp, &r.det, &found), "recognition failed");
  r.found = found != 0;
  r.k = intrinsics_for(frame, intrinsics);
  return r;
}

json pose_json(const herbar_db* db, const Recognition& r) {
  herbar_pose pose;
  const herbar_status st = herbar_detection_pose(db, &r.det, &r.k, &pose);
  if (st != HERBAR_OK) return nullptr;
  return json{{"r", std::vector<double>(pose.r, pose.r + 9)}, {"t", std::vector<double>(pose.t, pose.t + 3)}};
}

int cmd_recognize(const std::string& frame_path, const std::string& db_path, const std::string& catalog_path,
                  bool as_json, int min_inliers, const std::string& intrinsics) {
  const DbPtr db = load_db(db_path);
  CatalogPtr catalog;
  if (!catalog_path.empty()) catalog = load_catalog(catalog_path);
  const ImagePtr frame = load_image(frame_path);
  const Recognition r = run_recognize(db.get(), frame.get(), min_inliers, intrinsics);

  json out{{"detection", nullptr}, {"content", nullptr}};
  std::string name;
  if (r.found) {
    const auto info = target_by_id(db.get(), r.det.target_id);
    name = info ? info->name : "";
    out["detection"] = {{"target_id", r.det.target_id},
                        {"name", name},
                        {"content_id", info ? info->content_id : ""},
                        {"confidence", r.det.confidence},
                        {"inliers", r.det.inliers},
                        {"matched", r.det.matched},
                        {"homography", std::vector<double>(r.det.homography, r.det.homography + 9)},
                        {"pose", pose_json(db.get(), r)}};
    if (catalog && info) {
      OwnedString entry;
      if (herbar_catalog_entry_json(catalog.get(), info->content_id, &entry.s) == HERBAR_OK) {
        out["content"] = json::parse(entry.str());
      }
    }
  }

  if (as_json) {
    std::cout << out.dump(2) << "\n";
  } else if (!r.found) {
    std::cout << "no detection\n";
  } else {
    std::cout << "target " << r.det.target_id << " (" << name << ")  confidence " << fixed(r.det.confidence, 3)
              << "  inliers " << r.det.inliers << "/" << r.det.matched << "\n";
    if (out["content"].is_object()) {
      std::cout << out["content"].value("name_cn", "") << " / " << out["content"].value("name_en", "") << "\n";
    }
  }
  return 0;
}

int cmd_overlay(const std::string& frame_path, const std::string& db_path, const std::string& model_path,
                const std::string& out_path, int min_inliers, const std::string& intrinsics) {
  const DbPtr db = load_db(db_path);
  herbar_model* raw_model = nullptr;
  check(herbar_model_load(model_path.c_str(), &raw_model), "cannot load model " + model_path);
  const ModelPtr model(raw_model);
  const ImagePtr frame = load_image(frame_path);
  const Recognition r = run_recognize(db.get(), frame.get(), min_inliers, intrinsics);

  if (!r.found) {
    log("no detection; copying input");
    fs::copy_file(frame_path, out_path, fs::copy_options::overwrite_existing);
    std::cout << "no detection\n";
    return 0;
  }
  herbar_pose pose;
  check(herbar_detection_pose(db.get(), &r.det, &r.k, &pose), "pose recovery failed");
  herbar_image* raw_out = nullptr;
  check(herbar_render_overlay(frame.get(), &pose, &r.k, model.get(), nullptr, &raw_out), "overlay failed");
  const ImagePtr rendered(raw_out);
  check(herbar_image_save_png(rendered.get(), out_path.c_str()), "cannot write " + out_path);
  std::cout << "target " << r.det.target_id << " overlay written to " << out_path << "\n";
  return 0;
}

// ---- bench ------------------------------------------------------------------

std::string id_text(const json& v) { return v.is_null() ? "none" : std::to_string(v.get<long long>()); }

void print_bench_table(const json& report) {
  std::cerr << "test          target                param     side    expected got     inliers result\n";
  for (const auto& c : report["cases"]) {
    std::string param = c["parameter"].is_null() ? "-" : c["parameter"].dump();
    std::string result = c["skipped"].get<bool>()            ? "SKIP"
                         : c["expected_failure"].get<bool>() ? "XFAIL"
                         : c["pass"].get<bool>()             ? "PASS"
                                                             : "FAIL";
    std::cerr << std::left;
    std::cerr.width(14);
    std::cerr << c["test"].get<std::string>();
    std::cerr.width(22);
    std::cerr << (std::to_string(c["target_id"].get<int>()) + " " + c["target"].get<std::string>());
    std::cerr.width(10);
    std::cerr << param;
    std::cerr.width(8);
    std::cerr << c.value("side", "-");
    std::cerr.width(9);
    std::cerr << id_text(c["expected_id"]);
    std::cerr.width(8);
    std::cerr << id_text(c["got_id"]);
    std::cerr.width(8);
    std::cerr << c["inliers"].get<int>();
    std::cerr << result << "\n";
  }
  std::cerr << "\nfamily        total passed failed skipped xfail\n";
  for (const char* family : {"rotation", "occlusion", "interference", "color"}) {
    const auto& s = report["summary"][family];
    std::cerr.width(14);
    std::cerr << family;
    for (const char* key : {"total", "passed", "failed", "skipped", "expected_failures"}) {
      std::cerr.width(7);
      std::cerr << s[key].get<int>();
    }
    std::cerr << "\n";
  }
  std::cerr << (report["all_passed"].get<bool>() ? "all cases passed\n" : "some cases FAILED\n");
}

int cmd_bench(const std::string& db_path, const std::string& targets_dir, const std::string& report_path,
              const std::string& dump_dir, int min_keypoints, int min_inliers) {
  const DbPtr db = load_db(db_path);
  if (!dump_dir.empty()) fs::create_directories(dump_dir);
  herbar_bench_options opt;
  herbar_bench_options_default(&opt);
  opt.targets_dir = targets_dir.c_str();
  opt.dump_dir = dump_dir.empty() ? nullptr : dump_dir.c_str();
  opt.threads = thread_count();
  opt.min_keypoints = min_keypoints;
  opt.recognize = recognize_params(min_inliers);
  log("running bench over " + std::to_string(herbar_db_target_count(db.get())) + " targets with " +
      std::to_string(opt.threads) + " threads");

  OwnedString report;
  int all_passed = 0;
  check(herbar_bench_run(db.get(), &opt, &report.s, &all_passed), "bench failed");
  if (report_path.empty()) {
    std::cout << report.str() << "\n";
  } else {
    std::ofstream out(report_path, std::ios::binary);
    out << report.str() << "\n";
    if (!out) throw Failure(HERBAR_E_IO, "cannot write " + report_path);
  }
  print_bench_table(json::parse(report.str()));
  return all_passed ? 0 : 1;
}

// ---- validate ---------------------------------------------------------------

int cmd_validate(const std::string& catalog_path, const std::string& db_path) {
  const CatalogPtr catalog = load_catalog(catalog_path);
  const DbPtr db = load_db(db_path);
  OwnedString report;
  int consistent = 0;
  check(herbar_catalog_validate(catalog.get(), db.get(), &report.s, &consistent), "validation failed");
  std::cout << report.str() << "\n";
  return consistent ? 0 : 1;
}

// ---- serve ------------------------------------------------------------------

int cmd_serve(const std::string& db_path, const std::string& catalog_path, const std::string& models_dir,
              const std::string& address, std::uint16_t port, int min_inliers, int hysteresis,
              const std::string& intrinsics) {
  const DbPtr db = load_db(db_path);
  const CatalogPtr catalog = load_catalog(catalog_path);

  herbar_server_options opt;
  herbar_server_options_default(&opt);
  opt.address = address.c_str();
  opt.port = port;
  opt.models_dir = models_dir.empty() ? nullptr : models_dir.c_str();
  opt.hysteresis = hysteresis;
  opt.recognize = recognize_params(min_inliers);
  if (!intrinsics.empty()) {
    check(herbar_intrinsics_load(intrinsics.c_str(), &opt.intrinsics), "cannot load intrinsics " + intrinsics);
    opt.has_intrinsics = 1;
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  herbar_server* raw = nullptr;
  check(herbar_server_create(db.get(), catalog.get(), &opt, &raw), "cannot start server");
  const ServerPtr server(raw);
  std::cerr << "listening on " << address << ":" << herbar_server_port(server.get()) << "\n";

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    log("signal " + std::to_string(sig) + ", stopping");
    herbar_server_stop(server.get());
  });
  const herbar_status st = herbar_server_run(server.get());
  if (waiter.joinable()) {
    // run() only returns after stop(), which the waiter issued.
    waiter.join();
  }
  check(st, "server error");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"herbar: herb picture recognition engine"};
  app.require_subcommand(1);
  app.add_option("--seed", g_opts.seed, "RANSAC seed");
  app.add_option("--threads", g_opts.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_flag("-v,--verbose", g_opts.verbose, "log progress to stderr");

  int min_keypoints = 50;
  int min_inliers = 0;
  std::string intrinsics;

  std::string manifest, out_path;
  auto* build = app.add_subcommand("build-db", "register manifest pictures into a target database");
  build->add_option("manifest", manifest, "JSON list of {name, image_path, content_id}")->required();
  build->add_option("-o,--out", out_path, "output .hrb file")->required();
  build->add_option("--min-keypoints", min_keypoints, "reject pictures with fewer keypoints");

  std::string frame, db_path, catalog_path;
  bool as_json = false;
  auto* recog = app.add_subcommand("recognize", "recognize one picture");
  recog->add_option("frame", frame, "frame PNG")->required();
  recog->add_option("--db", db_path, "target database")->required();
  recog->add_option("--catalog", catalog_path, "content catalog JSON");
  recog->add_flag("--json", as_json, "print JSON");
  recog->add_option("--min-inliers", min_inliers);
  recog->add_option("--intrinsics", intrinsics, "camera intrinsics JSON");

  std::string model_path;
  auto* overlay = app.add_subcommand("overlay", "draw the wireframe model over a recognized picture");
  overlay->add_option("frame", frame, "frame PNG")->required();
  overlay->add_option("--db", db_path, "target database")->required();
  overlay->add_option("--model", model_path, "wireframe model JSON")->required();
  overlay->add_option("-o,--out", out_path, "output PNG")->required();
  overlay->add_option("--min-inliers", min_inliers);
  overlay->add_option("--intrinsics", intrinsics, "camera intrinsics JSON");

  std::string targets_dir, report_path, dump_dir;
  auto* bench = app.add_subcommand("bench", "run the rotation/occlusion/interference/color test bench");
  bench->add_option("--db", db_path, "target database")->required();
  bench->add_option("--targets", targets_dir, "directory holding <name>.png source pictures")->required();
  bench->add_option("--report", report_path, "write the JSON report here instead of stdout");
  bench->add_option("--dump-cases", dump_dir, "write every synthesized frame as PNG");
  bench->add_option("--min-keypoints", min_keypoints, "targets below this count are low-texture");
  bench->add_option("--min-inliers", min_inliers);

  auto* validate = app.add_subcommand("validate", "check catalog and database reference each other");
  validate->add_option("--catalog", catalog_path, "content catalog JSON")->required();
  validate->add_option("--db", db_path, "target database")->required();

  std::string models_dir, address = "127.0.0.1";
  std::uint16_t port = 8080;
  int hysteresis = 3;
  auto* serve = app.add_subcommand("serve", "run the recognition service");
  serve->add_option("--db", db_path, "target database")->required()->envname("HERBAR_DB");
  serve->add_option("--catalog", catalog_path, "content catalog JSON")->required()->envname("HERBAR_CATALOG");
  serve->add_option("--models", models_dir, "directory of wireframe model JSON files")->envname("HERBAR_MODELS");
  serve->add_option("--address", address);
  serve->add_option("--port", port)->envname("HERBAR_PORT");
  serve->add_option("--min-inliers", min_inliers);
  serve->add_option("--hysteresis", hysteresis)->check(CLI::PositiveNumber);
  serve->add_option("--intrinsics", intrinsics, "camera intrinsics JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) return cmd_build_db(manifest, out_path, min_keypoints);
    if (*recog) return cmd_recognize(frame, db_path, catalog_path, as_json, min_inliers, intrinsics);
    if (*overlay) return cmd_overlay(frame, db_path, model_path, out_path, min_inliers, intrinsics);
    if (*bench) return cmd_bench(db_path, targets_dir, report_path, dump_dir, min_keypoints, min_inliers);
    if (*validate) return cmd_validate(catalog_path, db_path);
    if (*serve) return cmd_serve(db_path, catalog_path, models_dir, address, port, min_inliers, hysteresis, intrinsics);
  } catch (const Failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
