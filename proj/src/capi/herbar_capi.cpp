#include "herbar/herbar.h"

#include "herbar/bench.hpp"
#include "herbar/content.hpp"
#include "herbar/error.hpp"
#include "herbar/matcher.hpp"
#include "herbar/png_io.hpp"
#include "herbar/pose.hpp"
#include "herbar/service.hpp"
#include "herbar/targetdb.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct herbar_image {
  herbar::ColorImage img;
};

struct herbar_db {
  herbar::TargetDatabase db;
};

struct herbar_catalog {
  herbar::Catalog catalog;
};

struct herbar_model {
  herbar::WireframeModel model;
};

struct herbar_server {
  std::unique_ptr<herbar::Server> server;
};

namespace {

thread_local std::string g_last_error;

herbar_status to_status(herbar::ErrorCode code) {
  using herbar::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return HERBAR_E_INVALID_ARGUMENT;
    case ErrorCode::Io: return HERBAR_E_IO;
    case ErrorCode::ImageTooSmall: return HERBAR_E_IMAGE_TOO_SMALL;
    case ErrorCode::SingularHomography: return HERBAR_E_SINGULAR_HOMOGRAPHY;
    case ErrorCode::DegenerateConfiguration: return HERBAR_E_DEGENERATE_CONFIGURATION;
    case ErrorCode::TooFewFeatures: return HERBAR_E_TOO_FEW_FEATURES;
    case ErrorCode::DuplicateName: return HERBAR_E_DUPLICATE_NAME;
    case ErrorCode::BadMagic: return HERBAR_E_BAD_MAGIC;
    case ErrorCode::UnsupportedVersion: return HERBAR_E_UNSUPPORTED_VERSION;
    case ErrorCode::TruncatedFile: return HERBAR_E_TRUNCATED_FILE;
    case ErrorCode::ChecksumMismatch: return HERBAR_E_CHECKSUM_MISMATCH;
    case ErrorCode::ParseError: return HERBAR_E_PARSE_ERROR;
    case ErrorCode::DuplicateId: return HERBAR_E_DUPLICATE_ID;
    case ErrorCode::MissingSection: return HERBAR_E_MISSING_SECTION;
    case ErrorCode::NotFound: return HERBAR_E_NOT_FOUND;
    case ErrorCode::MalformedFrame: return HERBAR_E_MALFORMED_FRAME;
    case ErrorCode::BehindCamera: return HERBAR_E_BEHIND_CAMERA;
  }
  return HERBAR_E_INTERNAL;
}

herbar_status fail(herbar_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
herbar_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return HERBAR_OK;
  } catch (const herbar::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(HERBAR_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(HERBAR_E_INTERNAL, e.what());
  }
}

#define HERBAR_REQUIRE(cond)                                                       \
  do {                                                                             \
    if (!(cond)) return fail(HERBAR_E_INVALID_ARGUMENT, "invalid argument: " #cond); \
  } while (0)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

herbar::ExtractParams to_cpp(const herbar_extract_params* p) {
  herbar::ExtractParams out;
  if (!p) return out;
  out.threshold = p->threshold;
  out.n_levels = p->n_levels;
  out.scale_factor = p->scale_factor;
  out.max_features = p->max_features;
  out.nms_radius = p->nms_radius;
  return out;
}

herbar::RecognizeParams to_cpp(const herbar_recognize_params* p) {
  herbar::RecognizeParams out;
  if (!p) return out;
  out.match.ratio = p->ratio;
  out.match.max_dist = p->max_dist;
  out.ransac.iterations = p->ransac_iterations;
  out.ransac.inlier_px = p->inlier_px;
  out.ransac.seed = p->seed;
  out.min_inliers = p->min_inliers;
  out.min_confidence = p->min_confidence;
  return out;
}

herbar_rating to_c(const herbar::QualityRating& r) { return {r.stars, r.keypoint_count, r.spread}; }

herbar::Homography homography_of(const herbar_detection& d) {
  herbar::Mat3 m;
  m << d.homography[0], d.homography[1], d.homography[2], d.homography[3], d.homography[4], d.homography[5],
      d.homography[6], d.homography[7], d.homography[8];
  return {m};
}

herbar::CameraIntrinsics to_cpp(const herbar_intrinsics& k) { return {k.fx, k.fy, k.cx, k.cy}; }

herbar::Pose to_cpp(const herbar_pose& p) {
  herbar::Pose out;
  for (int i = 0; i < 9; ++i) out.r(i / 3, i % 3) = p.r[i];
  out.t = herbar::Vec3(p.t[0], p.t[1], p.t[2]);
  return out;
}

}  // namespace

extern "C" {

const char* herbar_version(void) { return "1.0.0"; }

const char* herbar_status_name(herbar_status status) {
  switch (status) {
    case HERBAR_OK: return "Ok";
    case HERBAR_E_INVALID_ARGUMENT: return "InvalidArgument";
    case HERBAR_E_IO: return "IoError";
    case HERBAR_E_IMAGE_TOO_SMALL: return "ImageTooSmall";
    case HERBAR_E_SINGULAR_HOMOGRAPHY: return "SingularHomography";
    case HERBAR_E_DEGENERATE_CONFIGURATION: return "DegenerateConfiguration";
    case HERBAR_E_TOO_FEW_FEATURES: return "TooFewFeatures";
    case HERBAR_E_DUPLICATE_NAME: return "DuplicateName";
    case HERBAR_E_BAD_MAGIC: return "BadMagic";
    case HERBAR_E_UNSUPPORTED_VERSION: return "UnsupportedVersion";
    case HERBAR_E_TRUNCATED_FILE: return "TruncatedFile";
    case HERBAR_E_CHECKSUM_MISMATCH: return "ChecksumMismatch";
    case HERBAR_E_PARSE_ERROR: return "ParseError";
    case HERBAR_E_DUPLICATE_ID: return "DuplicateId";
    case HERBAR_E_MISSING_SECTION: return "MissingSection";
    case HERBAR_E_NOT_FOUND: return "NotFound";
    case HERBAR_E_MALFORMED_FRAME: return "MalformedFrame";
    case HERBAR_E_BEHIND_CAMERA: return "BehindCamera";
    case HERBAR_E_INTERNAL: return "InternalError";
  }
  return "Unknown";
}

const char* herbar_last_error(void) { return g_last_error.c_str(); }

void herbar_string_free(char* s) { std::free(s); }

void herbar_extract_params_default(herbar_extract_params* out) {
  if (!out) return;
  const herbar::ExtractParams d;
  *out = {d.threshold, d.n_levels, d.scale_factor, d.max_features, d.nms_radius};
}

void herbar_recognize_params_default(herbar_recognize_params* out) {
  if (!out) return;
  const herbar::RecognizeParams d;
  *out = {d.match.ratio, d.match.max_dist, d.ransac.iterations, d.ransac.inlier_px,
          d.min_inliers, d.min_confidence, d.ransac.seed};
}

herbar_status herbar_image_create(uint32_t width, uint32_t height, const uint8_t* rgba, herbar_image** out) {
  HERBAR_REQUIRE(out && rgba && width > 0 && height > 0);
  return guarded([&] {
    std::vector<std::uint8_t> px(rgba, rgba + 4 * static_cast<std::size_t>(width) * height);
    *out = new herbar_image{herbar::ColorImage(static_cast<int>(width), static_cast<int>(height), std::move(px))};
  });
}

herbar_status herbar_image_load_png(const char* path, herbar_image** out) {
  HERBAR_REQUIRE(path && out);
  return guarded([&] { *out = new herbar_image{herbar::read_png(path)}; });
}

herbar_status herbar_image_save_png(const herbar_image* image, const char* path) {
  HERBAR_REQUIRE(image && path);
  return guarded([&] { herbar::write_png(image->img, path); });
}

uint32_t herbar_image_width(const herbar_image* image) { return image ? image->img.width() : 0; }
uint32_t herbar_image_height(const herbar_image* image) { return image ? image->img.height() : 0; }
const uint8_t* herbar_image_pixels(const herbar_image* image) { return image ? image->img.data().data() : nullptr; }
void herbar_image_free(herbar_image* image) { delete image; }

herbar_status herbar_db_create(herbar_db** out) {
  HERBAR_REQUIRE(out);
  return guarded([&] { *out = new herbar_db{}; });
}

herbar_status herbar_db_load(const char* path, herbar_db** out) {
  HERBAR_REQUIRE(path && out);
  return guarded([&] { *out = new herbar_db{herbar::load_db(path)}; });
}

herbar_status herbar_db_save(const herbar_db* db, const char* path) {
  HERBAR_REQUIRE(db && path);
  return guarded([&] { herbar::save_db(db->db, path); });
}

herbar_status herbar_db_register(herbar_db* db, const char* name, const char* content_id, const herbar_image* image,
                                 const herbar_extract_params* params, int min_keypoints, uint32_t* id_out,
                                 herbar_rating* rating_out) {
  HERBAR_REQUIRE(db && name && content_id && image);
  try {
    g_last_error.clear();
    herbar::RegisterParams rp;
    rp.extract = to_cpp(params);
    rp.min_keypoints = min_keypoints;
    herbar::Target t = herbar::register_target(db->db, name, content_id, image->img, rp);
    if (rating_out) *rating_out = to_c(herbar::rate_target(t));
    if (id_out) *id_out = t.id;
    db->db.add(std::move(t));
    return HERBAR_OK;
  } catch (const herbar::TooFewFeatures& e) {
    if (rating_out) *rating_out = to_c(e.rating());
    return fail(HERBAR_E_TOO_FEW_FEATURES, e.what());
  } catch (const herbar::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(HERBAR_E_INTERNAL, e.what());
  }
}

size_t herbar_db_target_count(const herbar_db* db) { return db ? db->db.size() : 0; }

herbar_status herbar_db_target_at(const herbar_db* db, size_t index, herbar_target_info* out) {
  HERBAR_REQUIRE(db && out);
  if (index >= db->db.size()) return fail(HERBAR_E_NOT_FOUND, "target index out of range");
  const herbar::Target& t = db->db.targets()[index];
  out->id = t.id;
  out->name = t.name.c_str();
  out->content_id = t.content_id.c_str();
  out->image_width = static_cast<uint32_t>(t.image_width);
  out->image_height = static_cast<uint32_t>(t.image_height);
  out->rating = to_c(herbar::rate_target(t));
  return HERBAR_OK;
}

void herbar_db_free(herbar_db* db) { delete db; }

herbar_status herbar_recognize(const herbar_db* db, const herbar_image* frame, const herbar_extract_params* extract,
                               const herbar_recognize_params* params, herbar_detection* out, int* found) {
  HERBAR_REQUIRE(db && frame && out && found);
  return guarded([&] {
    *found = 0;
    const auto features = herbar::extract(herbar::to_grayscale(frame->img), to_cpp(extract));
    const auto det = herbar::recognize(features, db->db, to_cpp(params));
    if (!det) return;
    *found = 1;
    out->target_id = det->target_id;
    out->inliers = static_cast<uint32_t>(det->inliers);
    out->matched = static_cast<uint32_t>(det->matched);
    out->confidence = det->confidence;
    const auto h = det->homography.row_major();
    std::copy(h.begin(), h.end(), out->homography);
  });
}

void herbar_intrinsics_default(uint32_t frame_width, uint32_t frame_height, herbar_intrinsics* out) {
  if (!out) return;
  const auto k = herbar::CameraIntrinsics::default_for(static_cast<int>(frame_width), static_cast<int>(frame_height));
  *out = {k.fx, k.fy, k.cx, k.cy};
}

herbar_status herbar_intrinsics_load(const char* path, herbar_intrinsics* out) {
  HERBAR_REQUIRE(path && out);
  return guarded([&] {
    const auto k = herbar::load_intrinsics(path);
    *out = {k.fx, k.fy, k.cx, k.cy};
  });
}

herbar_status herbar_detection_pose(const herbar_db* db, const herbar_detection* detection, const herbar_intrinsics* k,
                                    herbar_pose* out) {
  HERBAR_REQUIRE(db && detection && k && out);
  return guarded([&] {
    const herbar::Target* t = db->db.find(detection->target_id);
    if (!t) throw herbar::Error(herbar::ErrorCode::NotFound, "detection refers to an unknown target");
    const herbar::Pose p =
        herbar::decompose_homography(herbar::to_unit_plane(homography_of(*detection), t->image_width), to_cpp(*k));
    for (int i = 0; i < 9; ++i) out->r[i] = p.r(i / 3, i % 3);
    for (int i = 0; i < 3; ++i) out->t[i] = p.t(i);
  });
}

herbar_status herbar_model_load(const char* path, herbar_model** out) {
  HERBAR_REQUIRE(path && out);
  return guarded([&] { *out = new herbar_model{herbar::load_model(path)}; });
}

void herbar_model_free(herbar_model* model) { delete model; }

herbar_status herbar_render_overlay(const herbar_image* frame, const herbar_pose* pose, const herbar_intrinsics* k,
                                    const herbar_model* model, const uint8_t rgba[4], herbar_image** out) {
  HERBAR_REQUIRE(frame && pose && k && model && out);
  return guarded([&] {
    herbar::Rgba color;
    if (rgba) color = {rgba[0], rgba[1], rgba[2], rgba[3]};
    *out = new herbar_image{herbar::render_overlay(frame->img, to_cpp(*pose), to_cpp(*k), model->model, color)};
  });
}

herbar_status herbar_catalog_load(const char* path, herbar_catalog** out) {
  HERBAR_REQUIRE(path && out);
  return guarded([&] { *out = new herbar_catalog{herbar::load_catalog_file(path)}; });
}

size_t herbar_catalog_size(const herbar_catalog* catalog) { return catalog ? catalog->catalog.size() : 0; }

herbar_status herbar_catalog_entry_json(const herbar_catalog* catalog, const char* content_id, char** json_out) {
  HERBAR_REQUIRE(catalog && content_id && json_out);
  return guarded([&] { *json_out = dup_string(herbar::to_json(catalog->catalog.get(content_id)).dump()); });
}

herbar_status herbar_catalog_validate(const herbar_catalog* catalog, const herbar_db* db, char** report_json_out,
                                      int* consistent) {
  HERBAR_REQUIRE(catalog && db && report_json_out);
  return guarded([&] {
    const auto report = herbar::validate_against_db(catalog->catalog, db->db);
    if (consistent) *consistent = report.consistent() ? 1 : 0;
    *report_json_out = dup_string(report.to_json().dump(2));
  });
}

void herbar_catalog_free(herbar_catalog* catalog) { delete catalog; }

void herbar_bench_options_default(herbar_bench_options* out) {
  if (!out) return;
  out->targets_dir = nullptr;
  out->dump_dir = nullptr;
  out->threads = 1;
  out->min_keypoints = herbar::kDefaultMinKeypoints;
  herbar_extract_params_default(&out->extract);
  herbar_recognize_params_default(&out->recognize);
}

herbar_status herbar_bench_run(const herbar_db* db, const herbar_bench_options* options, char** report_json_out,
                               int* all_passed) {
  HERBAR_REQUIRE(db && options && options->targets_dir && report_json_out);
  return guarded([&] {
    herbar::BenchOptions opt;
    opt.targets_dir = options->targets_dir;
    if (options->dump_dir) opt.dump_dir = std::filesystem::path(options->dump_dir);
    opt.threads = options->threads;
    opt.min_keypoints = options->min_keypoints;
    opt.extract = to_cpp(&options->extract);
    opt.recognize = to_cpp(&options->recognize);
    const auto report = herbar::run_bench(db->db, opt);
    if (all_passed) *all_passed = report.all_passed() ? 1 : 0;
    *report_json_out = dup_string(report.to_json().dump(2));
  });
}

void herbar_server_options_default(herbar_server_options* out) {
  if (!out) return;
  out->address = "127.0.0.1";
  out->port = 8080;
  out->models_dir = nullptr;
  out->hysteresis = 3;
  out->has_intrinsics = 0;
  out->intrinsics = {0, 0, 0, 0};
  herbar_extract_params_default(&out->extract);
  herbar_recognize_params_default(&out->recognize);
}

herbar_status herbar_server_create(const herbar_db* db, const herbar_catalog* catalog,
                                   const herbar_server_options* options, herbar_server** out) {
  HERBAR_REQUIRE(db && catalog && options && out);
  return guarded([&] {
    herbar::ServiceConfig config;
    config.extract = to_cpp(&options->extract);
    config.recognize = to_cpp(&options->recognize);
    config.hysteresis = options->hysteresis;
    if (options->has_intrinsics) config.intrinsics = to_cpp(options->intrinsics);
    if (options->models_dir) config.models_dir = options->models_dir;
    auto engine = std::make_shared<const herbar::Engine>(std::make_shared<const herbar::TargetDatabase>(db->db),
                                                         std::make_shared<const herbar::Catalog>(catalog->catalog),
                                                         std::move(config));
    herbar::ServerOptions so;
    if (options->address) so.address = options->address;
    so.port = options->port;
    *out = new herbar_server{std::make_unique<herbar::Server>(std::move(engine), so)};
  });
}

uint16_t herbar_server_port(const herbar_server* server) { return server ? server->server->port() : 0; }

herbar_status herbar_server_run(herbar_server* server) {
  HERBAR_REQUIRE(server);
  return guarded([&] { server->server->run(); });
}

void herbar_server_stop(herbar_server* server) {
  if (server) server->server->stop();
}

void herbar_server_free(herbar_server* server) { delete server; }

}  // extern "C"
