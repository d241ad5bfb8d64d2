/*
 * herbar: image-target recognition engine for herb learning cards.
 *
 * Plain C interface over the C++ engine. All objects are opaque handles
 * created by a herbar_*_create/load function and released with the matching
 * herbar_*_free. Every fallible call returns a herbar_status; on failure a
 * human-readable message for the calling thread is available from
 * herbar_last_error(). Strings returned through `char**` are heap-allocated
 * and must be released with herbar_string_free().
 *
 * Handles are immutable after construction except herbar_db, which grows via
 * herbar_db_register. Immutable handles may be shared across threads.
 */
#ifndef HERBAR_H
#define HERBAR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(HERBAR_BUILDING_LIBRARY)
#    define HERBAR_API __declspec(dllexport)
#  else
#    define HERBAR_API __declspec(dllimport)
#  endif
#else
#  define HERBAR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum herbar_status {
  HERBAR_OK = 0,
  HERBAR_E_INVALID_ARGUMENT = 1,
  HERBAR_E_IO = 2,
  HERBAR_E_IMAGE_TOO_SMALL = 3,
  HERBAR_E_SINGULAR_HOMOGRAPHY = 4,
  HERBAR_E_DEGENERATE_CONFIGURATION = 5,
  HERBAR_E_TOO_FEW_FEATURES = 6,
  HERBAR_E_DUPLICATE_NAME = 7,
  HERBAR_E_BAD_MAGIC = 8,
  HERBAR_E_UNSUPPORTED_VERSION = 9,
  HERBAR_E_TRUNCATED_FILE = 10,
  HERBAR_E_CHECKSUM_MISMATCH = 11,
  HERBAR_E_PARSE_ERROR = 12,
  HERBAR_E_DUPLICATE_ID = 13,
  HERBAR_E_MISSING_SECTION = 14,
  HERBAR_E_NOT_FOUND = 15,
  HERBAR_E_MALFORMED_FRAME = 16,
  HERBAR_E_BEHIND_CAMERA = 17,
  HERBAR_E_INTERNAL = 99
} herbar_status;

typedef struct herbar_image herbar_image;
typedef struct herbar_db herbar_db;
typedef struct herbar_catalog herbar_catalog;
typedef struct herbar_model herbar_model;
typedef struct herbar_server herbar_server;

HERBAR_API const char* herbar_version(void);
/* Symbolic name of a status, e.g. "ChecksumMismatch". */
HERBAR_API const char* herbar_status_name(herbar_status status);
/* Message for the most recent failure on this thread; "" if none. */
HERBAR_API const char* herbar_last_error(void);
HERBAR_API void herbar_string_free(char* s);

/* ---- parameters ------------------------------------------------------- */

typedef struct herbar_extract_params {
  int threshold;       /* corner contrast, default 20 */
  int n_levels;        /* pyramid depth, default 4 */
  double scale_factor; /* default 1.2 */
  int max_features;    /* default 500 */
  int nms_radius;      /* default 3 */
} herbar_extract_params;

typedef struct herbar_recognize_params {
  double ratio;          /* default 0.8 */
  int max_dist;          /* default 64 */
  int ransac_iterations; /* default 500 */
  double inlier_px;      /* default 3.0 */
  int min_inliers;       /* default 12 */
  double min_confidence; /* default 0.25 */
  uint64_t seed;         /* RANSAC seed */
} herbar_recognize_params;

HERBAR_API void herbar_extract_params_default(herbar_extract_params* out);
HERBAR_API void herbar_recognize_params_default(herbar_recognize_params* out);

/* ---- images (8-bit RGBA) ---------------------------------------------- */

HERBAR_API herbar_status herbar_image_create(uint32_t width, uint32_t height, const uint8_t* rgba,
                                             herbar_image** out);
HERBAR_API herbar_status herbar_image_load_png(const char* path, herbar_image** out);
HERBAR_API herbar_status herbar_image_save_png(const herbar_image* image, const char* path);
HERBAR_API uint32_t herbar_image_width(const herbar_image* image);
HERBAR_API uint32_t herbar_image_height(const herbar_image* image);
/* Row-major RGBA, 4 * width * height bytes, owned by the image. */
HERBAR_API const uint8_t* herbar_image_pixels(const herbar_image* image);
HERBAR_API void herbar_image_free(herbar_image* image);

/* ---- target database -------------------------------------------------- */

typedef struct herbar_rating {
  int stars;
  int keypoint_count;
  double spread;
} herbar_rating;

typedef struct herbar_target_info {
  uint32_t id;
  const char* name;       /* owned by the database */
  const char* content_id; /* owned by the database */
  uint32_t image_width;
  uint32_t image_height;
  herbar_rating rating;
} herbar_target_info;

HERBAR_API herbar_status herbar_db_create(herbar_db** out);
HERBAR_API herbar_status herbar_db_load(const char* path, herbar_db** out);
/* Atomic: writes a temporary sibling and renames it into place. */
HERBAR_API herbar_status herbar_db_save(const herbar_db* db, const char* path);
/*
 * Extracts features from `image` and appends a target with the next free id.
 * `params` may be NULL for defaults. On HERBAR_E_TOO_FEW_FEATURES the rating
 * is still written to `rating_out` (if non-NULL).
 */
HERBAR_API herbar_status herbar_db_register(herbar_db* db, const char* name, const char* content_id,
                                            const herbar_image* image, const herbar_extract_params* params,
                                            int min_keypoints, uint32_t* id_out, herbar_rating* rating_out);
HERBAR_API size_t herbar_db_target_count(const herbar_db* db);
HERBAR_API herbar_status herbar_db_target_at(const herbar_db* db, size_t index, herbar_target_info* out);
HERBAR_API void herbar_db_free(herbar_db* db);

/* ---- recognition ------------------------------------------------------ */

typedef struct herbar_detection {
  uint32_t target_id;
  uint32_t inliers;
  uint32_t matched;
  double confidence;
  double homography[9]; /* row-major, target image px -> frame px, h[8] == 1 */
} herbar_detection;

/* *found is set to 0 when no target passes verification. NULL params use defaults. */
HERBAR_API herbar_status herbar_recognize(const herbar_db* db, const herbar_image* frame,
                                          const herbar_extract_params* extract,
                                          const herbar_recognize_params* params, herbar_detection* out,
                                          int* found);

/* ---- pose and overlay ------------------------------------------------- */

typedef struct herbar_intrinsics {
  double fx, fy, cx, cy;
} herbar_intrinsics;

typedef struct herbar_pose {
  double r[9]; /* row-major rotation */
  double t[3]; /* translation in target-width units */
} herbar_pose;

HERBAR_API void herbar_intrinsics_default(uint32_t frame_width, uint32_t frame_height, herbar_intrinsics* out);
HERBAR_API herbar_status herbar_intrinsics_load(const char* path, herbar_intrinsics* out);
/* Pose of the detected target, whose plane is scaled to unit width. */
HERBAR_API herbar_status herbar_detection_pose(const herbar_db* db, const herbar_detection* detection,
                                               const herbar_intrinsics* k, herbar_pose* out);

HERBAR_API herbar_status herbar_model_load(const char* path, herbar_model** out);
HERBAR_API void herbar_model_free(herbar_model* model);
HERBAR_API herbar_status herbar_render_overlay(const herbar_image* frame, const herbar_pose* pose,
                                               const herbar_intrinsics* k, const herbar_model* model,
                                               const uint8_t rgba[4], herbar_image** out);

/* ---- content ---------------------------------------------------------- */

HERBAR_API herbar_status herbar_catalog_load(const char* path, herbar_catalog** out);
HERBAR_API size_t herbar_catalog_size(const herbar_catalog* catalog);
/* The entry as a JSON object; HERBAR_E_NOT_FOUND for unknown ids. */
HERBAR_API herbar_status herbar_catalog_entry_json(const herbar_catalog* catalog, const char* content_id,
                                                   char** json_out);
/* {"consistent":bool,"missing_entries":[...],"orphan_entries":[...]} */
HERBAR_API herbar_status herbar_catalog_validate(const herbar_catalog* catalog, const herbar_db* db,
                                                 char** report_json_out, int* consistent);
HERBAR_API void herbar_catalog_free(herbar_catalog* catalog);

/* ---- confusion-test bench --------------------------------------------- */

typedef struct herbar_bench_options {
  const char* targets_dir; /* holds <target name>.png */
  const char* dump_dir;    /* NULL: do not dump synthesized frames */
  int threads;
  int min_keypoints; /* targets below this count are low-texture */
  herbar_extract_params extract;
  herbar_recognize_params recognize;
} herbar_bench_options;

HERBAR_API void herbar_bench_options_default(herbar_bench_options* out);
HERBAR_API herbar_status herbar_bench_run(const herbar_db* db, const herbar_bench_options* options,
                                          char** report_json_out, int* all_passed);

/* ---- service ---------------------------------------------------------- */

typedef struct herbar_server_options {
  const char* address;    /* default "127.0.0.1" */
  uint16_t port;          /* 0 picks a free port */
  const char* models_dir; /* may be NULL */
  int hysteresis;         /* default 3 */
  int has_intrinsics;     /* use `intrinsics` instead of per-frame defaults */
  herbar_intrinsics intrinsics;
  herbar_extract_params extract;
  herbar_recognize_params recognize;
} herbar_server_options;

HERBAR_API void herbar_server_options_default(herbar_server_options* out);
/* Binds immediately; the database and catalog are copied into the server. */
HERBAR_API herbar_status herbar_server_create(const herbar_db* db, const herbar_catalog* catalog,
                                              const herbar_server_options* options, herbar_server** out);
HERBAR_API uint16_t herbar_server_port(const herbar_server* server);
/* Blocks until herbar_server_stop is called from another thread. */
HERBAR_API herbar_status herbar_server_run(herbar_server* server);
HERBAR_API void herbar_server_stop(herbar_server* server);
HERBAR_API void herbar_server_free(herbar_server* server);

#ifdef __cplusplus
}
#endif

#endif /* HERBAR_H */
