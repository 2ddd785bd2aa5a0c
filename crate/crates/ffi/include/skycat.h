#ifndef SKYCAT_H
#define SKYCAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SkycatStatus {
  SKYCAT_STATUS_OK = 0,
  SKYCAT_STATUS_NULL_POINTER = 1,
  SKYCAT_STATUS_INVALID_ARGUMENT = 2,
  SKYCAT_STATUS_DOMAIN = 3,
  SKYCAT_STATUS_DEPTH_LIMIT = 4,
  SKYCAT_STATUS_ENCODING = 5,
  SKYCAT_STATUS_GEOMETRY = 6,
  SKYCAT_STATUS_CONFIG = 7,
  SKYCAT_STATUS_IO = 8,
  SKYCAT_STATUS_FORMAT = 9,
  SKYCAT_STATUS_VERSION_MISMATCH = 10,
  SKYCAT_STATUS_TRUNCATED = 11,
  SKYCAT_STATUS_DIGEST_MISMATCH = 12,
  SKYCAT_STATUS_UNKNOWN_EVENT = 13,
  SKYCAT_STATUS_ALREADY_UNDONE = 14,
  SKYCAT_STATUS_UNDO_CONFLICT = 15,
  SKYCAT_STATUS_BUFFER_TOO_SMALL = 16,
  SKYCAT_STATUS_OUT_OF_RANGE = 17,
  SKYCAT_STATUS_OTHER = 18,
  SKYCAT_STATUS_PANIC = 19,
} SkycatStatus;

// Tables addressable through the C API.
typedef enum SkycatTable {
  SKYCAT_TABLE_FIELD = 0,
  SKYCAT_TABLE_PLATE = 1,
  SKYCAT_TABLE_PHOTO_OBJ = 2,
  SKYCAT_TABLE_SPEC_OBJ = 3,
  SKYCAT_TABLE_SPEC_LINE = 4,
  SKYCAT_TABLE_NEIGHBORS = 5,
} SkycatTable;

// A catalog plus the in-memory journal of loads made through this handle.
typedef struct SkycatCatalog SkycatCatalog;

typedef struct SkycatHits SkycatHits;

typedef struct SkycatRangeSet SkycatRangeSet;

// Summary of one load. `status` is 0 for ok, 1 for failed.
typedef struct SkycatLoadResult {
  uint64_t event_id;
  uint64_t source_rows;
  uint64_t inserted_rows;
  uint64_t rejected_rows;
  uint32_t status;
} SkycatLoadResult;

typedef struct SkycatHit {
  uint64_t obj_id;
  // Arcminutes.
  double distance;
} SkycatHit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *skycat_last_error(void);

// Trixel id containing (ra, dec) at `depth`.
//
// # Safety
// `id_out` must be a valid pointer to writable memory for one `u64`.
enum SkycatStatus skycat_lookup_id(double ra, double dec, uint32_t depth, uint64_t *id_out);

// Writes the NUL-terminated name of `id` into `buf` of `len` bytes.
//
// # Safety
// `buf` must point to `len` writable bytes.
enum SkycatStatus skycat_id_to_name(uint64_t id, char *buf, size_t len);

// Parses a trixel name such as `N0123`.
//
// # Safety
// `name` must be a NUL-terminated string; `id_out` must be writable.
enum SkycatStatus skycat_name_to_id(const char *name, uint64_t *id_out);

// Angular separation in arcminutes.
//
// # Safety
// `arcmin_out` must be writable.
enum SkycatStatus skycat_arc_angle(double ra1,
                                   double dec1,
                                   double ra2,
                                   double dec2,
                                   double *arcmin_out);

// Covers a cap of radius `r` arcmin with id ranges at `depth`.
//
// # Safety
// `set_out` must be writable. The handle is freed with [`skycat_ranges_free`].
enum SkycatStatus skycat_cover_cap(double ra,
                                   double dec,
                                   double r,
                                   uint32_t depth,
                                   size_t budget,
                                   struct SkycatRangeSet **set_out);

// Number of ranges; 0 for NULL.
//
// # Safety
// `set` must be NULL or a live handle.
size_t skycat_ranges_len(const struct SkycatRangeSet *set);

// Inclusive bounds of range `i`.
//
// # Safety
// `set` must be a live handle; `lo` and `hi` must be writable.
enum SkycatStatus skycat_ranges_get(const struct SkycatRangeSet *set,
                                    size_t i,
                                    uint64_t *lo,
                                    uint64_t *hi);

// Whether an index-depth id lies in the set; false for NULL.
//
// # Safety
// `set` must be NULL or a live handle.
bool skycat_ranges_contains(const struct SkycatRangeSet *set, uint64_t id);

// # Safety
// `set` must be NULL or a handle not yet freed.
void skycat_ranges_free(struct SkycatRangeSet *set);

// Creates an empty in-memory catalog.
//
// # Safety
// `cat_out` must be writable. Free with [`skycat_catalog_free`].
enum SkycatStatus skycat_catalog_new(uint32_t index_depth, struct SkycatCatalog **cat_out);

// Opens a catalog file.
//
// # Safety
// `path` must be NUL-terminated; `cat_out` must be writable.
enum SkycatStatus skycat_catalog_open(const char *path, struct SkycatCatalog **cat_out);

// # Safety
// `cat` must be a live handle; `path` must be NUL-terminated.
enum SkycatStatus skycat_catalog_save(const struct SkycatCatalog *cat, const char *path);

// # Safety
// `cat` must be NULL or a handle not yet freed.
void skycat_catalog_free(struct SkycatCatalog *cat);

// 64-bit content digest.
//
// # Safety
// `cat` must be a live handle; `digest_out` must be writable.
enum SkycatStatus skycat_catalog_digest(const struct SkycatCatalog *cat, uint64_t *digest_out);

// # Safety
// `cat` must be a live handle; `rows_out` must be writable.
enum SkycatStatus skycat_catalog_row_count(const struct SkycatCatalog *cat,
                                           enum SkycatTable table,
                                           uint64_t *rows_out);

// Loads a CSV file into `table`. A failed load (unreadable file or header
// mismatch) still returns `Ok` with `status = 1` in the result.
//
// # Safety
// `cat` must be a live handle; `path` NUL-terminated; `result_out` writable.
enum SkycatStatus skycat_catalog_load_csv(struct SkycatCatalog *cat,
                                          enum SkycatTable table,
                                          const char *path,
                                          struct SkycatLoadResult *result_out);

// Undoes a load made through this handle.
//
// # Safety
// `cat` must be a live handle; `removed_out` must be writable.
enum SkycatStatus skycat_catalog_undo(struct SkycatCatalog *cat,
                                      uint64_t event_id,
                                      uint64_t *removed_out);

// Number of integrity violations found by a full validation pass.
//
// # Safety
// `cat` must be a live handle; `count_out` must be writable.
enum SkycatStatus skycat_catalog_validate(const struct SkycatCatalog *cat, uint64_t *count_out);

// Rebuilds the neighbors table at `radius` arcmin.
//
// # Safety
// `cat` must be a live handle; `pairs_out` must be writable.
enum SkycatStatus skycat_build_neighbors(struct SkycatCatalog *cat,
                                         double radius,
                                         uint64_t *pairs_out);

// Objects within `r` arcmin of (ra, dec), nearest first.
//
// # Safety
// `cat` must be a live handle; `hits_out` must be writable. Free the
// result with [`skycat_hits_free`].
enum SkycatStatus skycat_nearby(const struct SkycatCatalog *cat,
                                double ra,
                                double dec,
                                double r,
                                struct SkycatHits **hits_out);

// Galaxies from primary detections without saturated pixels within `r`.
//
// # Safety
// As for [`skycat_nearby`].
enum SkycatStatus skycat_q1(const struct SkycatCatalog *cat,
                            double ra,
                            double dec,
                            double r,
                            struct SkycatHits **hits_out);

// # Safety
// `hits` must be NULL or a live handle.
size_t skycat_hits_len(const struct SkycatHits *hits);

// # Safety
// `hits` must be a live handle; `hit_out` must be writable.
enum SkycatStatus skycat_hits_get(const struct SkycatHits *hits,
                                  size_t i,
                                  struct SkycatHit *hit_out);

// # Safety
// `hits` must be NULL or a handle not yet freed.
void skycat_hits_free(struct SkycatHits *hits);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKYCAT_H */
