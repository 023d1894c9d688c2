#ifndef DISKCONF_H
#define DISKCONF_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible entry point.
typedef enum DiskconfStatus {
  DISKCONF_STATUS_OK = 0,
  DISKCONF_STATUS_NULL_ARGUMENT = 1,
  DISKCONF_STATUS_UTF8 = 2,
  DISKCONF_STATUS_IO = 3,
  DISKCONF_STATUS_PARSE = 4,
  DISKCONF_STATUS_INVALID_MESH = 5,
  DISKCONF_STATUS_NOT_DISK_TOPOLOGY = 6,
  DISKCONF_STATUS_SOLVER_FAILED = 7,
  DISKCONF_STATUS_FLIPPED_FACES = 8,
  DISKCONF_STATUS_INVALID_ARGUMENT = 9,
  DISKCONF_STATUS_BUFFER_TOO_SMALL = 10,
  DISKCONF_STATUS_INTERNAL = 11,
} DiskconfStatus;

// Opaque triangle mesh handle.
typedef struct DiskconfMesh DiskconfMesh;

// Opaque parameterization handle (per-vertex uv over the source mesh).
typedef struct DiskconfParam DiskconfParam;

// Pipeline options; obtain defaults from [`diskconf_options_default`].
typedef struct DiskconfOptions {
  bool skip_south_pole;
  // Relative residual tolerance of the linear solves, in (0, 1e-4].
  double solver_tolerance;
} DiskconfOptions;

// Quality summary of a parameterization.
typedef struct DiskconfMetrics {
  double mean_abs_distortion_deg;
  double sd_abs_distortion_deg;
  uint64_t flipped_faces;
  // Maximal dilation; +inf when some |mu| >= 1.
  double max_dilation;
  bool boundary_simple;
} DiskconfMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread, or an empty
// string. The pointer stays valid until the next failing call on the same
// thread.
const char *diskconf_last_error(void);

// Library version as a static string.
const char *diskconf_version(void);

struct DiskconfOptions diskconf_options_default(void);

// Load an OBJ or OFF mesh (format detected from the extension/content).
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum DiskconfStatus diskconf_mesh_load(const char *path, struct DiskconfMesh **out);

// Build a mesh from arrays: `vertices` is 3*n_vertices doubles (xyz),
// `faces` is 3*n_faces zero-based indices.
//
// # Safety
// The arrays must match the stated lengths; `out` must be valid.
enum DiskconfStatus diskconf_mesh_create(const double *vertices,
                                         uint64_t n_vertices,
                                         const uint64_t *faces,
                                         uint64_t n_faces,
                                         struct DiskconfMesh **out);

// # Safety
// `mesh` must come from a load/create call and not be freed twice.
void diskconf_mesh_free(struct DiskconfMesh *mesh);

// # Safety
// `mesh` must be a valid handle.
uint64_t diskconf_mesh_vertex_count(const struct DiskconfMesh *mesh);

// # Safety
// `mesh` must be a valid handle.
uint64_t diskconf_mesh_face_count(const struct DiskconfMesh *mesh);

// Compute the disk conformal parameterization. `options` may be null for
// defaults.
//
// # Safety
// `mesh` must be a valid handle and `out` a valid pointer.
enum DiskconfStatus diskconf_parameterize(const struct DiskconfMesh *mesh,
                                          const struct DiskconfOptions *options,
                                          struct DiskconfParam **out);

// # Safety
// `param` must come from `diskconf_parameterize` and not be freed twice.
void diskconf_param_free(struct DiskconfParam *param);

// Copy the uv coordinates into `out` as interleaved (u, v) pairs.
// `capacity` is the number of doubles available; it must be at least
// twice the vertex count.
//
// # Safety
// `out` must point to at least `capacity` doubles.
enum DiskconfStatus diskconf_param_uv(const struct DiskconfParam *param,
                                      double *out,
                                      uint64_t capacity);

// Number of linear systems factored while computing `param`.
//
// # Safety
// `param` must be a valid handle.
uint64_t diskconf_param_systems_factored(const struct DiskconfParam *param);

// Evaluate distortion/bijectivity metrics of `param` against `mesh`.
//
// # Safety
// All handles must be valid; `out` must point to a `DiskconfMetrics`.
enum DiskconfStatus diskconf_param_metrics(const struct DiskconfMesh *mesh,
                                           const struct DiskconfParam *param,
                                           struct DiskconfMetrics *out);

// Write an OBJ with `vt` records for the parameterized mesh.
//
// # Safety
// Handles must be valid; `path` must be a NUL-terminated string.
enum DiskconfStatus diskconf_param_write_obj(const struct DiskconfMesh *mesh,
                                             const struct DiskconfParam *param,
                                             const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DISKCONF_H */
