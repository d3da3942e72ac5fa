#ifndef EDCRIT_H
#define EDCRIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EdcritStatus {
  EDCRIT_STATUS_OK = 0,
  EDCRIT_STATUS_NULL_POINTER = 1,
  EDCRIT_STATUS_INVALID_INPUT = 2,
  EDCRIT_STATUS_SHAPE_MISMATCH = 3,
  EDCRIT_STATUS_OFF_VARIETY = 4,
  EDCRIT_STATUS_SINGULAR_POINT = 5,
  EDCRIT_STATUS_NOT_CONVERGED = 6,
  EDCRIT_STATUS_SEARCH_TOO_LARGE = 7,
  EDCRIT_STATUS_OUTSIDE_CERTIFIED_REGIME = 8,
  EDCRIT_STATUS_COMPOSITE_MODULUS = 9,
  EDCRIT_STATUS_BUFFER_TOO_SMALL = 10,
  EDCRIT_STATUS_PANIC = 11,
} EdcritStatus;

typedef struct EdcritModel EdcritModel;

typedef struct EdcritReport EdcritReport;

typedef struct EdcritTensor EdcritTensor;

typedef struct EdcritVariety EdcritVariety;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or NULL. Owned by the
// library.
const char *edcrit_last_error(void);

// Library version as a static string.
const char *edcrit_version(void);

// # Safety
// `s` must be NULL or a string returned by this library.
void edcrit_string_free(char *s);

// Variety from its JSON description, e.g.
// `{"type":"matrix_rank_at_most","p":3,"q":3,"k":1}`.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum EdcritStatus edcrit_variety_from_json(const char *json, struct EdcritVariety **out);

// `p x q` matrices of rank at most `k`.
//
// # Safety
// `out` must be writable.
enum EdcritStatus edcrit_variety_matrix_rank(size_t p,
                                             size_t q,
                                             size_t k,
                                             struct EdcritVariety **out);

// `{ y : sum a_i y_i^2 = 0 }`.
//
// # Safety
// `coeffs` must point to `len` doubles; `out` must be writable.
enum EdcritStatus edcrit_variety_quadric_cone(const double *coeffs,
                                              size_t len,
                                              struct EdcritVariety **out);

// Rank-one tensors of the given shape.
//
// # Safety
// `shape` must point to `order` sizes; `out` must be writable.
enum EdcritStatus edcrit_variety_tensor_rank_one(const size_t *shape,
                                                 size_t order,
                                                 struct EdcritVariety **out);

// # Safety
// `v` must be NULL or a handle from this library, freed at most once.
void edcrit_variety_free(struct EdcritVariety *v);

// Dimension of the ambient space of `v`.
//
// # Safety
// `v` must be a live handle; `out` must be writable.
enum EdcritStatus edcrit_variety_ambient_dim(const struct EdcritVariety *v, size_t *out);

// Critical points of the distance from `x` to `v`.
//
// # Safety
// `v` must be a live handle, `x` must point to `len` doubles and `out`
// must be writable.
enum EdcritStatus edcrit_critical_set(const struct EdcritVariety *v,
                                      const double *x,
                                      size_t len,
                                      size_t starts,
                                      uint64_t seed,
                                      struct EdcritReport **out);

// Number of critical points on the smooth locus.
//
// # Safety
// `r` must be a live handle; `out` must be writable.
enum EdcritStatus edcrit_report_point_count(const struct EdcritReport *r, size_t *out);

// Number of critical points on proper singular strata.
//
// # Safety
// `r` must be a live handle; `out` must be writable.
enum EdcritStatus edcrit_report_singular_count(const struct EdcritReport *r, size_t *out);

// Distance from the query to the variety.
//
// # Safety
// `r` must be a live handle; `out` must be writable.
enum EdcritStatus edcrit_report_best_distance(const struct EdcritReport *r, double *out);

// Copies the nearest critical point into `buf`; fails with
// `BufferTooSmall` (and writes the needed length to `written`) when `len`
// is too small.
//
// # Safety
// `r` must be a live handle, `buf` must hold `len` doubles and `written`
// must be writable.
enum EdcritStatus edcrit_report_best_point(const struct EdcritReport *r,
                                           double *buf,
                                           size_t len,
                                           size_t *written);

// Full report as JSON; free with [`edcrit_string_free`].
//
// # Safety
// `r` must be a live handle; `out` must be writable.
enum EdcritStatus edcrit_report_to_json(const struct EdcritReport *r, char **out);

// # Safety
// `r` must be NULL or a handle from this library, freed at most once.
void edcrit_report_free(struct EdcritReport *r);

// Dense tensor with row-major `data`.
//
// # Safety
// `shape` must point to `order` sizes, `data` to `len` doubles, and `out`
// must be writable.
enum EdcritStatus edcrit_tensor_new(const size_t *shape,
                                    size_t order,
                                    const double *data,
                                    size_t len,
                                    struct EdcritTensor **out);

// # Safety
// `t` must be NULL or a handle from this library, freed at most once.
void edcrit_tensor_free(struct EdcritTensor *t);

// Best rank-`k` approximation found from `starts` seeded starts.
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum EdcritStatus edcrit_best_rank_k(const struct EdcritTensor *t,
                                     size_t k,
                                     size_t starts,
                                     uint64_t seed,
                                     struct EdcritModel **out);

// `||T - model||`.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum EdcritStatus edcrit_model_objective(const struct EdcritModel *m, double *out);

// 1 when every term has collinear factors, else 0.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum EdcritStatus edcrit_model_is_symmetric(const struct EdcritModel *m, int32_t *out);

// Model as JSON; free with [`edcrit_string_free`].
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum EdcritStatus edcrit_model_to_json(const struct EdcritModel *m, char **out);

// # Safety
// `m` must be NULL or a handle from this library, freed at most once.
void edcrit_model_free(struct EdcritModel *m);

// Kruskal rank of the `rows x cols` matrix stored column-major.
//
// # Safety
// `data` must point to `rows * cols` doubles; `out` must be writable.
enum EdcritStatus edcrit_krank(const double *data, size_t rows, size_t cols, size_t *out);

// Term-count bound `N(m, d)` as the reduced fraction `num / den`.
//
// # Safety
// `num` and `den` must be writable.
enum EdcritStatus edcrit_n_bound(size_t m, size_t d, int64_t *num, int64_t *den);

// Rank and symmetric rank of `e1 (x) e2 + e2 (x) e1` over GF(2).
//
// # Safety
// `rank` and `srank` must be writable.
enum EdcritStatus edcrit_gf_example64(size_t *rank, size_t *srank);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDCRIT_H */
