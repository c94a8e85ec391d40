#ifndef EVOHOM_H
#define EVOHOM_H

#include <stddef.h>
#include <stdint.h>

/*
 Status codes; the non-zero values match the command-line exit codes.
 */
typedef enum EvohomStatus {
  EVOHOM_STATUS_OK = 0,
  EVOHOM_STATUS_USAGE = 1,
  EVOHOM_STATUS_INPUT = 2,
  EVOHOM_STATUS_NUMERICAL = 3,
  EVOHOM_STATUS_BUDGET = 4,
  /*
   A null pointer was passed where an object was required.
   */
  EVOHOM_STATUS_NULL_POINTER = 5,
  /*
   An internal panic was caught.
   */
  EVOHOM_STATUS_INTERNAL = 6,
} EvohomStatus;

/*
 A set of bars in one dimension.
 */
typedef struct EvohomBarcode EvohomBarcode;

/*
 Result of perturbing one node.
 */
typedef struct EvohomResult EvohomResult;

/*
 A prepared network of coupled oscillators.
 */
typedef struct EvohomSystem EvohomSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or null. The pointer
 stays valid until the next call on the same thread.
 */
const char *evohom_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *evohom_version(void);

/*
 Builds a system from `n_points` points of `dim` coordinates each
 (row-major). `config` is configuration text in the command-line format,
 or null for the defaults.

 # Safety
 `points` must hold `n_points * dim` doubles; `config` must be null or a
 NUL-terminated string; `out` must be writable.
 */
enum EvohomStatus evohom_system_new(const double *points,
                                    size_t n_points,
                                    size_t dim,
                                    const char *config,
                                    struct EvohomSystem **out);

/*
 # Safety
 `system` must be null or a handle from [`evohom_system_new`] not yet freed.
 */
void evohom_system_free(struct EvohomSystem *system);

/*
 Number of nodes, or 0 for a null handle.

 # Safety
 `system` must be null or a live handle.
 */
size_t evohom_system_nodes(const struct EvohomSystem *system);

/*
 Perturbs node `node` (zero-based) and computes its barcodes and features.

 # Safety
 `system` must be a live handle and `out` writable.
 */
enum EvohomStatus evohom_node_eh(const struct EvohomSystem *system,
                                 size_t node,
                                 struct EvohomResult **out);

/*
 # Safety
 `result` must be null or a live handle.
 */
void evohom_result_free(struct EvohomResult *result);

/*
 Writes the nine features, in the order `EH_inf_0, EH_inf_1, EH_inf_2,
 EH_1_0, ..., EH_2_2`, to `out`.

 # Safety
 `result` must be a live handle and `out` must have room for 9 doubles.
 */
enum EvohomStatus evohom_result_features(const struct EvohomResult *result, double *out);

/*
 Name of feature column `index` (0..9), or null.
 */
const char *evohom_feature_name(size_t index);

/*
 Global synchronization time, or NaN for a null handle.

 # Safety
 `result` must be null or a live handle.
 */
double evohom_result_t_sync(const struct EvohomResult *result);

/*
 Size of the affected set, or 0 for a null handle.

 # Safety
 `result` must be null or a live handle.
 */
size_t evohom_result_affected_count(const struct EvohomResult *result);

/*
 Copies the dimension-`dim` bars into `births`/`deaths` (each of length
 `capacity`) and stores the bar count in `count`. When `capacity` is too
 small nothing is copied and only `count` is set, so callers can size
 their buffers with a first call using `capacity = 0`.

 # Safety
 `result` must be a live handle, `count` writable, and the buffers valid
 for `capacity` doubles when `capacity > 0`.
 */
enum EvohomStatus evohom_result_bars(const struct EvohomResult *result,
                                     size_t dim,
                                     double *births,
                                     double *deaths,
                                     size_t capacity,
                                     size_t *count);

/*
 The result as JSON. Release the string with [`evohom_string_free`].

 # Safety
 `result` must be a live handle and `out` writable.
 */
enum EvohomStatus evohom_result_json(const struct EvohomResult *result, char **out);

/*
 # Safety
 `s` must be null or a string returned by this library.
 */
void evohom_string_free(char *s);

/*
 Barcode from `n` finite `(births[k], deaths[k])` pairs with
 `births[k] <= deaths[k]`.

 # Safety
 `births` and `deaths` must hold `n` doubles; `out` must be writable.
 */
enum EvohomStatus evohom_barcode_new(const double *births,
                                     const double *deaths,
                                     size_t n,
                                     struct EvohomBarcode **out);

/*
 # Safety
 `barcode` must be null or a live handle.
 */
void evohom_barcode_free(struct EvohomBarcode *barcode);

/*
 p-Wasserstein distance for finite `p >= 1`, bottleneck distance for
 `p = INFINITY`.

 # Safety
 `a` and `b` must be live handles and `out` writable.
 */
enum EvohomStatus evohom_distance(const struct EvohomBarcode *a,
                                  const struct EvohomBarcode *b,
                                  double p,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVOHOM_H */
