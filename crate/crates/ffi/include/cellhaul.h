#ifndef CELLHAUL_H
#define CELLHAUL_H

#include <stddef.h>
#include <stdint.h>

typedef enum cellhaul_status {
  CELLHAUL_STATUS_OK = 0,
  CELLHAUL_STATUS_NULL_POINTER = 1,
  CELLHAUL_STATUS_INVALID_UTF8 = 2,
  CELLHAUL_STATUS_IO = 3,
  CELLHAUL_STATUS_SCHEMA = 4,
  CELLHAUL_STATUS_VALIDATION = 5,
  CELLHAUL_STATUS_CONFIG = 6,
  CELLHAUL_STATUS_INFEASIBLE = 7,
  CELLHAUL_STATUS_GUARD_EXCEEDED = 8,
  CELLHAUL_STATUS_OUT_OF_RANGE = 9,
  CELLHAUL_STATUS_INTERNAL = 10,
} cellhaul_status;

// A validated instance with its derived coverage and backhaul tables.
typedef struct cellhaul_instance cellhaul_instance;

// A solver run: the frontier plus bounds and traces.
typedef struct cellhaul_report cellhaul_report;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty when none. The
// pointer stays valid until the next failing call on the same thread.
const char *cellhaul_last_error(void);

// Library version as a static NUL-terminated string.
const char *cellhaul_version(void);

// Load an instance JSON file.
//
// # Safety
// `path` must be NULL or a NUL-terminated string; `out` must be NULL or
// point to writable storage for one handle.
enum cellhaul_status cellhaul_instance_load(const char *path, struct cellhaul_instance **out);

// Parse an instance from JSON text.
//
// # Safety
// As for [`cellhaul_instance_load`].
enum cellhaul_status cellhaul_instance_from_json(const char *json, struct cellhaul_instance **out);

// Generate a random instance with default radio and traffic parameters.
//
// # Safety
// `out` must be NULL or point to writable storage for one handle.
enum cellhaul_status cellhaul_instance_generate(double width_m,
                                                double height_m,
                                                double subarea_side_m,
                                                size_t n_sc,
                                                size_t n_ban,
                                                uint64_t seed,
                                                struct cellhaul_instance **out);

// Write the instance as JSON.
//
// # Safety
// `instance` must be NULL or a live handle; `path` NULL or NUL-terminated.
enum cellhaul_status cellhaul_instance_save(const struct cellhaul_instance *instance,
                                            const char *path);

// Subarea count of the planning grid, or 0 for a NULL handle.
//
// # Safety
// `instance` must be NULL or a live handle.
size_t cellhaul_instance_subarea_count(const struct cellhaul_instance *instance);

// # Safety
// `instance` must be NULL or a handle not yet freed.
void cellhaul_instance_free(struct cellhaul_instance *instance);

// Run the two-level ε-constraint solver. `config_json` may be NULL for
// defaults.
//
// # Safety
// `instance` must be NULL or a live handle, `config_json` NULL or
// NUL-terminated, `out` NULL or writable.
enum cellhaul_status cellhaul_solve(const struct cellhaul_instance *instance,
                                    const char *config_json,
                                    struct cellhaul_report **out);

// Run the single-level tabu comparator.
//
// # Safety
// As for [`cellhaul_solve`].
enum cellhaul_status cellhaul_solve_single_tabu(const struct cellhaul_instance *instance,
                                                const char *config_json,
                                                struct cellhaul_report **out);

// Frontier size, or 0 for a NULL handle.
//
// # Safety
// `report` must be NULL or a live handle.
size_t cellhaul_report_len(const struct cellhaul_report *report);

// Objectives of frontier point `index` (ascending cost).
//
// # Safety
// `report` must be NULL or a live handle; `cost` and `uncovered` NULL or
// writable.
enum cellhaul_status cellhaul_report_point(const struct cellhaul_report *report,
                                           size_t index,
                                           double *cost,
                                           uint32_t *uncovered);

// Write the report directory (frontier, solutions, bounds, trace, config,
// manifest).
//
// # Safety
// `report` must be NULL or a live handle; `dir` NULL or NUL-terminated.
enum cellhaul_status cellhaul_report_write(const struct cellhaul_report *report, const char *dir);

// # Safety
// `report` must be NULL or a handle not yet freed.
void cellhaul_report_free(struct cellhaul_report *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CELLHAUL_H */
