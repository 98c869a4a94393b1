#ifndef CPMP_DLTS_H
#define CPMP_DLTS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpmpStatus {
  CPMP_STATUS_OK = 0,
  CPMP_STATUS_NULL_POINTER = 1,
  CPMP_STATUS_INVALID_ARGUMENT = 2,
  CPMP_STATUS_PARSE = 3,
  CPMP_STATUS_IO = 4,
  CPMP_STATUS_SHAPE_MISMATCH = 5,
  CPMP_STATUS_VERSION_MISMATCH = 6,
  CPMP_STATUS_ILLEGAL_MOVE = 7,
  CPMP_STATUS_CONFIG = 8,
  /**
   * A Rust panic was caught at the boundary.
   */
  CPMP_STATUS_INTERNAL = 9,
} CpmpStatus;

typedef enum CpmpStrategy {
  CPMP_STRATEGY_DFS = 0,
  CPMP_STRATEGY_LDS = 1,
  CPMP_STRATEGY_WBS = 2,
} CpmpStrategy;

typedef enum CpmpPruning {
  CPMP_PRUNING_CONSTANT = 0,
  CPMP_PRUNING_QUADRATIC = 1,
  CPMP_PRUNING_LOG = 2,
} CpmpPruning;

typedef struct CpmpBay CpmpBay;

typedef struct CpmpNetwork CpmpNetwork;

/**
 * Outcome of an oracle or heuristic search.
 */
typedef struct CpmpResult CpmpResult;

/**
 * Search settings. `time_limit <= 0` means unlimited; `md0 == 0` uses
 * twice the container count.
 */
typedef struct CpmpSearchConfig {
  enum CpmpStrategy strategy;
  enum CpmpPruning pruning;
  size_t k;
  double d;
  double p;
  bool reactive_md;
  bool binning;
  size_t bins;
  size_t z;
  double alpha;
  double gamma;
  double time_limit;
  size_t md0;
} CpmpSearchConfig;

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *cpmp_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *cpmp_version(void);

/**
 * Builds a bay from a stack-major grid of `stacks * tiers` groups, tier 0
 * at the bottom of each stack and 0 marking an empty slot.
 *
 * # Safety
 * `grid` must point to `stacks * tiers` readable values and `out` must be
 * a valid pointer.
 */
enum CpmpStatus cpmp_bay_new(size_t stacks,
                             size_t tiers,
                             const uint16_t *grid,
                             struct CpmpBay **out);

/**
 * Parses a bay in the `CPMP v1` text format.
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` a valid pointer.
 */
enum CpmpStatus cpmp_bay_parse(const char *text, struct CpmpBay **out);

/**
 * # Safety
 * `bay` must be null or a handle from this library not yet freed.
 */
void cpmp_bay_free(struct CpmpBay *bay);

/**
 * # Safety
 * `bay` must be a live handle.
 */
size_t cpmp_bay_stacks(const struct CpmpBay *bay);

/**
 * # Safety
 * `bay` must be a live handle.
 */
size_t cpmp_bay_tiers(const struct CpmpBay *bay);

/**
 * Containers that sit above a smaller group in their stack.
 *
 * # Safety
 * `bay` must be a live handle.
 */
size_t cpmp_bay_blocking_count(const struct CpmpBay *bay);

/**
 * # Safety
 * `bay` must be a live handle.
 */
bool cpmp_bay_is_sorted(const struct CpmpBay *bay);

/**
 * Moves the top container of `from` onto `to` in place.
 *
 * # Safety
 * `bay` must be a live handle.
 */
enum CpmpStatus cpmp_bay_apply_move(struct CpmpBay *bay, size_t from, size_t to);

/**
 * Loads a weights file written by `cpmp-dlts train`.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum CpmpStatus cpmp_network_load(const char *path, struct CpmpNetwork **out);

/**
 * # Safety
 * `net` must be null or a handle from this library not yet freed.
 */
void cpmp_network_free(struct CpmpNetwork *net);

/**
 * Solves `bay` optimally. `time_limit <= 0` means unlimited; after a
 * timeout the result holds a heuristic solution and is not complete.
 *
 * # Safety
 * `bay` must be a live handle and `out` a valid pointer.
 */
enum CpmpStatus cpmp_oracle_solve(const struct CpmpBay *bay,
                                  double time_limit,
                                  struct CpmpResult **out);

/**
 * Default settings of the `solve-dlts` command.
 */
struct CpmpSearchConfig cpmp_search_config_default(void);

/**
 * Runs a guided tree search. A null `policy` ranks all moves equally; a
 * null `value` disables value bounds (and is rejected by WBS).
 *
 * # Safety
 * Handles must be live or null where allowed; `config` and `out` must be
 * valid pointers.
 */
enum CpmpStatus cpmp_search(const struct CpmpBay *bay,
                            const struct CpmpNetwork *policy,
                            const struct CpmpNetwork *value,
                            const struct CpmpSearchConfig *config,
                            struct CpmpResult **out);

/**
 * # Safety
 * `res` must be null or a handle from this library not yet freed.
 */
void cpmp_result_free(struct CpmpResult *res);

/**
 * # Safety
 * `res` must be a live handle.
 */
bool cpmp_result_found(const struct CpmpResult *res);

/**
 * Number of moves, 0 when no solution was found.
 *
 * # Safety
 * `res` must be a live handle.
 */
size_t cpmp_result_len(const struct CpmpResult *res);

/**
 * # Safety
 * `res` must be a live handle.
 */
uint64_t cpmp_result_nodes_opened(const struct CpmpResult *res);

/**
 * Oracle: the solution is proven optimal. Search: the pruned tree was
 * exhausted within the time limit.
 *
 * # Safety
 * `res` must be a live handle.
 */
bool cpmp_result_complete(const struct CpmpResult *res);

/**
 * Move `index` of the solution.
 *
 * # Safety
 * `res` must be a live handle; `from` and `to` must be valid pointers.
 */
enum CpmpStatus cpmp_result_move(const struct CpmpResult *res,
                                 size_t index,
                                 size_t *from,
                                 size_t *to);

#endif  /* CPMP_DLTS_H */
