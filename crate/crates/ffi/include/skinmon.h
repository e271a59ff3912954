#ifndef SKINMON_H
#define SKINMON_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum SkinmonStatus {
  SKINMON_STATUS_OK = 0,
  SKINMON_STATUS_NULL_ARGUMENT = 1,
  SKINMON_STATUS_INVALID_UTF8 = 2,
  SKINMON_STATUS_INVALID_CONFIG = 3,
  SKINMON_STATUS_IO = 4,
  SKINMON_STATUS_BUFFER_TOO_SMALL = 5,
  SKINMON_STATUS_PANIC = 6,
} SkinmonStatus;

/*
 Opaque simulation handle.
 */
typedef struct SkinmonSim SkinmonSim;

/*
 Measurements of the most recent round.
 */
typedef struct SkinmonRoundStats {
  /*
   Rounds completed so far.
   */
  uint32_t rounds_done;
  double energy_nj;
  double cum_energy_nj;
  uint32_t dead_nodes;
  uint32_t active_nodes;
  uint64_t status_msgs;
  uint64_t location_msgs;
  uint64_t change_msgs;
  uint64_t relay_msgs;
  uint32_t root_count;
} SkinmonRoundStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Creates a simulation from a config document (empty string for defaults).

 # Safety
 `config` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum SkinmonStatus skinmon_sim_new(const char *config, struct SkinmonSim **out);

/*
 Releases a handle. Null is ignored.

 # Safety
 `sim` must come from `skinmon_sim_new` and not be used afterwards.
 */
void skinmon_sim_free(struct SkinmonSim *sim);

/*
 Advances the simulation by `rounds` rounds.

 # Safety
 `sim` must be a live handle.
 */
enum SkinmonStatus skinmon_sim_step(struct SkinmonSim *sim, uint32_t rounds);

/*
 Advances until the configured round count is reached.

 # Safety
 `sim` must be a live handle.
 */
enum SkinmonStatus skinmon_sim_run(struct SkinmonSim *sim);

/*
 Rounds completed so far, or 0 for a null handle.

 # Safety
 `sim` must be a live handle or null.
 */
uint32_t skinmon_sim_round(const struct SkinmonSim *sim);

/*
 Fills `out` with the latest round's measurements (all zero before the first step).

 # Safety
 `sim` must be a live handle and `out` a valid pointer.
 */
enum SkinmonStatus skinmon_sim_stats(const struct SkinmonSim *sim, struct SkinmonRoundStats *out);

/*
 Copies the latest round's root ids into `buf` and their count into `len`.

 With `buf` null or `cap` too small, only `len` is written and
 `BufferTooSmall` is returned.

 # Safety
 `sim` must be a live handle, `len` a valid pointer and `buf` valid for `cap` elements.
 */
enum SkinmonStatus skinmon_sim_root_ids(const struct SkinmonSim *sim,
                                        uint32_t *buf,
                                        size_t cap,
                                        size_t *len);

/*
 Writes the metrics CSV for all rounds stepped so far.

 # Safety
 `sim` must be a live handle and `path` a valid NUL-terminated string.
 */
enum SkinmonStatus skinmon_sim_write_metrics(const struct SkinmonSim *sim, const char *path);

/*
 Writes an SVG of the current state.

 # Safety
 `sim` must be a live handle and `path` a valid NUL-terminated string.
 */
enum SkinmonStatus skinmon_sim_write_snapshot(const struct SkinmonSim *sim, const char *path);

/*
 Message for the last failed call on this thread, or null. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *skinmon_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *skinmon_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKINMON_H */
