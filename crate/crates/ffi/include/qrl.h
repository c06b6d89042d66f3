#ifndef QRL_H
#define QRL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call.
 */
typedef enum QrlStatus {
  QRL_STATUS_OK = 0,
  QRL_STATUS_NULL_POINTER = 1,
  QRL_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad configuration, suite id or argument.
   */
  QRL_STATUS_CONFIG = 3,
  /**
   * Malformed maze, label space or history.
   */
  QRL_STATUS_INVALID_INPUT = 4,
  /**
   * The search budget ran out without a verified winner.
   */
  QRL_STATUS_NO_WINNER = 5,
  /**
   * Any other library error.
   */
  QRL_STATUS_FAILURE = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  QRL_STATUS_PANIC = 7,
} QrlStatus;

/**
 * Which deliberate defect to build into the hijack protocol.
 */
typedef enum QrlHijackMutation {
  QRL_HIJACK_MUTATION_NONE = 0,
  QRL_HIJACK_MUTATION_KEEP_PHI_MINUS = 1,
  QRL_HIJACK_MUTATION_NO_KICKBACK = 2,
} QrlHijackMutation;

/**
 * Opaque maze handle.
 */
typedef struct QrlMaze QrlMaze;

/**
 * Result of [`qrl_grover_search`].
 */
typedef struct QrlGroverResult {
  /**
   * Encoded action sequence of the winner; valid when `found` is true.
   */
  uint64_t winner;
  bool found;
  /**
   * Coherent queries plus classical checks, each billed as one game.
   */
  uint64_t oracle_games;
  uint64_t rounds;
} QrlGroverResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *qrl_last_error_message(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` is null or came from this library and has not been freed.
 */
void qrl_string_free(char *s);

/**
 * Builds the unique-path line maze with `n` actions, path length `m` and
 * epoch length `m_max`.
 *
 * # Safety
 * `out` is a valid pointer.
 */
enum QrlStatus qrl_maze_line(uintptr_t n, uintptr_t m, uintptr_t m_max, struct QrlMaze **out);

/**
 * Loads a maze from a JSON file.
 *
 * # Safety
 * `path` is a NUL-terminated string and `out` a valid pointer.
 */
enum QrlStatus qrl_maze_load(const char *path, struct QrlMaze **out);

/**
 * # Safety
 * `maze` is null or came from a maze constructor and has not been freed.
 */
void qrl_maze_free(struct QrlMaze *maze);

/**
 * Number of action sequences (search items) and of winning ones.
 *
 * # Safety
 * `maze` is a live handle; `items` and `winners` are valid pointers.
 */
enum QrlStatus qrl_maze_counts(const struct QrlMaze *maze, uint64_t *items, uint64_t *winners);

/**
 * Grover search over the maze's action sequences with an unknown winner
 * count and a budget of `k·⌈√N⌉` oracle games.
 *
 * # Safety
 * `maze` is a live handle and `out` a valid pointer.
 */
enum QrlStatus qrl_grover_search(const struct QrlMaze *maze,
                                 uint64_t k,
                                 uint64_t seed,
                                 struct QrlGroverResult *out);

/**
 * Frobenius distance between the oracle synthesized by hijacking and
 * scavenging on the two-action line maze of length `m` and the ideal
 * phase-flip oracle.
 *
 * # Safety
 * `out` is a valid pointer.
 */
enum QrlStatus qrl_hijack_distance(uintptr_t m, enum QrlHijackMutation mutation, double *out);

/**
 * Runs the experiment described by `config_json`, writes its outputs when
 * the config names an output directory, and returns the summary as JSON.
 *
 * # Safety
 * `config_json` is a NUL-terminated string and `summary_json` a valid pointer.
 */
enum QrlStatus qrl_run_experiment(const char *config_json, char **summary_json);

/**
 * Runs the acceptance criteria in `suite` (`"all"` or `"1,4,8"`), sets
 * `passed`, and returns the report as JSON.
 *
 * # Safety
 * `suite` is a NUL-terminated string; `passed` and `report_json` are valid pointers.
 */
enum QrlStatus qrl_verify(const char *suite, bool *passed, char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QRL_H */
