#ifndef TOWER_H
#define TOWER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a call.
typedef enum TowerStatus {
  TOWER_STATUS_OK = 0,
  // A required pointer argument was null.
  TOWER_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  TOWER_STATUS_INVALID_UTF8 = 2,
  // The program failed to parse or type-check, or an input was malformed.
  TOWER_STATUS_REJECTED = 3,
  // The program stopped with a runtime error such as Stuck-UnAssign or Leak.
  TOWER_STATUS_RUNTIME = 4,
  // The program could not be compiled to a circuit.
  TOWER_STATUS_COMPILE = 5,
  // An internal error; the library state is unaffected.
  TOWER_STATUS_INTERNAL = 6,
} TowerStatus;

// A checked program with every call inlined into `main`.
typedef struct TowerProgram TowerProgram;

// Gate and qubit counts of the compiled circuit.
typedef struct TowerCost {
  size_t gates;
  size_t qubits;
  // Primitive gates after expansion, or 0 when unknown.
  size_t primitive_gates;
} TowerCost;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Check and inline `source` together with `n_libs` library sources at word
// size `k`. On success `*out` holds a new handle.
//
// # Safety
// `source` and each of the `n_libs` entries of `libs` must be valid
// NUL-terminated strings; `out` must be writable.
enum TowerStatus tower_program_new(const char *source,
                                   const char *const *libs,
                                   size_t n_libs,
                                   uint32_t k,
                                   struct TowerProgram **out);

// Release a program handle. Null is ignored.
//
// # Safety
// `p` must come from [`tower_program_new`] and not have been freed.
void tower_program_free(struct TowerProgram *p);

// Number of parameters of `main`, or 0 for a null handle.
//
// # Safety
// `p` must be null or a live handle.
size_t tower_program_param_count(const struct TowerProgram *p);

// Run `main` on `n_inputs` values written in the command-line notation
// (`5`, `true`, `[1,2,3]`, `(1, null)`). Forward runs print one line per
// parameter and then the result as `name = value`. With `reverse` set,
// the inputs are the final parameters, `output` the result (null for the
// zero value), and the lines are the recovered initial parameters.
//
// # Safety
// `p` must be a live handle, the input strings valid, `output` null or
// valid, and `out` writable. Free `*out` with [`tower_string_free`].
enum TowerStatus tower_program_run(const struct TowerProgram *p,
                                   const char *const *inputs,
                                   size_t n_inputs,
                                   bool reverse,
                                   const char *output,
                                   char **out);

// Compile `main` against the default heap and report its cost.
//
// # Safety
// `p` must be a live handle and `out` writable.
enum TowerStatus tower_program_cost(const struct TowerProgram *p, struct TowerCost *out);

// The inlined Core statement of `main`, or its inverse.
//
// # Safety
// `p` must be a live handle and `out` writable. Free `*out` with
// [`tower_string_free`].
enum TowerStatus tower_program_core_text(const struct TowerProgram *p, bool inverted, char **out);

// Message describing the last failure on this thread, or null after a
// success. The pointer stays valid until the next call on this thread.
const char *tower_last_error(void);

// Release a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void tower_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOWER_H */
