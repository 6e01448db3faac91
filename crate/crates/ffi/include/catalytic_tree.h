#ifndef CATALYTIC_TREE_H
#define CATALYTIC_TREE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CtStatus {
  CT_STATUS_OK = 0,
  CT_STATUS_NULL_POINTER = 1,
  CT_STATUS_INVALID_ARGUMENT = 2,
  CT_STATUS_PARSE = 3,
  CT_STATUS_INFEASIBLE = 4,
  CT_STATUS_NOT_RESTORED = 5,
  CT_STATUS_BUFFER_TOO_SMALL = 6,
  CT_STATUS_INTERNAL = 7,
  CT_STATUS_PANIC = 8,
} CtStatus;

typedef enum CtTape {
  CT_TAPE_ZEROS = 0,
  CT_TAPE_MAX = 1,
  CT_TAPE_ALTERNATING = 2,
  // Seeded from the `seed` argument.
  CT_TAPE_RANDOM = 3,
} CtTape;

// A matching-vector family.
typedef struct CtFamily CtFamily;

// A tree evaluation instance.
typedef struct CtInstance CtInstance;

typedef struct CtOutcome {
  uint64_t value;
  uint64_t oracle_calls;
  uint64_t peak_free_bits;
  uint64_t catalytic_bits;
  // 1 when every register came back bit-exact.
  uint8_t restored;
} CtOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to fit) and returns the full message length without the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t ct_last_error(char *buf, size_t len);

// # Safety
// `out` must be null or valid for one pointer write.
enum CtStatus ct_instance_generate(size_t h,
                                   uint32_t ell,
                                   size_t fanin,
                                   uint64_t seed,
                                   struct CtInstance **out);

// Parses the text instance format.
//
// # Safety
// `text` must be a NUL-terminated string; `out` valid for one pointer write.
enum CtStatus ct_instance_parse(const char *text, struct CtInstance **out);

// Writes the text format into `buf` (NUL-terminated) and its length into
// `out_len`. With a short buffer nothing is written besides `out_len` and
// `BufferTooSmall` is returned.
//
// # Safety
// `inst` must come from this library; `buf` must hold `len` bytes or be null.
enum CtStatus ct_instance_serialize(const struct CtInstance *inst,
                                    char *buf,
                                    size_t len,
                                    size_t *out_len);

// # Safety
// `inst` must come from this library and not be used afterwards.
void ct_instance_free(struct CtInstance *inst);

// # Safety
// `inst` must come from this library; `out_value` valid for one write.
enum CtStatus ct_eval_bruteforce(const struct CtInstance *inst, uint64_t *out_value);

// Evaluates catalytically over the given primes. Fanin above 2 is reduced
// first. A tape that fails to restore yields `NotRestored` with `out`
// filled in as far as known.
//
// # Safety
// `inst` must come from this library; `primes` must hold `n_primes` values;
// `out` valid for one write.
enum CtStatus ct_eval_catalytic(const struct CtInstance *inst,
                                const uint64_t *primes,
                                size_t n_primes,
                                enum CtTape tape,
                                uint64_t seed,
                                struct CtOutcome *out);

// # Safety
// `primes` must hold `n_primes` values; `out` valid for one pointer write.
enum CtStatus ct_family_new(const uint64_t *primes,
                            size_t n_primes,
                            uint32_t ell,
                            struct CtFamily **out);

// # Safety
// `fam` must come from this library and not be used afterwards.
void ct_family_free(struct CtFamily *fam);

// Family size `N` and dimension `d`.
//
// # Safety
// `fam` must come from this library; the outputs valid for one write each.
enum CtStatus ct_family_shape(const struct CtFamily *fam, uint64_t *out_size, size_t *out_dim);

// Checks every pair; `out_passed` gets 1 when all axioms hold.
//
// # Safety
// `fam` must come from this library; `out_passed` valid for one write.
enum CtStatus ct_family_verify(const struct CtFamily *fam, uint8_t *out_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CATALYTIC_TREE_H */
