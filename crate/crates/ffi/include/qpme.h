#ifndef QPME_H
#define QPME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum QpmeStatus {
  QPME_STATUS_OK = 0,
  QPME_STATUS_NULL_POINTER = 1,
  QPME_STATUS_INVALID_ARGUMENT = 2,
  QPME_STATUS_DIMENSION_MISMATCH = 3,
  QPME_STATUS_NUMERICAL = 4,
  QPME_STATUS_PANIC = 5,
} QpmeStatus;

typedef enum QpmeStateKind {
  QPME_STATE_KIND_FERRO = 0,
  QPME_STATE_KIND_NEEL = 1,
} QpmeStateKind;

typedef enum QpmeTimeKind {
  QPME_TIME_KIND_REAL = 0,
  QPME_TIME_KIND_IMAGINARY = 1,
} QpmeTimeKind;

/**
 * Chain couplings and disorder fields.
 */
typedef struct QpmeModel QpmeModel;

/**
 * Eigen-decomposition of one Hamiltonian.
 */
typedef struct QpmeSpectrum QpmeSpectrum;

/**
 * Normalized state vector on `2^L` amplitudes.
 */
typedef struct QpmeState QpmeState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *qpme_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qpme_version(void);

/**
 * Writes `sites` uniform fields on `[-disorder, disorder)` for one realization.
 *
 * # Safety
 * `out` must point to `sites` writable doubles.
 */
enum QpmeStatus qpme_sample_fields(uint64_t master_seed,
                                   uint64_t realization,
                                   size_t sites,
                                   double disorder,
                                   double *out);

/**
 * Creates a model. `fields` holds `sites` values and may be null for a clean chain.
 *
 * # Safety
 * `fields` must be null or point to `sites` readable doubles; `out` must be writable.
 */
enum QpmeStatus qpme_model_new(size_t sites,
                               double gamma,
                               double mu,
                               const double *fields,
                               bool periodic,
                               struct QpmeModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`qpme_model_new`] not yet freed.
 */
void qpme_model_free(struct QpmeModel *model);

/**
 * Diagonalizes the model Hamiltonian.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum QpmeStatus qpme_spectrum_new(const struct QpmeModel *model, struct QpmeSpectrum **out);

/**
 * Diagonalizes the Hamiltonian conjugated by the global y-rotation of angle `theta`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum QpmeStatus qpme_spectrum_new_transformed(const struct QpmeModel *model,
                                              double theta,
                                              struct QpmeSpectrum **out);

/**
 * # Safety
 * `spectrum` must be null or a live handle.
 */
void qpme_spectrum_free(struct QpmeSpectrum *spectrum);

/**
 * Hilbert-space dimension, or 0 for a null handle.
 *
 * # Safety
 * `spectrum` must be null or a live handle.
 */
size_t qpme_spectrum_dim(const struct QpmeSpectrum *spectrum);

/**
 * Copies the ascending eigenvalues; `len` must equal the dimension.
 *
 * # Safety
 * `spectrum` must be a live handle; `out` must point to `len` writable doubles.
 */
enum QpmeStatus qpme_spectrum_eigenvalues(const struct QpmeSpectrum *spectrum,
                                          double *out,
                                          size_t len);

/**
 * Tilted ferromagnetic or Néel product state on `sites` spins.
 *
 * # Safety
 * `out` must be writable.
 */
enum QpmeStatus qpme_state_new_tilted(enum QpmeStateKind kind,
                                      size_t sites,
                                      double theta,
                                      struct QpmeState **out);

/**
 * State from split real and imaginary parts, normalized on entry.
 *
 * # Safety
 * `re` and `im` must each point to `dim` readable doubles; `out` must be writable.
 */
enum QpmeStatus qpme_state_new_amplitudes(const double *re,
                                          const double *im,
                                          size_t dim,
                                          struct QpmeState **out);

/**
 * # Safety
 * `state` must be null or a live handle.
 */
void qpme_state_free(struct QpmeState *state);

/**
 * Number of amplitudes, or 0 for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
size_t qpme_state_dim(const struct QpmeState *state);

/**
 * Copies the amplitudes into split real and imaginary arrays of length `len`.
 *
 * # Safety
 * `state` must be a live handle; `re` and `im` must point to `len` writable doubles.
 */
enum QpmeStatus qpme_state_amplitudes(const struct QpmeState *state,
                                      double *re,
                                      double *im,
                                      size_t len);

/**
 * Evolves `state` for time `t` under `spectrum` into a new handle.
 * Imaginary-time results are normalized.
 *
 * # Safety
 * `state` and `spectrum` must be live handles; `out` must be writable.
 */
enum QpmeStatus qpme_propagate(const struct QpmeState *state,
                               const struct QpmeSpectrum *spectrum,
                               double t,
                               enum QpmeTimeKind kind,
                               struct QpmeState **out);

/**
 * `<psi|H|psi>` for the Hamiltonian behind `spectrum`.
 *
 * # Safety
 * `state` and `spectrum` must be live handles; `out` must be writable.
 */
enum QpmeStatus qpme_energy(const struct QpmeState *state,
                            const struct QpmeSpectrum *spectrum,
                            double *out);

/**
 * Entanglement asymmetry of the leading `subsystem` sites.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum QpmeStatus qpme_entanglement_asymmetry(const struct QpmeState *state,
                                            size_t subsystem,
                                            double *out);

/**
 * Variance of the total charge.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum QpmeStatus qpme_charge_variance(const struct QpmeState *state, double *out);

/**
 * Charge-sector probabilities for `Q = -L, -L + 2, ..., L`; `len` must be `L + 1`.
 *
 * # Safety
 * `state` must be a live handle; `out` must point to `len` writable doubles.
 */
enum QpmeStatus qpme_charge_probabilities(const struct QpmeState *state, double *out, size_t len);

/**
 * Mean adjacent-gap ratio of an ascending spectrum of `len >= 3` levels.
 *
 * # Safety
 * `energies` must point to `len` readable doubles; `out` must be writable.
 */
enum QpmeStatus qpme_level_spacing_ratio(const double *energies, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPME_H */
