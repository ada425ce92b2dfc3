/* C interface to the parweight core. Every call returns a pw_status; on
 * failure pw_last_error() holds a message for the calling thread. Fields are
 * flat arrays of grid cells indexed point * nt + time_index. */
#ifndef PARWEIGHT_H
#define PARWEIGHT_H

#include <stddef.h>

#if defined(PARWEIGHT_BUILDING)
#define PW_API __attribute__((visibility("default")))
#else
#define PW_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pw_status {
  PW_OK = 0,
  PW_ERR_INVALID_ARGUMENT,
  PW_ERR_INVALID_SPACE,
  PW_ERR_INVARIANT_VIOLATION,
  PW_ERR_COVERAGE_FAILURE,
  PW_ERR_COVERAGE_MISMATCH,
  PW_ERR_INADMISSIBLE_BOX,
  PW_ERR_EMPTY_REGION,
  PW_ERR_EMPTY_FAMILY,
  PW_ERR_NONPOSITIVE_WEIGHT,
  PW_ERR_SUBSET_NOT_CONTAINED,
  PW_ERR_SHIFT_OUT_OF_GRID,
  PW_ERR_NO_CHAIN,
  PW_ERR_DIVERGENCE,
  PW_ERR_DEGENERATE_MEASURE,
  PW_ERR_CONFIG,
  PW_ERR_INTERNAL
} pw_status;

typedef enum pw_orientation { PW_PLUS = 0, PW_MINUS = 1 } pw_orientation;

typedef enum pw_maximal_op {
  PW_RECT_PLUS = 0,
  PW_RECT_MINUS,
  PW_CYL_PLUS,
  PW_CYL_MINUS,
  PW_RECT_RESTRICTED,
  PW_HARDY_LITTLEWOOD
} pw_maximal_op;

typedef enum pw_weight_preset {
  PW_WEIGHT_CONSTANT = 0,
  PW_WEIGHT_EXP_TIME,
  PW_WEIGHT_POW_TIME,
  PW_WEIGHT_POW_SPACE
} pw_weight_preset;

typedef struct pw_space pw_space;
typedef struct pw_grid pw_grid;
typedef struct pw_adjacent pw_adjacent;
typedef struct pw_family pw_family;

PW_API const char* pw_version(void);
PW_API const char* pw_last_error(void);
PW_API const char* pw_status_name(pw_status status);
/* 0 for PW_OK, 3 for numeric failures, 2 for everything else. */
PW_API int pw_status_exit_code(pw_status status);

PW_API void pw_set_threads(unsigned n);
PW_API unsigned pw_get_threads(void);

PW_API pw_status pw_space_grid(int dim, double extent, size_t n_cells, pw_space** out);
PW_API pw_status pw_space_from_json(const char* text, pw_space** out);
PW_API size_t pw_space_size(const pw_space* space);
PW_API void pw_space_free(pw_space* space);

/* The grid keeps its own reference to the space. */
PW_API pw_status pw_grid_create(const pw_space* space, double t0, double dt, size_t nt, double p,
                                pw_grid** out);
PW_API size_t pw_grid_n_cells(const pw_grid* grid);
PW_API void pw_grid_free(pw_grid* grid);

PW_API pw_status pw_adjacent_build(const pw_space* space, double delta, pw_adjacent** out);
PW_API double pw_adjacent_location_const(const pw_adjacent* adj);
PW_API void pw_adjacent_free(pw_adjacent* adj);

/* Aligned family for every lag given; cylinder != 0 selects cylinders. */
PW_API pw_status pw_family_build(const pw_grid* grid, const pw_adjacent* adj, int cylinder,
                                 const double* lags, size_t n_lags, pw_family** out);
PW_API size_t pw_family_size(const pw_family* family);
PW_API void pw_family_free(pw_family* family);

PW_API pw_status pw_weight(const pw_grid* grid, pw_weight_preset preset, double value, double shift,
                           double* out);

PW_API pw_status pw_muckenhoupt(const pw_grid* grid, const double* omega, double q, double gamma,
                                pw_orientation orientation, const pw_family* family,
                                double* out_constant);

/* covered may be NULL. Uses the default scale family of adj. */
PW_API pw_status pw_maximal_field(const pw_grid* grid, const pw_adjacent* adj, const double* f,
                                  pw_maximal_op op, double gamma, double* out_values,
                                  unsigned char* out_covered);

PW_API pw_status pw_rdf_factorize(const pw_grid* grid, const pw_adjacent* adj, const double* omega,
                                  double q, double gamma, double* out_u, double* out_v,
                                  double* out_residual);

PW_API pw_status pw_pbmo_norm(const pw_grid* grid, const double* u, double gamma,
                              pw_orientation orientation, const pw_family* family, double* out_norm);

/* Report JSON strings are released with pw_string_free. A negative seed keeps
 * the config's own seed; out_dir may be NULL or empty. */
PW_API pw_status pw_run_config(const char* config_path, const char* out_dir, long long seed,
                               char** out_report);
PW_API pw_status pw_run_suite(const char* name, const char* out_dir, long long seed, int* out_passed,
                              char** out_report);
PW_API void pw_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
