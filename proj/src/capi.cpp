#include "parweight/parweight.h"

#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "parweight/error.hpp"
#include "parweight/factorize.hpp"
#include "parweight/io.hpp"
#include "parweight/parallel.hpp"
#include "parweight/pbmo.hpp"
#include "parweight/runner.hpp"
#include "parweight/version.hpp"

using namespace parweight;

struct pw_space {
  std::shared_ptr<const PointCloudSpace> space;
};
struct pw_grid {
  SpaceTimeGrid grid;
};
struct pw_adjacent {
  AdjacentSystem adj;
};
struct pw_family {
  BoxFamily family;
};

namespace {

thread_local std::string last_error;

pw_status status_of(ErrorKind kind) {
  // ErrorKind and pw_status list the same failures in the same order.
  return static_cast<pw_status>(static_cast<int>(kind) + 1);
}

template <class F>
pw_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return PW_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  }
  return PW_ERR_INTERNAL;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

RunOptions run_options(const char* out_dir, long long seed) {
  RunOptions opts;
  if (seed >= 0) opts.seed = static_cast<std::uint64_t>(seed);
  if (out_dir) opts.out_dir = out_dir;
  return opts;
}

}  // namespace

extern "C" {

const char* pw_version(void) { return version_string(); }
const char* pw_last_error(void) { return last_error.c_str(); }

const char* pw_status_name(pw_status status) {
  if (status == PW_OK) return "Ok";
  if (status == PW_ERR_INTERNAL) return "Internal";
  if (status > PW_OK && status < PW_ERR_INTERNAL)
    return to_string(static_cast<ErrorKind>(static_cast<int>(status) - 1)).data();
  return "Unknown";
}

int pw_status_exit_code(pw_status status) {
  if (status == PW_OK) return 0;
  if (status > PW_OK && status < PW_ERR_INTERNAL &&
      is_numeric_failure(static_cast<ErrorKind>(static_cast<int>(status) - 1)))
    return 3;
  return 2;
}

void pw_set_threads(unsigned n) { set_thread_count(n); }
unsigned pw_get_threads(void) { return thread_count(); }

pw_status pw_space_grid(int dim, double extent, size_t n_cells, pw_space** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new pw_space{std::make_shared<const PointCloudSpace>(
        PointCloudSpace::euclidean_grid(dim, extent, n_cells))};
  });
}

pw_status pw_space_from_json(const char* text, pw_space** out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = new pw_space{space_from_json(text)};
  });
}

size_t pw_space_size(const pw_space* space) { return space ? space->space->size() : 0; }
void pw_space_free(pw_space* space) { delete space; }

pw_status pw_grid_create(const pw_space* space, double t0, double dt, size_t nt, double p,
                         pw_grid** out) {
  return guarded([&] {
    require(space && out, "null argument");
    *out = new pw_grid{SpaceTimeGrid(space->space, t0, dt, nt, p)};
  });
}

size_t pw_grid_n_cells(const pw_grid* grid) { return grid ? grid->grid.n_cells() : 0; }
void pw_grid_free(pw_grid* grid) { delete grid; }

pw_status pw_adjacent_build(const pw_space* space, double delta, pw_adjacent** out) {
  return guarded([&] {
    require(space && out, "null argument");
    *out = new pw_adjacent{build_adjacent(*space->space, delta)};
  });
}

double pw_adjacent_location_const(const pw_adjacent* adj) { return adj ? adj->adj.location_const : 0.0; }
void pw_adjacent_free(pw_adjacent* adj) { delete adj; }

pw_status pw_family_build(const pw_grid* grid, const pw_adjacent* adj, int cylinder,
                          const double* lags, size_t n_lags, pw_family** out) {
  return guarded([&] {
    require(grid && out && lags && n_lags > 0, "null argument or no lags");
    FamilySpec spec;
    spec.mode = cylinder ? BoxMode::cylinder : BoxMode::rectangle;
    *out = new pw_family{build_family(grid->grid, adj ? &adj->adj : nullptr, spec,
                                      std::span<const double>(lags, n_lags))};
  });
}

size_t pw_family_size(const pw_family* family) { return family ? family->family.boxes.size() : 0; }
void pw_family_free(pw_family* family) { delete family; }

pw_status pw_weight(const pw_grid* grid, pw_weight_preset preset, double value, double shift,
                    double* out) {
  return guarded([&] {
    require(grid && out, "null argument");
    require(preset >= PW_WEIGHT_CONSTANT && preset <= PW_WEIGHT_POW_SPACE, "unknown preset");
    WeightSpec spec;
    spec.preset = static_cast<WeightPreset>(preset);
    spec.value = value;
    spec.shift = shift;
    const auto w = make_weight(grid->grid, spec);
    std::copy(w.begin(), w.end(), out);
  });
}

pw_status pw_muckenhoupt(const pw_grid* grid, const double* omega, double q, double gamma,
                         pw_orientation orientation, const pw_family* family, double* out_constant) {
  return guarded([&] {
    require(grid && omega && family && out_constant, "null argument");
    const std::span<const double> w(omega, grid->grid.n_cells());
    *out_constant = muckenhoupt_constant(grid->grid, w, q, gamma,
                                         orientation == PW_MINUS ? Orientation::minus : Orientation::plus,
                                         family->family)
                        .constant;
  });
}

pw_status pw_maximal_field(const pw_grid* grid, const pw_adjacent* adj, const double* f,
                           pw_maximal_op op, double gamma, double* out_values,
                           unsigned char* out_covered) {
  return guarded([&] {
    require(grid && adj && f && out_values, "null argument");
    require(op >= PW_RECT_PLUS && op <= PW_HARDY_LITTLEWOOD, "unknown maximal operator");
    const auto fam = default_scale_family(grid->grid, adj->adj);
    const auto mf = maximal_field(grid->grid, &adj->adj, std::span<const double>(f, grid->grid.n_cells()),
                                  static_cast<MaximalOp>(op), gamma, fam);
    std::copy(mf.values.begin(), mf.values.end(), out_values);
    if (out_covered) std::copy(mf.covered.begin(), mf.covered.end(), out_covered);
  });
}

pw_status pw_rdf_factorize(const pw_grid* grid, const pw_adjacent* adj, const double* omega,
                           double q, double gamma, double* out_u, double* out_v,
                           double* out_residual) {
  return guarded([&] {
    require(grid && adj && omega, "null argument");
    const auto fam = default_scale_family(grid->grid, adj->adj);
    const auto r = rdf_factorize(grid->grid, adj->adj,
                                 std::span<const double>(omega, grid->grid.n_cells()), q, gamma, fam);
    if (out_u) std::copy(r.u.begin(), r.u.end(), out_u);
    if (out_v) std::copy(r.v.begin(), r.v.end(), out_v);
    if (out_residual) *out_residual = r.residual;
  });
}

pw_status pw_pbmo_norm(const pw_grid* grid, const double* u, double gamma,
                       pw_orientation orientation, const pw_family* family, double* out_norm) {
  return guarded([&] {
    require(grid && u && family && out_norm, "null argument");
    *out_norm = pbmo_norm(grid->grid, std::span<const double>(u, grid->grid.n_cells()), gamma,
                          family->family,
                          orientation == PW_MINUS ? Orientation::minus : Orientation::plus)
                    .norm;
  });
}

pw_status pw_run_config(const char* config_path, const char* out_dir, long long seed,
                        char** out_report) {
  return guarded([&] {
    require(config_path != nullptr, "config path is null");
    const auto r = run_config(load_config(config_path), run_options(out_dir, seed));
    if (out_report) *out_report = dup_string(r.report.dump(2));
  });
}

pw_status pw_run_suite(const char* name, const char* out_dir, long long seed, int* out_passed,
                       char** out_report) {
  return guarded([&] {
    require(name != nullptr, "suite name is null");
    const auto r = run_suite(name, run_options(out_dir, seed));
    if (out_passed) *out_passed = r.passed ? 1 : 0;
    if (out_report) *out_report = dup_string(r.report.dump(2));
  });
}

void pw_string_free(char* s) { delete[] s; }

}  // extern "C"
