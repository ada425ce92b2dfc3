// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "parweight/parweight.h"

namespace {

struct Handles {
  pw_space* space = nullptr;
  pw_grid* grid = nullptr;
  pw_adjacent* adj = nullptr;

  Handles() {
    REQUIRE(pw_space_grid(1, 1.0, 16, &space) == PW_OK);
    REQUIRE(pw_grid_create(space, 0.0, 1.0 / 64.0, 64, 2.0, &grid) == PW_OK);
    REQUIRE(pw_adjacent_build(space, 0.5, &adj) == PW_OK);
  }
  ~Handles() {
    pw_adjacent_free(adj);
    pw_grid_free(grid);
    pw_space_free(space);
  }
};

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(pw_version()).size() > 0);
  CHECK(std::string(pw_status_name(PW_OK)) == "Ok");
  CHECK(std::string(pw_status_name(PW_ERR_CONFIG)) == "Config");
  CHECK(std::string(pw_status_name(PW_ERR_INTERNAL)) == "Internal");
  CHECK(pw_status_exit_code(PW_OK) == 0);
  CHECK(pw_status_exit_code(PW_ERR_CONFIG) == 2);
  CHECK(pw_status_exit_code(PW_ERR_DIVERGENCE) == 3);
  CHECK(pw_status_exit_code(PW_ERR_COVERAGE_FAILURE) == 3);
}

TEST_CASE("threads") {
  const unsigned before = pw_get_threads();
  pw_set_threads(3);
  CHECK(pw_get_threads() == 3);
  pw_set_threads(before);
}

TEST_CASE("handles and sizes") {
  Handles h;
  CHECK(pw_space_size(h.space) == 16);
  CHECK(pw_grid_n_cells(h.grid) == 16 * 64);
  CHECK(pw_adjacent_location_const(h.adj) == doctest::Approx(3.75));
  const double lag = 0.25;
  pw_family* fam = nullptr;
  REQUIRE(pw_family_build(h.grid, h.adj, 0, &lag, 1, &fam) == PW_OK);
  CHECK(pw_family_size(fam) > 0);
  pw_family_free(fam);
  CHECK(pw_space_size(nullptr) == 0);
}

TEST_CASE("space from JSON") {
  pw_space* sp = nullptr;
  REQUIRE(pw_space_from_json(R"({"points": [[0.0], [0.5], [1.0]], "masses": [1, 1, 1]})", &sp) == PW_OK);
  CHECK(pw_space_size(sp) == 3);
  pw_space_free(sp);
  CHECK(pw_space_from_json("{not json", &sp) != PW_OK);
  CHECK(std::string(pw_last_error()).size() > 0);
}

TEST_CASE("weights, constants and the time field") {
  Handles h;
  const std::size_t n = pw_grid_n_cells(h.grid);
  std::vector<double> w(n);
  REQUIRE(pw_weight(h.grid, PW_WEIGHT_CONSTANT, 2.0, 0.0, w.data()) == PW_OK);
  const double lag = 0.25;
  pw_family* fam = nullptr;
  REQUIRE(pw_family_build(h.grid, h.adj, 1, &lag, 1, &fam) == PW_OK);
  double c = 0.0;
  REQUIRE(pw_muckenhoupt(h.grid, w.data(), 2.0, 0.25, PW_PLUS, fam, &c) == PW_OK);
  CHECK(c == doctest::Approx(1.0).epsilon(1e-12));

  // pbmo of log e^{-t} = -t vanishes in the plus orientation, not in the minus one.
  REQUIRE(pw_weight(h.grid, PW_WEIGHT_EXP_TIME, -1.0, 0.0, w.data()) == PW_OK);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = std::log(w[i]);
  double norm = -1.0;
  REQUIRE(pw_pbmo_norm(h.grid, u.data(), 0.25, PW_PLUS, fam, &norm) == PW_OK);
  CHECK(norm == doctest::Approx(0.0).epsilon(1e-14));
  REQUIRE(pw_pbmo_norm(h.grid, u.data(), 0.25, PW_MINUS, fam, &norm) == PW_OK);
  CHECK(norm > 0.0);
  pw_family_free(fam);
}

TEST_CASE("maximal field and factorization") {
  Handles h;
  const std::size_t n = pw_grid_n_cells(h.grid);
  std::vector<double> f(n, 1.0), m(n);
  std::vector<unsigned char> cov(n);
  REQUIRE(pw_maximal_field(h.grid, h.adj, f.data(), PW_RECT_PLUS, 0.25, m.data(), cov.data()) == PW_OK);
  for (std::size_t i = 0; i < n; ++i)
    if (cov[i]) CHECK(m[i] == doctest::Approx(1.0).epsilon(1e-14));

  std::vector<double> w(n), uu(n), vv(n);
  REQUIRE(pw_weight(h.grid, PW_WEIGHT_EXP_TIME, 1.0, 0.0, w.data()) == PW_OK);
  double residual = 1.0;
  REQUIRE(pw_rdf_factorize(h.grid, h.adj, w.data(), 2.0, 0.25, uu.data(), vv.data(), &residual) == PW_OK);
  CHECK(residual < 1e-9);
  for (std::size_t i = 0; i < n; i += 97) CHECK(uu[i] / vv[i] == doctest::Approx(w[i]).epsilon(1e-9));
}

TEST_CASE("errors become status codes") {
  Handles h;
  const std::size_t n = pw_grid_n_cells(h.grid);
  std::vector<double> w(n, 1.0);
  w[3] = -1.0;
  const double lag = 0.0;
  pw_family* fam = nullptr;
  REQUIRE(pw_family_build(h.grid, h.adj, 0, &lag, 1, &fam) == PW_OK);
  double c = 0.0;
  CHECK(pw_muckenhoupt(h.grid, w.data(), 2.0, 0.0, PW_PLUS, fam, &c) == PW_ERR_NONPOSITIVE_WEIGHT);
  CHECK(std::string(pw_last_error()).size() > 0);
  w[3] = 1.0;
  CHECK(pw_muckenhoupt(h.grid, w.data(), 0.5, 0.0, PW_PLUS, fam, &c) == PW_ERR_INVALID_ARGUMENT);
  CHECK(pw_muckenhoupt(h.grid, nullptr, 2.0, 0.0, PW_PLUS, fam, &c) == PW_ERR_INVALID_ARGUMENT);
  CHECK(pw_muckenhoupt(h.grid, w.data(), 2.0, 0.0, PW_PLUS, fam, &c) == PW_OK);
  CHECK(std::string(pw_last_error()).empty());
  pw_family_free(fam);

  pw_grid* g = nullptr;
  CHECK(pw_grid_create(h.space, 0.0, 0.1, 0, 2.0, &g) != PW_OK);
  CHECK(pw_maximal_field(h.grid, h.adj, w.data(), static_cast<pw_maximal_op>(42), 0.0, w.data(), nullptr) ==
        PW_ERR_INVALID_ARGUMENT);
}

TEST_CASE("runner entry points") {
  char* report = nullptr;
  CHECK(pw_run_config(PARWEIGHT_TEST_DIR "/configs/constant.toml", nullptr, -1, &report) == PW_OK);
  REQUIRE(report != nullptr);
  CHECK(std::string(report).find("\"muckenhoupt_constant\"") != std::string::npos);
  pw_string_free(report);

  report = nullptr;
  const pw_status bad = pw_run_config(PARWEIGHT_TEST_DIR "/configs/bad_gamma.toml", nullptr, -1, &report);
  CHECK(bad == PW_ERR_CONFIG);
  CHECK(pw_status_exit_code(bad) == 2);
  CHECK(std::string(pw_last_error()).find("op.gamma") != std::string::npos);
  CHECK(report == nullptr);

  int passed = 0;
  CHECK(pw_run_suite("trivial", nullptr, 1, &passed, nullptr) == PW_OK);
  CHECK(passed == 1);
  CHECK(pw_run_suite("nope", nullptr, 1, &passed, nullptr) == PW_ERR_CONFIG);
}
