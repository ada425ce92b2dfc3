#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "parweight/error.hpp"

using namespace parweight;

namespace {

struct Setup {
  SpaceTimeGrid g = oracle::grid();
  AdjacentSystem adj = build_adjacent(g.space(), 0.5);
  ScaleFamily scales = default_scale_family(g, adj);
};

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

}  // namespace

TEST_CASE("rdf: constant weight factors into constants") {
  Setup s;
  const std::vector<double> w(s.g.n_cells(), 3.0);
  for (double q : {2.0, 3.0, 1.5}) {
    const auto r = rdf_factorize(s.g, s.adj, w, q, 0.25, s.scales);
    CHECK(r.converged);
    CHECK(r.residual <= 1e-12);
    CHECK(spread(r.phi) <= 1.0 + 1e-12);
    CHECK(spread(r.u) <= 1.0 + 1e-12);
    CHECK(spread(r.v) <= 1.0 + 1e-12);
    CHECK(r.violations_u == 0);
    CHECK(r.violations_v == 0);
    CHECK(r.a1_plus_const_u <= 1.0 + 1e-12);
    CHECK(r.a1_minus_const_v <= 1.0 + 1e-12);
    CHECK(r.dual_route == (q < 2.0));
  }
}

TEST_CASE("rdf: e^t factorization with certificates") {
  Setup s;
  const auto w = oracle::exp_time(s.g);
  const double gamma = 0.25;
  const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, {gamma});
  for (double q : {2.0, 3.0, 1.5}) {
    const auto r = rdf_factorize(s.g, s.adj, w, q, gamma, s.scales);
    CHECK(r.converged);
    CHECK(r.residual < 1e-9);
    CHECK(r.violations_u + r.violations_v == 0);
    CHECK(r.a1_plus_const_u <= r.bound_u * (1.0 + 1e-12));
    CHECK(r.a1_minus_const_v <= r.bound_v * (1.0 + 1e-12));
    CHECK(r.dual_route == (q < 2.0));
    CHECK(r.series_base >= 2.0 * r.T_norm_est * (1.0 - 1e-15));

    // Recompose pointwise.
    double worst = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c)
      worst = std::max(worst, std::fabs(w[c] - r.u[c] * std::pow(r.v[c], 1.0 - q)) / w[c]);
    CHECK(worst < 1e-9);

    const double composed = compose_check(s.g, r.u, r.v, q, gamma, fam).constant;
    const double original = muckenhoupt_constant(s.g, w, q, gamma, Orientation::plus, fam).constant;
    CHECK(composed <= original * (1.0 + 1e-6));
    CHECK(composed == doctest::Approx(original).epsilon(1e-9));

    // Terms shrink at least as fast as the geometric bound once the series settles.
    REQUIRE(r.term_norms.size() >= 2);
    for (std::size_t k = 1; k < r.term_norms.size(); ++k)
      CHECK(r.term_norms[k] <= r.term_norms[k - 1] * 0.75);
    CHECK(r.term_norms.back() < 1e-10 * r.term_norms.front() * static_cast<double>(r.term_norms.size()));
  }
}

TEST_CASE("rdf: random weights recompose") {
  Setup s;
  oracle::Gen gen(41);
  for (int trial = 0; trial < 3; ++trial) {
    const auto w = gen.weight(s.g, 0.8);
    for (double q : {2.0, 1.5}) {
      const auto r = rdf_factorize(s.g, s.adj, w, q, 0.25, s.scales);
      CHECK(r.converged);
      CHECK(r.residual < 1e-9);
      CHECK(r.violations_u + r.violations_v == 0);
    }
  }
}

TEST_CASE("rdf argument checks") {
  Setup s;
  const auto w = oracle::exp_time(s.g);
  CHECK_THROWS_AS(rdf_factorize(s.g, s.adj, w, 1.0, 0.25, s.scales), Error);
  CHECK_THROWS_AS(rdf_factorize(s.g, s.adj, w, 2.0, 1.0, s.scales), Error);
  auto bad = w;
  bad[5] = 0.0;
  CHECK_THROWS_AS(rdf_factorize(s.g, s.adj, bad, 2.0, 0.25, s.scales), Error);
}

TEST_CASE("compose of unit factors is 1") {
  Setup s;
  const std::vector<double> one(s.g.n_cells(), 1.0);
  const auto fam = oracle::family(s.g, s.adj, BoxMode::cylinder, {0.25});
  for (double q : {1.5, 2.0, 4.0}) CHECK(compose_check(s.g, one, one, q, 0.25, fam).constant == 1.0);
}

TEST_CASE("Coifman-Rochberg: uniform measure gives the unit weight") {
  Setup s;
  const std::vector<double> nu(s.g.n_cells(), 1.0);
  const auto cr = coifman_rochberg(s.g, s.adj, nu, 0.5, 0.25, s.scales);
  for (double x : cr.weight) CHECK(x == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cr.a1.constant == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Coifman-Rochberg: point mass against the enumerated maximal function") {
  Setup s;
  std::vector<double> nu(s.g.n_cells(), 0.0);
  nu[s.g.cell(7, 20)] = 64.0;
  ScaleFamily ladder;
  for (std::size_t m = 1; m <= s.g.nt(); ++m) ladder.ladder.push_back(static_cast<double>(m));
  std::vector<char> cov;
  const auto ref = oracle::maximal(s.g, s.adj, nu, MaximalOp::cyl_minus, 0.0, ladder, &cov);

  for (double eps : {0.5, 0.0}) {
    const auto cr = coifman_rochberg(s.g, s.adj, nu, eps, 0.25, s.scales);
    for (std::size_t c = 0; c < nu.size(); ++c) {
      CHECK(static_cast<bool>(cr.covered[c]) == static_cast<bool>(cov[c]));
      const double want = cov[c] && ref[c] > 0.0 ? std::pow(ref[c], eps) : 1.0;
      if (cov[c] && ref[c] == 0.0 && eps > 0.0) {
        CHECK(cr.weight[c] == 0.0);
        continue;
      }
      CHECK(cr.weight[c] == doctest::Approx(want).epsilon(1e-12));
    }
    if (eps > 0.0) {
      CHECK(std::isfinite(cr.a1.constant));
      MESSAGE("point mass A1 constant at eps=" << eps << ": " << cr.a1.constant);
    }
  }
}

TEST_CASE("Coifman-Rochberg rejects a measure that vanishes everywhere it is seen") {
  Setup s;
  const std::vector<double> zero(s.g.n_cells(), 0.0);
  CHECK_THROWS_AS(coifman_rochberg(s.g, s.adj, zero, 0.5, 0.25, ScaleFamily{}), Error);
}

TEST_CASE("A1 decomposition") {
  Setup s;
  const std::vector<double> one(s.g.n_cells(), 1.0);
  const auto triv = a1_decompose(s.g, s.adj, one, 0.25, 0.5, s.scales);
  for (double x : triv.phi) CHECK(x == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(triv.sup_log_phi == doctest::Approx(0.0).epsilon(1e-14));

  // At the finest scale the box centered at the cell's upper edge averages over
  // the cell's own time slab. A weight constant in space and increasing in time
  // attains the sup there, so phi is exactly 1.
  const auto w = oracle::exp_time(s.g);
  const auto dec = a1_decompose(s.g, s.adj, w, 0.25, 0.5, s.scales);
  CHECK(dec.epsilon == doctest::Approx(1.0 / 1.5));
  CHECK(dec.sup_log_phi <= 1e-12);
  for (std::size_t c = 0; c < w.size(); ++c)
    CHECK(dec.phi[c] * dec.weight[c] == doctest::Approx(w[c]).epsilon(1e-12));

  oracle::Gen gen(43);
  const auto rw = gen.weight(s.g, 1.0);
  const auto rdec = a1_decompose(s.g, s.adj, rw, 0.25, 0.5, s.scales);
  CHECK(std::isfinite(rdec.sup_log_phi));
  const auto ref = oracle::maximal(s.g, s.adj, oracle::powered(rw, 1.5), MaximalOp::rect_minus, 0.25, s.scales);
  for (std::size_t c = 0; c < rw.size(); ++c) {
    if (rdec.covered[c]) CHECK(rdec.maximal[c] == doctest::Approx(ref[c]).epsilon(1e-12));
    CHECK(rdec.phi[c] * rdec.weight[c] == doctest::Approx(rw[c]).epsilon(1e-12));
  }

  // A Coifman-Rochberg weight built from a point mass decomposes with bounded phi.
  std::vector<double> nu(s.g.n_cells(), 0.0);
  nu[s.g.cell(7, 20)] = 64.0;
  const auto cr = coifman_rochberg(s.g, s.adj, nu, 0.5, 0.25, s.scales);
  const auto crdec = a1_decompose(s.g, s.adj, cr.weight, 0.25, 0.5, s.scales);
  CHECK(std::isfinite(crdec.sup_log_phi));
  MESSAGE("point mass CR weight: A1 " << cr.a1.constant << ", sup|log phi| " << crdec.sup_log_phi);
}
