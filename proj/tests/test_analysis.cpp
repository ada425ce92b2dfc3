#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "parweight/error.hpp"

using namespace parweight;

namespace {

struct Setup {
  SpaceTimeGrid g = oracle::grid();
  AdjacentSystem adj = build_adjacent(g.space(), 0.5);
};

}  // namespace

TEST_CASE("RHI: constant weight gives C = 1 at every kappa") {
  Setup s;
  const std::vector<double> one(s.g.n_cells(), 1.7);
  for (BoxMode mode : {BoxMode::rectangle, BoxMode::cylinder}) {
    const auto fam = oracle::family(s.g, s.adj, mode, {0.0});
    for (double kappa : {2.0, 1.0, 0.5, 0.25, 0.05})
      for (RhiSide side : {RhiSide::weight, RhiSide::dual})
        CHECK(std::abs(rhi_constant(s.g, one, 2.0, fam, side, kappa).C - 1.0) <= 1e-12);
  }
}

TEST_CASE("RHI: e^t equals the per-box brute force") {
  Setup s;
  const auto w = oracle::exp_time(s.g);
  for (BoxMode mode : {BoxMode::rectangle, BoxMode::cylinder}) {
    const auto fam = oracle::family(s.g, s.adj, mode, {0.0});
    for (double kappa : {0.5, 0.25})
      for (RhiSide side : {RhiSide::weight, RhiSide::dual}) {
        const auto r = rhi_constant(s.g, w, 2.0, fam, side, kappa);
        CHECK(r.C == doctest::Approx(oracle::rhi(s.g, w, 2.0, fam, side, kappa)).epsilon(1e-12));
      }
  }
}

TEST_CASE("RHI: dual side of e^t mirrors the weight side under time reversal") {
  Setup s;
  const auto w = oracle::exp_time(s.g);
  const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, {0.0});
  for (double kappa : {1.0, 0.5}) {
    const double a = rhi_constant(s.g, w, 2.0, fam, RhiSide::weight, kappa).C;
    const double b = rhi_constant(s.g, w, 2.0, fam, RhiSide::dual, kappa).C;
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
  }
}

TEST_CASE("RHI constant is invariant under scaling") {
  Setup s;
  oracle::Gen gen(31);
  const auto fam = oracle::family(s.g, s.adj, BoxMode::cylinder, {0.0});
  const auto w = gen.weight(s.g);
  std::vector<double> cw(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) cw[i] = 8.0 * w[i];
  for (double kappa : {1.0, 0.3})
    CHECK(rhi_constant(s.g, w, 2.0, fam, RhiSide::weight, kappa).C ==
          rhi_constant(s.g, cw, 2.0, fam, RhiSide::weight, kappa).C);
}

TEST_CASE("RHI search walks the ladder until the budget is met") {
  Setup s;
  const auto w = oracle::exp_time(s.g);
  const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, {0.0});
  const auto r = reverse_holder_search(s.g, w, 2.0, fam, RhiSide::weight);
  CHECK(r.within_budget);
  CHECK(r.kappa == 1.0);
  CHECK(r.ladder_kappa.size() == 1);
  // A tight budget forces the search down the ladder and reports failure at the end.
  const auto tight = reverse_holder_search(s.g, w, 2.0, fam, RhiSide::weight, {0.1, 1.0, 0.5}, 0.5);
  CHECK_FALSE(tight.within_budget);
  CHECK(tight.ladder_kappa == std::vector<double>{1.0, 0.5, 0.1});
  CHECK(tight.kappa == 0.1);
}

TEST_CASE("self-improvement") {
  Setup s;
  const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, {0.25});
  const std::vector<double> one(s.g.n_cells(), 1.0);
  const auto triv = self_improvement(s.g, one, 3.0, 0.25, fam, {0.25, 0.5, 1.5});
  for (double c : triv.constants) CHECK(c == 1.0);
  CHECK(triv.epsilon == 1.5);

  const auto w = oracle::exp_time(s.g);
  const auto r = self_improvement(s.g, w, 3.0, 0.25, fam, {0.25, 0.5});
  CHECK(std::isfinite(r.constants[0]));
  CHECK(std::isfinite(r.constants[1]));
  CHECK(r.base_constant <= r.constants[0]);
  CHECK(r.constants[0] <= r.constants[1]);
  CHECK(r.epsilon == 0.5);
  MESSAGE("q=3: " << r.base_constant << ", q=2.75: " << r.constants[0] << ", q=2.5: " << r.constants[1]);
  CHECK_THROWS_AS(self_improvement(s.g, w, 3.0, 0.25, fam, {2.0}), Error);
  CHECK_THROWS_AS(self_improvement(s.g, w, 3.0, 0.25, fam, {0.0}), Error);
}

TEST_CASE("A-infinity: constant weight is tight, e^t has a positive exponent") {
  Setup s;
  const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, {0.0});
  const std::vector<double> one(s.g.n_cells(), 1.0);
  const std::vector<double> half{0.5};
  const auto t = ainfty_check(s.g, one, fam, half);
  // Small boxes cannot split exactly in half; the realized fraction is what counts.
  for (std::size_t i = 0; i < t.ratios.size(); ++i) {
    CHECK(t.fractions[i] >= 0.5);
    CHECK(t.ratios[i] == doctest::Approx(t.fractions[i]).epsilon(1e-14));
  }
  CHECK(t.epsilon == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.Ctilde == 1.0);
  const std::vector<double> all{1.0};
  for (double r : ainfty_check(s.g, one, fam, all).ratios) CHECK(r == 1.0);

  const auto w = oracle::exp_time(s.g);
  const std::vector<double> fr{0.1, 0.25, 0.5, 1.0};
  const auto fit = ainfty_check(s.g, w, fam, fr);
  CHECK(fit.epsilon > 0.0);
  for (std::size_t i = 0; i < fit.ratios.size(); ++i)
    CHECK(fit.ratios[i] <= fit.Ctilde * std::pow(fit.fractions[i], fit.epsilon) * (1.0 + 1e-9));
}

TEST_CASE("A-infinity with E = P^- is the absolute continuity ratio at S = P^+") {
  Setup s;
  const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, {0.0});
  const auto w = oracle::exp_time(s.g);
  const std::vector<double> all{1.0};
  const auto fit = ainfty_check(s.g, w, fam, all);
  for (std::size_t b = 0; b < fam.boxes.size(); ++b) {
    const auto& box = fam.boxes[b];
    ParabolicBox lagfree = box;
    lagfree.gamma = 0.0;
    const auto sides = absolute_continuity_check(s.g, w, 2.0, 0.0, lagfree,
                                                 box_region(s.g, lagfree, Part::upper), 1.0);
    CHECK(fit.ratios[b] == doctest::Approx(sides.ratio).epsilon(1e-12));
  }
}

TEST_CASE("lag transfer") {
  Setup s;
  const std::vector<double> gammas{0.0, 0.25, 0.5};
  const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, gammas);
  const std::vector<double> one(s.g.n_cells(), 1.0);
  const auto t = lag_transfer(s.g, one, 2.0, gammas, fam);
  for (double c : t.constants) CHECK(c == 1.0);
  for (const auto& row : t.ratios)
    for (double r : row) CHECK(r == 1.0);

  oracle::Gen gen(33);
  for (int trial = 0; trial < 4; ++trial) {
    const auto w = trial == 0 ? oracle::exp_time(s.g) : gen.weight(s.g, 1.5);
    for (double q : {1.5, 2.0, 3.0}) {
      const auto r = lag_transfer(s.g, w, q, gammas, fam);
      CHECK(r.violations == 0);
      CHECK(r.worst_slack <= 1.0 + 1e-12);
      CHECK(r.n_boxes == fam.boxes.size());
    }
  }
  const auto e = lag_transfer(s.g, oracle::exp_time(s.g), 2.0, gammas, fam);
  MESSAGE("e^t constants at gamma 0, 0.25, 0.5: " << e.constants[0] << ", " << e.constants[1] << ", "
                                                   << e.constants[2]);
}
