#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "parweight/error.hpp"
#include "parweight/io.hpp"

using namespace parweight;

namespace {

struct Setup {
  SpaceTimeGrid g = oracle::grid();
  AdjacentSystem adj = build_adjacent(g.space(), 0.5);
  ScaleFamily scales = default_scale_family(g, adj);
};

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Config;
}

}  // namespace

TEST_CASE("constant weight has Muckenhoupt constant exactly 1") {
  Setup s;
  const std::vector<double> one(s.g.n_cells(), 1.0);
  for (BoxMode mode : {BoxMode::rectangle, BoxMode::cylinder})
    for (double gamma : {0.0, 0.25, 0.5}) {
      const auto fam = oracle::family(s.g, s.adj, mode, {gamma});
      for (double q : {1.5, 2.0, 3.0, 7.0})
        for (Orientation o : {Orientation::plus, Orientation::minus})
          CHECK(muckenhoupt_constant(s.g, one, q, gamma, o, fam).constant == 1.0);
    }
}

TEST_CASE("e^t on 16x64: constant equals per-box brute force") {
  Setup s;
  const auto w = oracle::exp_time(s.g);
  for (BoxMode mode : {BoxMode::rectangle, BoxMode::cylinder}) {
    const auto fam = oracle::family(s.g, s.adj, mode, {0.25});
    const auto vals = muckenhoupt_values(s.g, w, 2.0, 0.25, Orientation::plus, fam);
    for (std::size_t b = 0; b < fam.boxes.size(); ++b)
      CHECK(vals[b] == doctest::Approx(oracle::muckenhoupt_box(s.g, w, 2.0, 0.25, Orientation::plus,
                                                               fam.boxes[b]))
                           .epsilon(1e-12));
    const auto rep = muckenhoupt_constant(s.g, w, 2.0, 0.25, Orientation::plus, fam);
    CHECK(rep.constant == doctest::Approx(oracle::muckenhoupt(s.g, w, 2.0, 0.25, Orientation::plus, fam))
                              .epsilon(1e-12));
    CHECK(rep.n_boxes == fam.boxes.size());
    CHECK(rep.worst_box.has_value());
    CHECK(rep.per_box[rep.worst_index] == rep.constant);
  }
}

TEST_CASE("duality: [w]_{A2+} equals [1/w]_{A2-}") {
  Setup s;
  oracle::Gen gen(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto w = trial == 0 ? oracle::exp_time(s.g) : gen.weight(s.g);
    std::vector<double> inv(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) inv[i] = 1.0 / w[i];
    for (double gamma : {0.0, 0.25}) {
      const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, {gamma});
      const double a = muckenhoupt_constant(s.g, w, 2.0, gamma, Orientation::plus, fam).constant;
      const double b = muckenhoupt_constant(s.g, inv, 2.0, gamma, Orientation::minus, fam).constant;
      CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
  }
}

TEST_CASE("constants are nonincreasing in q, per box") {
  Setup s;
  oracle::Gen gen(3);
  const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, {0.25});
  for (int trial = 0; trial < 8; ++trial) {
    const auto w = gen.weight(s.g, 0.5 + trial);
    for (Orientation o : {Orientation::plus, Orientation::minus}) {
      std::vector<double> prev;
      for (double q : {1.25, 1.5, 2.0, 3.0, 4.0, 8.0}) {
        const auto vals = muckenhoupt_values(s.g, w, q, 0.25, o, fam);
        for (std::size_t b = 0; b < prev.size(); ++b) CHECK(vals[b] <= prev[b]);
        prev = vals;
      }
    }
  }
}

TEST_CASE("scaling invariance") {
  Setup s;
  oracle::Gen gen(4);
  const auto fam = oracle::family(s.g, s.adj, BoxMode::cylinder, {0.25});
  const auto w = gen.weight(s.g);
  const double base = muckenhoupt_constant(s.g, w, 3.0, 0.25, Orientation::plus, fam).constant;
  for (double c : {0.125, 4.0, 1024.0}) {
    std::vector<double> cw(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) cw[i] = c * w[i];
    CHECK(muckenhoupt_constant(s.g, cw, 3.0, 0.25, Orientation::plus, fam).constant == base);
  }
  std::vector<double> w3(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) w3[i] = 3.0 * w[i];
  CHECK(muckenhoupt_constant(s.g, w3, 3.0, 0.25, Orientation::plus, fam).constant ==
        doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("min/max closure stays inside the 2^q envelope") {
  Setup s;
  oracle::Gen gen(5);
  const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, {0.25});
  for (int trial = 0; trial < 6; ++trial) {
    const auto u = gen.weight(s.g), v = gen.weight(s.g);
    std::vector<double> lo(u.size()), hi(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      lo[i] = std::min(u[i], v[i]);
      hi[i] = std::max(u[i], v[i]);
    }
    for (double q : {1.5, 2.0, 3.0}) {
      const double cu = muckenhoupt_constant(s.g, u, q, 0.25, Orientation::plus, fam).constant;
      const double cv = muckenhoupt_constant(s.g, v, q, 0.25, Orientation::plus, fam).constant;
      const double env = std::pow(2.0, q) * (cu + cv);
      CHECK(muckenhoupt_constant(s.g, lo, q, 0.25, Orientation::plus, fam).constant <= env);
      CHECK(muckenhoupt_constant(s.g, hi, q, 0.25, Orientation::plus, fam).constant <= env);
    }
  }
}

TEST_CASE("A1: constant weight, e^t against the per-cell brute force") {
  Setup s;
  const std::vector<double> one(s.g.n_cells(), 1.0);
  for (Orientation o : {Orientation::plus, Orientation::minus})
    CHECK(a1_constant(s.g, &s.adj, one, 0.25, o, s.scales).constant == 1.0);

  const auto w = oracle::exp_time(s.g);
  const auto rep = a1_constant(s.g, &s.adj, w, 0.25, Orientation::plus, s.scales);
  std::vector<char> cov;
  const auto mm = oracle::maximal(s.g, s.adj, w, MaximalOp::rect_minus, 0.25, s.scales, &cov);
  double ref = 0.0;
  std::size_t n_cov = 0;
  for (std::size_t c = 0; c < w.size(); ++c)
    if (cov[c]) {
      ref = std::max(ref, mm[c] / w[c]);
      ++n_cov;
    }
  CHECK(rep.constant == doctest::Approx(ref).epsilon(1e-12));
  CHECK(rep.n_covered == n_cov);
  CHECK(std::isfinite(rep.constant));
}

TEST_CASE("A1 of e^{-t} grows with the largest scale") {
  Setup s;
  const auto w = oracle::exp_time(s.g, -1.0);
  double prev = 0.0;
  std::vector<int> levels;
  for (auto it = s.scales.levels.rbegin(); it != s.scales.levels.rend(); ++it) {
    levels.insert(levels.begin(), *it);
    ScaleFamily fam = s.scales;
    fam.levels = levels;
    const double c = a1_constant(s.g, &s.adj, w, 0.25, Orientation::plus, fam).constant;
    MESSAGE("levels from " << levels.front() << ": " << c);
    CHECK(c > prev);
    prev = c;
  }
  CHECK(levels.size() >= 3);
}

TEST_CASE("absolute continuity inequalities") {
  Setup s;
  const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, {0.25});
  const std::vector<double> one(s.g.n_cells(), 1.0);
  const auto w = oracle::exp_time(s.g);
  const double K = muckenhoupt_constant(s.g, w, 2.0, 0.25, Orientation::plus, fam).constant;
  const double Kd = std::pow(K, 1.0 / (2.0 - 1.0));
  for (const auto& b : fam.boxes) {
    const auto up = box_region(s.g, b, Part::upper);
    const auto eq = absolute_continuity_check(s.g, one, 2.0, 0.25, b, up, 1.0);
    CHECK(eq.ratio == doctest::Approx(1.0).epsilon(1e-12));
    if (up.span.size() < 2) continue;
    Region top = up;
    top.span.begin = up.span.begin + up.span.size() / 2;
    CHECK(absolute_continuity_check(s.g, w, 2.0, 0.25, b, top, K).ratio <= 1.0 + 1e-12);
    auto bottom = box_region(s.g, b, Part::lower);
    bottom.span.end = bottom.span.begin + bottom.span.size() / 2;
    CHECK(absolute_continuity_check(s.g, w, 2.0, 0.25, b, bottom, Kd, true).ratio <= 1.0 + 1e-12);
  }
  const auto& b = fam.boxes.front();
  auto outside = box_region(s.g, b, Part::lower);
  CHECK(kind_of([&] { absolute_continuity_check(s.g, w, 2.0, 0.25, b, outside, K); }) ==
        ErrorKind::SubsetNotContained);
}

TEST_CASE("time shift inequality") {
  Setup s;
  const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, {0.25});
  const std::vector<double> one(s.g.n_cells(), 1.0);
  const auto w = oracle::exp_time(s.g);
  for (double theta : {0.5, 1.0, 2.0}) {
    for (const auto& b : fam.boxes) {
      try {
        const auto c = time_shift_check(s.g, one, 2.0, 0.25, b, theta, 1.0);
        CHECK(c.lhs == c.rhs);
        CHECK(c.exponent == static_cast<int>(std::ceil(theta)));
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ShiftOutOfGrid);
      }
    }
    const auto sum = time_shift_family(s.g, w, 2.0, 0.25, fam, theta);
    CHECK(sum.violations == 0);
    CHECK(sum.n_checked > 0);
    CHECK(sum.n_checked + sum.n_skipped == fam.boxes.size());
    const auto dual = time_shift_family(s.g, w, 2.0, 0.25, fam, theta, true);
    CHECK(dual.violations == 0);
  }
}

TEST_CASE("two-offset constant") {
  Setup s;
  const auto fam = oracle::family(s.g, s.adj, BoxMode::rectangle, {0.25});
  const std::vector<double> one(s.g.n_cells(), 1.0);
  CHECK(two_offset_constant(s.g, one, 2.0, 0.25, fam, 0.5, 0.5).constant == 1.0);
  const auto w = oracle::exp_time(s.g);
  // Zero offsets reproduce the plain constant.
  CHECK(two_offset_constant(s.g, w, 2.0, 0.25, fam, 0.0, 0.0).constant ==
        muckenhoupt_constant(s.g, w, 2.0, 0.25, Orientation::plus, fam).constant);
  CHECK(kind_of([&] { two_offset_constant(s.g, w, 2.0, 0.25, fam, -0.5, 0.0); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("weight presets and validation") {
  Setup s;
  WeightSpec spec;
  spec.preset = WeightPreset::exp_time;
  spec.value = 2.0;
  const auto w = make_weight(s.g, spec);
  CHECK(w[s.g.cell(3, 5)] == doctest::Approx(std::exp(2.0 * s.g.time_center(5))));
  spec.preset = WeightPreset::pow_time;
  spec.value = 0.5;
  spec.shift = 0.5;
  const auto p = make_weight(s.g, spec);
  CHECK(p[s.g.cell(0, 40)] == doctest::Approx(std::sqrt(std::abs(s.g.time_center(40) - 0.5))));
  spec.shift = s.g.time_center(7);
  CHECK(kind_of([&] { make_weight(s.g, spec); }) == ErrorKind::InvalidArgument);

  CHECK(kind_of([&] { validate_weight(std::vector<double>{1.0, 0.0}); }) == ErrorKind::NonpositiveWeight);
  CHECK(kind_of([&] { validate_weight(std::vector<double>{1.0, NAN}); }) == ErrorKind::NonpositiveWeight);
  CHECK(conjugate(3.0) == 1.5);

  const auto path = (std::filesystem::temp_directory_path() / "parweight_weight_test.csv").string();
  write_field_csv(path, s.g, w);
  spec.preset = WeightPreset::file;
  spec.path = path;
  CHECK(make_weight(s.g, spec) == w);
  std::filesystem::remove(path);
}
