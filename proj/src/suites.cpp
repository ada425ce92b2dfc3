#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "parweight/analysis.hpp"
#include "parweight/error.hpp"
#include "parweight/factorize.hpp"
#include "parweight/io.hpp"
#include "parweight/pbmo.hpp"
#include "parweight/runner.hpp"
#include "parweight/version.hpp"

namespace parweight {

using nlohmann::json;

namespace {

class Checks {
 public:
  void expect_near(const std::string& name, double value, double expected, double tol) {
    add(name, value, std::abs(value - expected) <= tol, {{"expected", expected}, {"tol", tol}});
  }
  void expect_rel(const std::string& name, double value, double expected, double rel) {
    const bool ok = std::abs(value - expected) <= rel * std::max(std::abs(expected), 1e-300);
    add(name, value, ok, {{"expected", expected}, {"rel_tol", rel}});
  }
  void expect_le(const std::string& name, double value, double bound) {
    add(name, value, value <= bound, {{"bound", bound}});
  }
  void expect_true(const std::string& name, bool ok, double value = 0.0) {
    add(name, value, ok, json::object());
  }

  bool passed() const { return failed_ == 0; }
  std::size_t failed() const { return failed_; }
  const json& records() const { return records_; }

 private:
  void add(const std::string& name, double value, bool ok, json extra) {
    extra["name"] = name;
    extra["value"] = std::isfinite(value) ? json(value) : json(std::isnan(value) ? "nan" : "inf");
    extra["pass"] = ok;
    records_.push_back(std::move(extra));
    if (!ok) ++failed_;
  }

  json records_ = json::array();
  std::size_t failed_ = 0;
};

struct Reference {
  SpaceTimeGrid grid;
  AdjacentSystem adj;
  ScaleFamily scales;

  Reference()
      : grid(std::make_shared<const PointCloudSpace>(PointCloudSpace::euclidean_grid(1, 1.0, 16)),
             0.0, 1.0 / 64.0, 64, 2.0),
        adj(build_adjacent(grid.space(), 0.5)) {
    scales = default_scale_family(grid, adj);
  }

  BoxFamily family(BoxMode mode, std::vector<double> lags, std::vector<int> levels = {}) const {
    FamilySpec spec;
    spec.mode = mode;
    spec.levels = std::move(levels);
    return build_family(grid, &adj, spec, lags);
  }

  std::vector<double> weight(WeightPreset preset, double value = 1.0, double shift = 0.0) const {
    WeightSpec s;
    s.preset = preset;
    s.value = value;
    s.shift = shift;
    return make_weight(grid, s);
  }

  std::vector<double> time_field(double sign) const {
    std::vector<double> u(grid.n_cells());
    for (std::size_t i = 0; i < grid.n_points(); ++i)
      for (long s = 0; s < static_cast<long>(grid.nt()); ++s)
        u[grid.cell(i, s)] = sign * grid.time_center(s);
    return u;
  }
};

std::string tag(const std::string& base, double q, double g) {
  std::ostringstream s;
  s << base << "[q=" << q << ",gamma=" << g << "]";
  return s.str();
}

void suite_trivial(const Reference& ref, Checks& c) {
  const auto w = ref.weight(WeightPreset::constant, 3.0);
  for (double g : {0.0, 0.25}) {
    const auto rect = ref.family(BoxMode::rectangle, {g});
    const auto cyl = ref.family(BoxMode::cylinder, {g});
    for (double q : {1.5, 2.0, 3.0}) {
      for (Orientation o : {Orientation::plus, Orientation::minus}) {
        const std::string side = o == Orientation::plus ? "plus" : "minus";
        c.expect_near(tag("trivial.aq_" + side + "_rect", q, g),
                      muckenhoupt_constant(ref.grid, w, q, g, o, rect).constant, 1.0, 1e-12);
        c.expect_near(tag("trivial.aq_" + side + "_cyl", q, g),
                      muckenhoupt_constant(ref.grid, w, q, g, o, cyl).constant, 1.0, 1e-12);
      }
    }
    for (bool cylinder : {false, true}) {
      A1Options opts;
      opts.cylinder = cylinder;
      for (Orientation o : {Orientation::plus, Orientation::minus})
        c.expect_near(tag(std::string("trivial.a1_") + (o == Orientation::plus ? "plus" : "minus") +
                              (cylinder ? "_cyl" : "_rect"),
                          1.0, g),
                      a1_constant(ref.grid, &ref.adj, w, g, o, ref.scales, opts).constant, 1.0, 1e-12);
    }
    for (Orientation o : {Orientation::plus, Orientation::minus})
      if (g > 0.0)
        c.expect_near(tag("trivial.pbmo", 0.0, g), pbmo_norm(ref.grid, w, g, rect, o).norm, 0.0, 1e-12);
  }
  const auto lagfree = ref.family(BoxMode::rectangle, {0.0});
  for (double kappa : {1.0, 0.5, 0.25, 0.1})
    for (RhiSide side : {RhiSide::weight, RhiSide::dual})
      c.expect_near(tag(side == RhiSide::weight ? "trivial.rhi_weight" : "trivial.rhi_dual", 2.0, kappa),
                    rhi_constant(ref.grid, w, 2.0, lagfree, side, kappa).C, 1.0, 1e-12);
  std::vector<double> lambda(ref.grid.n_cells(), 1.0);
  const auto cr = coifman_rochberg(ref.grid, ref.adj, lambda, 0.5, 0.25, ref.scales);
  double dev = 0.0;
  for (double x : cr.weight) dev = std::max(dev, std::abs(x - 1.0));
  c.expect_near("trivial.cr_uniform_weight_dev", dev, 0.0, 1e-12);
  c.expect_near("trivial.cr_uniform_a1", cr.a1.constant, 1.0, 1e-12);
}

void suite_duality(const Reference& ref, Checks& c) {
  const std::vector<std::pair<std::string, std::vector<double>>> weights = {
      {"exp_time", ref.weight(WeightPreset::exp_time, 1.0)},
      {"pow_time", ref.weight(WeightPreset::pow_time, 0.5, 0.5)}};
  for (double g : {0.0, 0.25}) {
    const auto fam = ref.family(BoxMode::rectangle, {g});
    for (const auto& [name, w] : weights) {
      for (double q : {1.5, 2.0, 3.0}) {
        const double lhs = muckenhoupt_constant(ref.grid, w, q, g, Orientation::plus, fam).constant;
        const auto s = sigma(w, q);
        const double rhs = std::pow(
            muckenhoupt_constant(ref.grid, s, conjugate(q), g, Orientation::minus, fam).constant, q - 1.0);
        c.expect_rel(tag("duality." + name, q, g), lhs, rhs, 1e-12);
      }
      if (g > 0.0) {
        std::vector<double> u(w.size()), neg(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
          u[i] = std::log(w[i]);
          neg[i] = -u[i];
        }
        const double plus = pbmo_norm(ref.grid, u, g, fam, Orientation::plus).norm;
        const double minus = pbmo_norm(ref.grid, neg, g, fam, Orientation::minus).norm;
        c.expect_near(tag("duality.pbmo_orientation." + name, 0.0, g), plus, minus, 0.0);
      }
    }
  }
}

void suite_lag(const Reference& ref, Checks& c) {
  const auto w = ref.weight(WeightPreset::exp_time, 1.0);
  const auto fam = ref.family(BoxMode::rectangle, {0.25, 0.5});
  for (double q : {1.5, 2.0, 3.0}) {
    const auto lt = lag_transfer(ref.grid, w, q, {0.25, 0.5}, fam);
    c.expect_true(tag("lag.transfer_violations", q, 0.25), lt.violations == 0,
                  static_cast<double>(lt.violations));
  }
  const auto fam0 = ref.family(BoxMode::rectangle, {0.25});
  for (double theta : {0.5, 1.0, 2.0}) {
    for (bool dual : {false, true}) {
      const auto s = time_shift_family(ref.grid, w, 2.0, 0.25, fam0, theta, dual);
      c.expect_true(tag(dual ? "lag.time_shift_dual" : "lag.time_shift", 2.0, theta),
                    s.violations == 0 && s.n_checked > 0, static_cast<double>(s.violations));
    }
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double q : {1.5, 2.0, 3.0, 4.0}) {
    const double k = muckenhoupt_constant(ref.grid, w, q, 0.25, Orientation::plus, fam0).constant;
    c.expect_le(tag("lag.q_monotone", q, 0.25), k, prev);
    prev = k;
  }
}

void suite_rhi(const Reference& ref, Checks& c) {
  const auto w = ref.weight(WeightPreset::exp_time, 1.0);
  for (BoxMode mode : {BoxMode::rectangle, BoxMode::cylinder}) {
    const auto fam = ref.family(mode, {0.0});
    const std::string m = mode == BoxMode::rectangle ? "rect" : "cyl";
    for (RhiSide side : {RhiSide::weight, RhiSide::dual}) {
      const auto r = reverse_holder_search(ref.grid, w, 2.0, fam, side);
      c.expect_true("rhi.search_" + m + (side == RhiSide::weight ? "_weight" : "_dual"),
                    r.within_budget && std::isfinite(r.C), r.C);
    }
  }
  const auto fam = ref.family(BoxMode::rectangle, {0.0});
  const auto si = self_improvement(ref.grid, w, 3.0, 0.25, ref.family(BoxMode::rectangle, {0.25}),
                                   {0.5});
  c.expect_le("rhi.self_improvement_ratio", si.constants.front() / si.base_constant, 10.0);
  const auto fit = ainfty_check(ref.grid, w, fam, std::vector<double>{0.1, 0.25, 0.5, 1.0});
  c.expect_true("rhi.ainfty_epsilon_positive", fit.epsilon > 0.0 && std::isfinite(fit.Ctilde),
                fit.epsilon);
}

void suite_factorization(const Reference& ref, Checks& c) {
  const auto w = ref.weight(WeightPreset::exp_time, 1.0);
  const double g = 0.25;
  const auto fam = ref.family(BoxMode::rectangle, {g});
  for (double q : {1.5, 2.0, 3.0}) {
    const auto r = rdf_factorize(ref.grid, ref.adj, w, q, g, ref.scales);
    c.expect_true(tag("factorization.converged", q, g), r.converged && r.n_terms <= 200,
                  static_cast<double>(r.n_terms));
    c.expect_le(tag("factorization.residual", q, g), r.residual, 1e-9);
    c.expect_true(tag("factorization.certificates", q, g), r.violations_u + r.violations_v == 0,
                  static_cast<double>(r.violations_u + r.violations_v));
    const double composed = compose_check(ref.grid, r.u, r.v, q, g, fam).constant;
    const double original = muckenhoupt_constant(ref.grid, w, q, g, Orientation::plus, fam).constant;
    c.expect_rel(tag("factorization.compose", q, g), composed, original, 1e-9);
  }
  const auto dec = a1_decompose(ref.grid, ref.adj, w, 0.25, 0.5, ref.scales);
  c.expect_true("factorization.decompose_finite", std::isfinite(dec.sup_log_phi), dec.sup_log_phi);
}

void suite_pbmo(const Reference& ref, Checks& c) {
  const double g = 0.25;
  const auto fam = ref.family(BoxMode::rectangle, {g});
  c.expect_near("pbmo.minus_t", pbmo_norm(ref.grid, ref.time_field(-1.0), g, fam, Orientation::plus).norm,
                0.0, 0.0);
  const auto up = ref.time_field(1.0);
  double prev = -1.0;
  for (long L : {4L, 8L, 16L}) {
    FamilySpec spec;
    spec.mode = BoxMode::cylinder;
    spec.ladder = {L};
    const std::vector<double> lags{g};
    const auto level = build_family(ref.grid, &ref.adj, spec, lags);
    const double n = pbmo_norm(ref.grid, up, g, level, Orientation::plus).norm;
    c.expect_true("pbmo.plus_t_increasing[L=" + std::to_string(L) + "]", n > prev, n);
    prev = n;
  }
  const auto w = ref.weight(WeightPreset::exp_time, 1.0);
  const auto lc = log_correspondence_check(ref.grid, w, 2.0, g, fam);
  c.expect_rel("pbmo.log_correspondence", lc.reverse_aq_const, lc.aq_const, 1e-12);
  const auto jn = jn_profile(ref.grid, ref.time_field(-1.0), fam.boxes.front(), g,
                             std::vector<double>{0.0, 0.01, 0.1});
  double tail = 0.0;
  for (double x : jn.upper_tail) tail = std::max(tail, x);
  c.expect_near("pbmo.jn_minus_t_upper", tail, 0.0, 0.0);
}

void suite_maximal(const Reference& ref, Checks& c, std::uint64_t seed) {
  const auto w = ref.weight(WeightPreset::exp_time, 1.0);
  const double q = 2.0, g = 0.25;
  const auto fam = ref.family(BoxMode::rectangle, {g});
  const auto ts = make_testset(ref.grid, fam, 30, seed);
  const auto weak = weak_type_ratio(ref.grid, &ref.adj, w, q, g, MaximalOp::rect_plus, ref.scales, ts);
  const auto strong = strong_type_ratio(ref.grid, &ref.adj, w, q, g, MaximalOp::rect_plus, ref.scales, ts);
  std::size_t bad = 0;
  for (std::size_t j = 0; j < ts.size(); ++j)
    if (weak.per_field[j] > std::pow(strong.per_field[j], q) * (1.0 + 1e-12)) ++bad;
  c.expect_true("maximal.chebyshev", bad == 0, static_cast<double>(bad));
  c.expect_true("maximal.weak_finite", std::isfinite(weak.ratio), weak.ratio);
  c.expect_true("maximal.strong_finite", std::isfinite(strong.ratio), strong.ratio);
  const std::vector<double> one(ref.grid.n_cells(), 2.0);
  for (double gamma : {0.0, 0.25}) {
    const auto eq = maximal_equivalence_check(ref.grid, ref.adj, one, gamma, ref.scales);
    c.expect_near(tag("maximal.equivalence_constant_fwd", 0.0, gamma), eq.c_fwd, 1.0, 0.0);
    c.expect_near(tag("maximal.equivalence_constant_bwd", 0.0, gamma), eq.c_bwd, 1.0, 0.0);
  }
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"trivial", "duality", "lag", "rhi", "factorization", "pbmo", "maximal", "all"};
}

SuiteResult run_suite(const std::string& name, const RunOptions& opts) {
  const auto names = suite_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw Error(ErrorKind::Config, "unknown suite '" + name + "'");
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = opts.seed ? *opts.seed : 1;
  const Reference ref;
  Checks c;
  const bool all = name == "all";
  if (all || name == "trivial") suite_trivial(ref, c);
  if (all || name == "duality") suite_duality(ref, c);
  if (all || name == "lag") suite_lag(ref, c);
  if (all || name == "rhi") suite_rhi(ref, c);
  if (all || name == "factorization") suite_factorization(ref, c);
  if (all || name == "pbmo") suite_pbmo(ref, c);
  if (all || name == "maximal") suite_maximal(ref, c, seed);

  SuiteResult out;
  out.passed = c.passed();
  out.report = {{"version", version_string()}, {"suite", name},      {"seed", seed},
                {"passed", out.passed},         {"n_checks", c.records().size()},
                {"n_failed", c.failed()},       {"checks", c.records()}};
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!opts.out_dir.empty()) {
    const std::filesystem::path dir(opts.out_dir);
    write_text_file((dir / "report.json").string(), out.report.dump(2) + "\n");
    write_text_file((dir / "timing.json").string(),
                    json{{"name", "suite " + name}, {"seconds", out.seconds}}.dump(2) + "\n");
  }
  return out;
}

}  // namespace parweight
