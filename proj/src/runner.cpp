#include "parweight/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include <toml.hpp>

#include "parweight/analysis.hpp"
#include "parweight/error.hpp"
#include "parweight/factorize.hpp"
#include "parweight/io.hpp"
#include "parweight/pbmo.hpp"
#include "parweight/version.hpp"

namespace parweight {

using nlohmann::json;

namespace {

json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json out = json::object();
    for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
    return out;
  }
  if (const auto* a = node.as_array()) {
    json out = json::array();
    for (const auto& v : *a) out.push_back(toml_to_json(v));
    return out;
  }
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  if (const auto* v = node.as_string()) return v->get();
  throw Error(ErrorKind::Config, "unsupported TOML value (dates and times are not accepted)");
}

}  // namespace

json parse_config(const std::string& text, bool is_toml) {
  if (is_toml) {
    try {
      return toml_to_json(toml::parse(text));
    } catch (const toml::parse_error& e) {
      std::ostringstream msg;
      msg << "TOML line " << e.source().begin.line << ": " << e.description();
      throw Error(ErrorKind::Config, msg.str());
    }
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("JSON: ") + e.what());
  }
}

json load_config(const std::string& path) {
  const bool is_toml = std::filesystem::path(path).extension() == ".toml";
  json cfg = parse_config(read_text_file(path), is_toml);
  cfg["_base_dir"] = std::filesystem::path(path).parent_path().string();
  return cfg;
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e))
    return is_numeric_failure(err->kind()) ? 3 : 2;
  return 2;
}

namespace {

// Field access with the dotted path in every error message.
class Cfg {
 public:
  Cfg(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  Cfg sub(const std::string& key) const {
    static const json empty = json::object();
    if (!has(key)) return Cfg(empty, name(key));
    if (!j_.at(key).is_object()) fail(key, "must be a table");
    return Cfg(j_.at(key), name(key));
  }

  double num(const std::string& key, std::optional<double> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      fail(key, "is required");
    }
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  long integer(const std::string& key, std::optional<long> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      fail(key, "is required");
    }
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "must be an integer");
    return v.get<long>();
  }

  std::string str(const std::string& key, std::optional<std::string> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      fail(key, "is required");
    }
    if (!j_.at(key).is_string()) fail(key, "must be a string");
    return j_.at(key).get<std::string>();
  }

  bool flag(const std::string& key, bool def) const {
    if (!has(key)) return def;
    if (!j_.at(key).is_boolean()) fail(key, "must be true or false");
    return j_.at(key).get<bool>();
  }

  std::vector<double> nums(const std::string& key, std::vector<double> def) const {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_array()) fail(key, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) fail(key, "must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<long> ints(const std::string& key) const {
    std::vector<long> out;
    if (!has(key)) return out;
    const auto& v = j_.at(key);
    if (!v.is_array()) fail(key, "must be an array of integers");
    for (const auto& x : v) {
      if (!x.is_number_integer()) fail(key, "must be an array of integers");
      out.push_back(x.get<long>());
    }
    return out;
  }

  double lag(const std::string& key, double def) const {
    const double g = num(key, def);
    if (!(g >= 0.0 && g < 1.0)) fail(key, "must lie in [0,1), got " + fmt(g));
    return g;
  }

  double exponent(const std::string& key, double def) const {
    const double q = num(key, def);
    if (!(q > 1.0)) fail(key, "must exceed 1, got " + fmt(q));
    return q;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw Error(ErrorKind::Config, name(key) + " " + what);
  }

  const json& raw() const { return j_; }

 private:
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  static std::string fmt(double x) {
    std::ostringstream s;
    s << x;
    return s.str();
  }

  const json& j_;
  std::string path_;
};

Orientation parse_orientation(const Cfg& c, const std::string& key) {
  const std::string s = c.str(key, "plus");
  if (s == "plus") return Orientation::plus;
  if (s == "minus") return Orientation::minus;
  c.fail(key, "must be plus or minus");
}

MaximalOp parse_maximal_op(const Cfg& c, const std::string& key, const std::string& def) {
  static const std::map<std::string, MaximalOp> ops = {
      {"rect_plus", MaximalOp::rect_plus},       {"rect_minus", MaximalOp::rect_minus},
      {"cyl_plus", MaximalOp::cyl_plus},         {"cyl_minus", MaximalOp::cyl_minus},
      {"rect_restricted", MaximalOp::rect_restricted},
      {"hardy_littlewood", MaximalOp::hardy_littlewood}};
  const auto it = ops.find(c.str(key, def));
  if (it == ops.end()) c.fail(key, "names an unknown maximal operator");
  return it->second;
}

std::string to_string(Orientation o) { return o == Orientation::plus ? "plus" : "minus"; }

json box_json(const ParabolicBox& b) {
  json j;
  j["shape"] = b.shape == Shape::cylinder ? "cylinder" : "rectangle";
  if (b.shape == Shape::cylinder) {
    j["x"] = b.x;
  } else {
    j["cube"] = {{"tau", b.cube.tau}, {"k", b.cube.k}, {"alpha", b.cube.alpha}};
  }
  j["l"] = b.l;
  j["t_index"] = b.t_index;
  j["L_steps"] = b.L_steps;
  j["n_points"] = b.members ? b.members->size() : 0;
  return j;
}

class Context {
 public:
  Context(const json& config, const RunOptions& opts) : root_(config, "") {
    base_dir_ = config.value("_base_dir", std::string());
    seed_ = opts.seed ? *opts.seed : static_cast<std::uint64_t>(root_.integer("seed", 1));
    build_space();
    const Cfg g = root_.sub("grid");
    const long nt = g.integer("nt");
    if (nt <= 0) g.fail("nt", "must be positive");
    const double dt = g.num("dt", 1.0 / static_cast<double>(nt));
    if (!(dt > 0.0)) g.fail("dt", "must be positive");
    const double p = g.num("p", 2.0);
    if (!(p > 1.0)) g.fail("p", "must exceed 1");
    grid_ = std::make_unique<SpaceTimeGrid>(space_, g.num("t0", 0.0), dt,
                                            static_cast<std::size_t>(nt), p);
  }

  const Cfg& root() const { return root_; }
  const SpaceTimeGrid& grid() const { return *grid_; }
  std::uint64_t seed() const { return seed_; }

  const AdjacentSystem& adj() {
    if (!adj_) {
      const Cfg d = root_.sub("dyadic");
      const bool is_grid = space_->kind() == SpaceKind::euclidean_grid;
      const double delta = d.num("delta", is_grid ? 0.5 : 1.0 / 96.0);
      if (!(delta > 0.0 && delta < 1.0)) d.fail("delta", "must lie in (0,1)");
      if (d.has("k_min") || d.has("k_max")) {
        adj_ = build_adjacent(*space_, delta, static_cast<int>(d.integer("k_min", 0)),
                              static_cast<int>(d.integer("k_max", 1)), 3, &warnings_);
      } else {
        adj_ = build_adjacent(*space_, delta, &warnings_);
      }
    }
    return *adj_;
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

  std::vector<double> weight() {
    const Cfg w = root_.sub("weight");
    const std::string preset = w.str("preset", "constant");
    WeightSpec spec;
    if (preset == "constant") {
      spec.preset = WeightPreset::constant;
      spec.value = w.num("c", 1.0);
      if (!(spec.value > 0.0)) w.fail("c", "must be positive");
    } else if (preset == "exp_time") {
      spec.preset = WeightPreset::exp_time;
      spec.value = w.num("a", 1.0);
    } else if (preset == "pow_time") {
      spec.preset = WeightPreset::pow_time;
      spec.value = w.num("alpha");
      spec.shift = w.num("shift", 0.0);
    } else if (preset == "pow_space") {
      spec.preset = WeightPreset::pow_space;
      spec.value = w.num("alpha");
      spec.shift = w.num("shift", 0.0);
    } else if (preset == "file") {
      spec.preset = WeightPreset::file;
      spec.path = resolve(w.str("path"));
    } else {
      w.fail("preset", "names an unknown weight preset '" + preset + "'");
    }
    return make_weight(*grid_, spec);
  }

  BoxFamily family(std::vector<double> lags) {
    const Cfg f = root_.sub("family");
    FamilySpec spec;
    const std::string mode = f.str("mode", "rectangle");
    if (mode == "rectangle")
      spec.mode = BoxMode::rectangle;
    else if (mode == "cylinder")
      spec.mode = BoxMode::cylinder;
    else
      f.fail("mode", "must be rectangle or cylinder");
    for (long k : f.ints("levels")) spec.levels.push_back(static_cast<int>(k));
    spec.ladder = f.ints("ladder");
    const long cs = f.integer("center_stride", 1), ts = f.integer("time_stride", 1);
    const long mb = f.integer("max_boxes", 20000);
    if (cs < 1) f.fail("center_stride", "must be >= 1");
    if (ts < 1) f.fail("time_stride", "must be >= 1");
    if (mb < 1) f.fail("max_boxes", "must be >= 1");
    spec.center_stride = static_cast<std::size_t>(cs);
    spec.time_stride = static_cast<std::size_t>(ts);
    spec.max_boxes = static_cast<std::size_t>(mb);
    return build_family(*grid_, &adj(), spec, lags);
  }

  ScaleFamily scales() {
    const Cfg s = root_.sub("scales");
    ScaleFamily fam = default_scale_family(*grid_, adj());
    if (s.has("levels")) {
      fam.levels.clear();
      for (long k : s.ints("levels")) fam.levels.push_back(static_cast<int>(k));
    }
    fam.ladder = s.nums("ladder", {});
    fam.tau = static_cast<unsigned>(s.integer("tau", 0));
    fam.restrict_level = static_cast<int>(s.integer("restrict_level", fam.levels.back()));
    return fam;
  }

  std::string resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    if (path.is_absolute() || base_dir_.empty()) return p;
    return (std::filesystem::path(base_dir_) / path).string();
  }

  std::vector<std::pair<std::string, std::vector<double>>> dumps;

 private:
  void build_space() {
    const Cfg s = root_.sub("space");
    if (s.has("file")) {
      space_ = load_space(resolve(s.str("file")));
    } else if (s.has("grid")) {
      const Cfg g = s.sub("grid");
      const long n = g.integer("n_cells");
      if (n <= 0) g.fail("n_cells", "must be positive");
      space_ = std::make_shared<const PointCloudSpace>(PointCloudSpace::euclidean_grid(
          static_cast<int>(g.integer("dim", 1)), g.num("extent", 1.0), static_cast<std::size_t>(n)));
    } else if (s.has("points") || s.has("matrix")) {
      space_ = space_from_json(s.raw().dump());
    } else {
      s.fail("grid", "or space.file or space.points is required");
    }
  }

  Cfg root_;
  std::string base_dir_;
  std::uint64_t seed_ = 1;
  std::shared_ptr<const PointCloudSpace> space_;
  std::unique_ptr<SpaceTimeGrid> grid_;
  std::optional<AdjacentSystem> adj_;
  std::vector<std::string> warnings_;
};

using OpFn = std::function<json(Context&, const Cfg&)>;

json op_validate_space(Context& ctx, const Cfg&) {
  const auto r = validate_space(ctx.grid().space());
  return {{"min_K0", r.min_K0}, {"is_symmetric", r.is_symmetric},
          {"declared_K0_ok", r.declared_K0_ok}, {"n_points", ctx.grid().n_points()}};
}

json op_doubling(Context& ctx, const Cfg& op) {
  const auto& space = ctx.grid().space();
  std::vector<double> radii = op.nums("radii", {});
  if (radii.empty())
    for (double r = space.diameter() / 2.0; r > 1e-12 && radii.size() < 8; r /= 2.0) radii.push_back(r);
  for (double r : radii)
    if (!(r > 0.0)) op.fail("radii", "must be positive");
  std::vector<std::size_t> centers(space.size());
  for (std::size_t i = 0; i < centers.size(); ++i) centers[i] = i;
  return {{"doubling_constant", doubling_constant(space, centers, radii)}, {"radii", radii}};
}

json op_adjacent(Context& ctx, const Cfg&) {
  const auto& adj = ctx.adj();
  return {{"K", adj.size()},
          {"location_const", adj.location_const},
          {"k_min", adj.k_min()},
          {"k_max", adj.k_max()},
          {"fast_path", adj.grids.front().fast_path},
          {"warnings", ctx.warnings()}};
}

json op_muckenhoupt(Context& ctx, const Cfg& op) {
  const double q = op.exponent("q", 2.0), g = op.lag("gamma", 0.0);
  const Orientation o = parse_orientation(op, "orientation");
  const auto w = ctx.weight();
  const auto fam = ctx.family({g});
  const auto r = muckenhoupt_constant(ctx.grid(), w, q, g, o, fam);
  return {{"constant", r.constant}, {"q", q}, {"gamma", g}, {"orientation", to_string(o)},
          {"n_boxes", r.n_boxes}, {"worst_box", box_json(*r.worst_box)}};
}

json op_a1(Context& ctx, const Cfg& op) {
  const double g = op.lag("gamma", 0.0);
  const Orientation o = parse_orientation(op, "orientation");
  A1Options opts;
  opts.cylinder = op.str("mode", "rectangle") == "cylinder";
  const auto w = ctx.weight();
  const auto r = a1_constant(ctx.grid(), &ctx.adj(), w, g, o, ctx.scales(), opts);
  return {{"constant", r.constant}, {"gamma", g}, {"orientation", to_string(o)},
          {"worst_cell", r.worst_cell}, {"n_covered", r.n_covered}};
}

json op_time_shift(Context& ctx, const Cfg& op) {
  const double q = op.exponent("q", 2.0), g = op.lag("gamma", 0.0);
  const double theta = op.num("theta", 1.0);
  if (!(theta > 0.0)) op.fail("theta", "must be positive");
  const auto w = ctx.weight();
  const auto fam = ctx.family({g});
  const auto s = time_shift_family(ctx.grid(), w, q, g, fam, theta, op.flag("dual", false));
  return {{"constant", s.constant}, {"exponent", s.exponent}, {"n_checked", s.n_checked},
          {"n_skipped", s.n_skipped}, {"violations", s.violations},
          {"violations_raw_constant", s.violations_raw}, {"worst_ratio", s.worst_ratio}};
}

json op_two_offset(Context& ctx, const Cfg& op) {
  const double q = op.exponent("q", 2.0), g = op.lag("gamma", 0.0);
  const auto w = ctx.weight();
  const auto fam = ctx.family({g});
  const auto r = two_offset_constant(ctx.grid(), w, q, g, fam, op.num("theta1", 0.0),
                                     op.num("theta2", 0.0));
  return {{"constant", r.constant}, {"n_boxes", r.n_boxes}, {"n_skipped", r.n_skipped}};
}

json op_maximal(Context& ctx, const Cfg& op) {
  const double g = op.lag("gamma", 0.0);
  const MaximalOp m = parse_maximal_op(op, "operator", "rect_plus");
  const auto w = ctx.weight();
  const auto mf = maximal_field(ctx.grid(), &ctx.adj(), w, m, g, ctx.scales());
  double mx = 0.0;
  for (double v : mf.values) mx = std::max(mx, v);
  ctx.dumps.emplace_back("maximal.csv", mf.values);
  return {{"operator", to_string(m)}, {"gamma", g}, {"n_covered", mf.n_covered()}, {"max", mx}};
}

std::vector<std::vector<double>> testset(Context& ctx, const Cfg& op, double gamma) {
  const long n = op.integer("n_fields", 50);
  if (n < 1) op.fail("n_fields", "must be positive");
  const std::string kind = op.str("testset", "family");
  if (kind == "geometric")
    return geometric_testset(ctx.grid(), static_cast<std::size_t>(n), ctx.seed());
  if (kind != "family") op.fail("testset", "must be family or geometric");
  return make_testset(ctx.grid(), ctx.family({gamma}), static_cast<std::size_t>(n), ctx.seed());
}

json ratio_json(const NormRatio& r) {
  return {{"ratio", r.ratio}, {"worst_field", r.worst_field}, {"skipped", r.skipped}};
}

json op_weak(Context& ctx, const Cfg& op) {
  const double q = op.exponent("q", 2.0), g = op.lag("gamma", 0.0);
  const MaximalOp m = parse_maximal_op(op, "operator", "rect_plus");
  const auto w = ctx.weight();
  const auto ts = testset(ctx, op, g);
  const auto thresholds = op.nums("thresholds", {});
  return ratio_json(weak_type_ratio(ctx.grid(), &ctx.adj(), w, q, g, m, ctx.scales(), ts, thresholds));
}

json op_strong(Context& ctx, const Cfg& op) {
  const double q = op.exponent("q", 2.0), g = op.lag("gamma", 0.0);
  const MaximalOp m = parse_maximal_op(op, "operator", "rect_plus");
  const auto w = ctx.weight();
  const auto ts = testset(ctx, op, g);
  return ratio_json(strong_type_ratio(ctx.grid(), &ctx.adj(), w, q, g, m, ctx.scales(), ts));
}

json op_equivalence(Context& ctx, const Cfg& op) {
  const double g = op.lag("gamma", 0.0);
  const auto w = ctx.weight();
  const auto r = maximal_equivalence_check(ctx.grid(), ctx.adj(), w, g, ctx.scales());
  return {{"gamma1", r.gamma1}, {"gamma2", r.gamma2}, {"c_fwd", r.c_fwd}, {"c_bwd", r.c_bwd},
          {"n_covered", r.n_covered}};
}

json op_rhi(Context& ctx, const Cfg& op) {
  const double q = op.exponent("q", 2.0);
  const std::string side = op.str("side", "weight");
  if (side != "weight" && side != "dual") op.fail("side", "must be weight or dual");
  const auto w = ctx.weight();
  const auto fam = ctx.family({0.0});
  const auto r = reverse_holder_search(ctx.grid(), w, q, fam,
                                       side == "weight" ? RhiSide::weight : RhiSide::dual,
                                       op.nums("kappa_ladder", {1.0, 0.5, 0.25, 0.1, 0.05}),
                                       op.num("C_budget", 8.0));
  return {{"kappa", r.kappa}, {"C", r.C}, {"within_budget", r.within_budget},
          {"side", side}, {"ladder_kappa", r.ladder_kappa}, {"ladder_C", r.ladder_C},
          {"worst_box", box_json(fam.boxes[r.worst_index])}};
}

json op_self_improvement(Context& ctx, const Cfg& op) {
  const double q = op.exponent("q", 3.0), g = op.lag("gamma", 0.0);
  const auto w = ctx.weight();
  const auto fam = ctx.family({g});
  const auto r = self_improvement(ctx.grid(), w, q, g, fam, op.nums("epsilons", {0.25, 0.5}),
                                  op.num("multiple", 10.0));
  return {{"epsilon", r.epsilon}, {"constant", r.constant}, {"base_constant", r.base_constant},
          {"exhausted", r.exhausted}, {"epsilons", r.epsilons}, {"constants", r.constants}};
}

json op_ainfty(Context& ctx, const Cfg& op) {
  const auto w = ctx.weight();
  const auto fam = ctx.family({0.0});
  const auto fr = op.nums("fractions", {0.1, 0.25, 0.5, 1.0});
  const auto r = ainfty_check(ctx.grid(), w, fam, fr);
  return {{"epsilon", r.epsilon}, {"Ctilde", r.Ctilde}, {"max_residual", r.max_residual},
          {"n_points", r.n_points}};
}

json op_lag_transfer(Context& ctx, const Cfg& op) {
  const double q = op.exponent("q", 2.0);
  const auto gammas = op.nums("gammas", {0.25, 0.5});
  for (double g : gammas)
    if (!(g >= 0.0 && g < 1.0)) op.fail("gammas", "entries must lie in [0,1)");
  const auto w = ctx.weight();
  const auto fam = ctx.family(gammas);
  const auto r = lag_transfer(ctx.grid(), w, q, gammas, fam);
  return {{"gammas", r.gammas}, {"constants", r.constants}, {"ratios", r.ratios},
          {"violations", r.violations}, {"worst_slack", r.worst_slack}, {"n_boxes", r.n_boxes}};
}

json op_rdf(Context& ctx, const Cfg& op) {
  const double q = op.exponent("q", 2.0), g = op.lag("gamma", 0.25);
  FactorizeOptions fo;
  fo.tol = op.num("tol", 1e-10);
  fo.max_terms = static_cast<std::size_t>(op.integer("max_terms", 200));
  fo.seed = ctx.seed();
  const auto w = ctx.weight();
  const auto r = rdf_factorize(ctx.grid(), ctx.adj(), w, q, g, ctx.scales(), fo);
  const auto fam = ctx.family({g});
  const double composed = compose_check(ctx.grid(), r.u, r.v, q, g, fam).constant;
  const double original = muckenhoupt_constant(ctx.grid(), w, q, g, Orientation::plus, fam).constant;
  ctx.dumps.emplace_back("u.csv", r.u);
  ctx.dumps.emplace_back("v.csv", r.v);
  ctx.dumps.emplace_back("phi.csv", r.phi);
  return {{"T_norm_est", r.T_norm_est}, {"n_terms", r.n_terms}, {"converged", r.converged},
          {"retried", r.retried}, {"dual_route", r.dual_route}, {"residual", r.residual},
          {"a1_plus_const_u", r.a1_plus_const_u}, {"a1_minus_const_v", r.a1_minus_const_v},
          {"bound_u", r.bound_u}, {"bound_v", r.bound_v}, {"violations_u", r.violations_u},
          {"violations_v", r.violations_v}, {"compose_constant", composed},
          {"original_constant", original}};
}

std::vector<double> measure_field(Context& ctx, const Cfg& op) {
  const Cfg nu = op.sub("nu");
  const std::string kind = nu.str("kind", "uniform");
  const auto& grid = ctx.grid();
  std::vector<double> out(grid.n_cells(), 0.0);
  if (kind == "uniform") {
    std::fill(out.begin(), out.end(), 1.0);
  } else if (kind == "point") {
    const long i = nu.integer("point", static_cast<long>(grid.n_points() / 2));
    const long s = nu.integer("time", static_cast<long>(grid.nt() / 2));
    if (i < 0 || i >= static_cast<long>(grid.n_points())) nu.fail("point", "is out of range");
    if (s < 0 || s >= static_cast<long>(grid.nt())) nu.fail("time", "is out of range");
    const auto pi = static_cast<std::size_t>(i);
    out[grid.cell(pi, s)] = nu.num("mass", 1.0) / grid.cell_measure(pi);
  } else if (kind == "weight") {
    out = ctx.weight();
  } else {
    nu.fail("kind", "must be uniform, point or weight");
  }
  return out;
}

json op_cr(Context& ctx, const Cfg& op) {
  const double eps = op.num("epsilon", 0.5), g = op.lag("gamma", 0.25);
  if (!(eps >= 0.0 && eps < 1.0)) op.fail("epsilon", "must lie in [0,1)");
  const auto nu = measure_field(ctx, op);
  const auto cr = coifman_rochberg(ctx.grid(), ctx.adj(), nu, eps, g, ctx.scales());
  ctx.dumps.emplace_back("weight.csv", cr.weight);
  return {{"epsilon", eps}, {"gamma", g}, {"a1_const", cr.a1.constant},
          {"n_covered", cr.a1.n_covered}, {"n_skipped", cr.a1.n_skipped}};
}

json op_a1_decompose(Context& ctx, const Cfg& op) {
  const double gp = op.lag("gamma_prime", 0.5);
  const double kappa = op.num("kappa", 0.5);
  if (!(kappa > 0.0)) op.fail("kappa", "must be positive");
  const auto w = ctx.weight();
  const auto cr = a1_decompose(ctx.grid(), ctx.adj(), w, gp, kappa, ctx.scales());
  ctx.dumps.emplace_back("phi.csv", cr.phi);
  return {{"epsilon", cr.epsilon}, {"sup_log_phi", cr.sup_log_phi}, {"a1_const", cr.a1.constant}};
}

std::vector<double> pbmo_field(Context& ctx, const Cfg& op) {
  const std::string kind = op.str("field", "minus_log_weight");
  const auto& grid = ctx.grid();
  std::vector<double> u(grid.n_cells());
  if (kind == "time" || kind == "neg_time") {
    const double sign = kind == "time" ? 1.0 : -1.0;
    for (std::size_t i = 0; i < grid.n_points(); ++i)
      for (long s = 0; s < static_cast<long>(grid.nt()); ++s)
        u[grid.cell(i, s)] = sign * grid.time_center(s);
  } else if (kind == "minus_log_weight" || kind == "log_weight") {
    const auto w = ctx.weight();
    const double sign = kind == "log_weight" ? 1.0 : -1.0;
    for (std::size_t c = 0; c < u.size(); ++c) u[c] = sign * std::log(w[c]);
  } else {
    op.fail("field", "must be time, neg_time, log_weight or minus_log_weight");
  }
  return u;
}

double pbmo_lag(const Cfg& op) {
  const double g = op.num("gamma", 0.25);
  if (!(g > 0.0 && g < 1.0)) op.fail("gamma", "must lie in (0,1)");
  return g;
}

json op_pbmo(Context& ctx, const Cfg& op) {
  const double g = pbmo_lag(op);
  const Orientation o = parse_orientation(op, "orientation");
  const auto u = pbmo_field(ctx, op);
  const auto fam = ctx.family({g});
  const auto r = pbmo_norm(ctx.grid(), u, g, fam, o);
  return {{"norm", r.norm}, {"gamma", g}, {"orientation", to_string(o)},
          {"n_boxes", r.per_box.size()}, {"worst_box", box_json(fam.boxes[r.worst_index])}};
}

json op_jn(Context& ctx, const Cfg& op) {
  const double g = pbmo_lag(op);
  const auto u = pbmo_field(ctx, op);
  const auto fam = ctx.family({g});
  const long b = op.integer("box_index", 0);
  if (b < 0 || b >= static_cast<long>(fam.boxes.size())) op.fail("box_index", "is out of range");
  const auto xi = op.nums("xi", {0.0, 0.05, 0.1, 0.2, 0.4, 0.8});
  const auto prof = jn_profile(ctx.grid(), u, fam.boxes[static_cast<std::size_t>(b)], g, xi);
  return {{"a", prof.a}, {"xi", prof.xi}, {"upper_tail", prof.upper_tail},
          {"lower_tail", prof.lower_tail}, {"A", prof.A}, {"B", prof.B},
          {"max_log_residual", prof.max_log_residual}, {"degenerate", prof.degenerate}};
}

json op_log_corr(Context& ctx, const Cfg& op) {
  const double q = op.exponent("q", 2.0);
  const double g = pbmo_lag(op);
  const auto w = ctx.weight();
  const auto fam = ctx.family({g});
  const auto r = log_correspondence_check(ctx.grid(), w, q, g, fam);
  return {{"pbmo_norm_of_minus_log", r.pbmo_norm_of_minus_log}, {"aq_const", r.aq_const},
          {"reverse_aq_const", r.reverse_aq_const}};
}

const std::map<std::string, OpFn>& operations() {
  static const std::map<std::string, OpFn> ops = {
      {"validate_space", op_validate_space},
      {"doubling_constant", op_doubling},
      {"build_adjacent", op_adjacent},
      {"muckenhoupt_constant", op_muckenhoupt},
      {"a1_constant", op_a1},
      {"time_shift_check", op_time_shift},
      {"two_offset_constant", op_two_offset},
      {"maximal_field", op_maximal},
      {"weak_type_ratio", op_weak},
      {"strong_type_ratio", op_strong},
      {"maximal_equivalence_check", op_equivalence},
      {"reverse_holder_search", op_rhi},
      {"self_improvement", op_self_improvement},
      {"ainfty_check", op_ainfty},
      {"lag_transfer", op_lag_transfer},
      {"rdf_factorize", op_rdf},
      {"coifman_rochberg", op_cr},
      {"a1_decompose", op_a1_decompose},
      {"pbmo_norm", op_pbmo},
      {"jn_profile", op_jn},
      {"log_correspondence_check", op_log_corr},
  };
  return ops;
}

void write_timing(const std::string& dir, const std::string& what, double seconds) {
  json t = {{"name", what}, {"seconds", seconds}};
  write_text_file((std::filesystem::path(dir) / "timing.json").string(), t.dump(2) + "\n");
}

}  // namespace

RunResult run_config(const json& config, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  if (!config.is_object()) throw Error(ErrorKind::Config, "config must be a table");
  const Cfg root(config, "");
  const Cfg op = root.sub("op");
  const std::string name = op.str("name");
  const auto& ops = operations();
  const auto it = ops.find(name);
  if (it == ops.end()) op.fail("name", "names an unknown operation '" + name + "'");

  Context ctx(config, opts);
  json echo = config;
  echo.erase("_base_dir");

  RunResult out;
  out.report = {{"version", version_string()},
                {"op", name},
                {"seed", ctx.seed()},
                {"config", echo},
                {"result", it->second(ctx, op)}};
  if (!ctx.warnings().empty()) out.report["warnings"] = ctx.warnings();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!opts.out_dir.empty()) {
    const std::filesystem::path dir(opts.out_dir);
    write_text_file((dir / "report.json").string(), out.report.dump(2) + "\n");
    if (root.sub("output").flag("fields", true))
      for (const auto& [file, values] : ctx.dumps)
        write_field_csv((dir / file).string(), ctx.grid(), values);
    write_timing(opts.out_dir, name, out.seconds);
  }
  return out;
}

}  // namespace parweight
