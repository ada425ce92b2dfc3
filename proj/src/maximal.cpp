#include "parweight/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "parweight/error.hpp"
#include "parweight/parallel.hpp"

namespace parweight {

std::string to_string(MaximalOp op) {
  switch (op) {
    case MaximalOp::rect_plus: return "rect_plus";
    case MaximalOp::rect_minus: return "rect_minus";
    case MaximalOp::cyl_plus: return "cyl_plus";
    case MaximalOp::cyl_minus: return "cyl_minus";
    case MaximalOp::rect_restricted: return "rect_restricted";
    case MaximalOp::hardy_littlewood: return "hardy_littlewood";
  }
  return "unknown";
}

std::size_t MaximalField::n_covered() const {
  return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), 1));
}

ScaleFamily default_scale_family(const SpaceTimeGrid& grid, const AdjacentSystem& adj) {
  ScaleFamily fam;
  const double half = static_cast<double>(grid.nt()) / 2.0;
  for (int k = adj.k_min(); k <= adj.k_max(); ++k) {
    const double m = rectangle_L_steps(grid, adj, k);
    if (m >= 1.0 - 1e-9 && m <= half + 1e-9) fam.levels.push_back(k);
  }
  if (fam.levels.empty()) throw Error(ErrorKind::EmptyFamily, "no level fits the time grid");
  fam.restrict_level = fam.levels.back();
  return fam;
}

std::vector<double> cylinder_ladder(const SpaceTimeGrid& grid, const AdjacentSystem& adj,
                                    const ScaleFamily& fam) {
  if (!fam.ladder.empty()) return fam.ladder;
  std::vector<double> ladder;
  for (int k : fam.levels) ladder.push_back(rectangle_L_steps(grid, adj, k));
  return ladder;
}

namespace {

constexpr double kInvalid = -1.0;

class Averager {
 public:
  Averager(const SpaceTimeGrid& grid, std::span<const double> f, bool naive)
      : grid_(grid), abs_(make_abs(f)), naive_(naive), field_(grid, abs_) {}

  // kInvalid when the span is empty or leaves the grid.
  double operator()(const std::vector<std::size_t>& members, TimeSpan span) const {
    if (span.empty() || !grid_.contains(span) || members.empty()) return kInvalid;
    Region r{members, span};
    return naive_ ? region_average_naive(grid_, abs_, r) : region_average(grid_, field_, r);
  }

 private:
  static std::vector<double> make_abs(std::span<const double> f) {
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::fabs(f[i]);
    return out;
  }

  const SpaceTimeGrid& grid_;
  std::vector<double> abs_;
  bool naive_;
  Field field_;
};

TimeSpan lagged_span(long c, double m, double gamma, bool upper) {
  const double cd = static_cast<double>(c);
  return upper ? SpaceTimeGrid::cells_in_steps(cd + gamma * m, cd + m)
               : SpaceTimeGrid::cells_in_steps(cd - m, cd - gamma * m);
}

void bump(MaximalField& out, std::size_t cell, double v) {
  if (v < 0.0) return;
  if (!out.covered[cell] || v > out.values[cell]) out.values[cell] = v;
  out.covered[cell] = 1;
}

struct CubeItem {
  unsigned tau;
  int k;
  std::size_t alpha;
};

}  // namespace

MaximalField maximal_field(const SpaceTimeGrid& grid, const AdjacentSystem* adj,
                           std::span<const double> f, MaximalOp op, double gamma,
                           const ScaleFamily& fam, MaximalOptions opts) {
  if (f.size() != grid.n_cells()) throw Error(ErrorKind::InvalidArgument, "field size mismatch");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorKind::InvalidArgument, "lag must lie in [0,1)");

  MaximalField out;
  out.op = op;
  out.gamma = gamma;
  out.values.assign(grid.n_cells(), 0.0);
  out.covered.assign(grid.n_cells(), 0);
  const Averager avg(grid, f, opts.naive);
  const long nt = static_cast<long>(grid.nt());
  const std::size_t n = grid.n_points();

  switch (op) {
    case MaximalOp::rect_plus:
    case MaximalOp::rect_minus:
    case MaximalOp::rect_restricted: {
      if (!adj) throw Error(ErrorKind::InvalidArgument, "rectangle operators need an adjacent system");
      const bool upper = op != MaximalOp::rect_minus;
      std::vector<CubeItem> items;
      for (unsigned tau = 0; tau < adj->size(); ++tau) {
        if (op == MaximalOp::rect_restricted && tau != fam.tau) continue;
        for (int k : fam.levels) {
          if (op == MaximalOp::rect_restricted && k > fam.restrict_level) continue;
          const auto& lvl = adj->grids[tau].level(k);
          for (std::size_t a = 0; a < lvl.cubes.size(); ++a) items.push_back({tau, k, a});
        }
      }
      if (op == MaximalOp::rect_restricted && fam.tau >= adj->size())
        throw Error(ErrorKind::InvalidArgument, "restricted grid index out of range");
      std::vector<std::vector<double>> table(items.size());
      parallel_for(items.size(), [&](std::size_t it) {
        const auto& item = items[it];
        const auto& cube = adj->grids[item.tau].cube(item.k, item.alpha);
        const double m = rectangle_L_steps(grid, *adj, item.k);
        auto& row = table[it];
        row.resize(static_cast<std::size_t>(nt + 1));
        for (long c = 0; c <= nt; ++c)
          row[static_cast<std::size_t>(c)] = avg(cube.members, lagged_span(c, m, gamma, upper));
      });
      for (std::size_t it = 0; it < items.size(); ++it) {
        const auto& cube = adj->grids[items[it].tau].cube(items[it].k, items[it].alpha);
        for (std::size_t i : cube.members) {
          for (long c = 0; c <= nt; ++c) {
            const double v = table[it][static_cast<std::size_t>(c)];
            if (c < nt) bump(out, grid.cell(i, c), v);
            if (c > 0) bump(out, grid.cell(i, c - 1), v);
          }
        }
      }
      break;
    }
    case MaximalOp::cyl_plus:
    case MaximalOp::cyl_minus: {
      const bool upper = op == MaximalOp::cyl_plus;
      const std::vector<double> ladder = adj ? cylinder_ladder(grid, *adj, fam) : fam.ladder;
      if (ladder.empty()) throw Error(ErrorKind::EmptyFamily, "empty cylinder ladder");
      parallel_for(n, [&](std::size_t i) {
        for (double m : ladder) {
          const double l = std::pow(m * grid.dt(), 1.0 / grid.p());
          const auto members = grid.space().ball_members({i, l});
          for (long c = 0; c <= nt; ++c) {
            const double v = avg(members, lagged_span(c, m, gamma, upper));
            if (c < nt) bump(out, grid.cell(i, c), v);
            if (c > 0) bump(out, grid.cell(i, c - 1), v);
          }
        }
      });
      break;
    }
    case MaximalOp::hardy_littlewood: {
      const std::vector<double> ladder = adj ? cylinder_ladder(grid, *adj, fam) : fam.ladder;
      if (ladder.empty()) throw Error(ErrorKind::EmptyFamily, "empty cylinder ladder");
      struct Cyl {
        std::vector<std::size_t> members;
        std::vector<double> avgs;  // per center index
        double m;
      };
      std::vector<Cyl> cyls(n * ladder.size());
      parallel_for(cyls.size(), [&](std::size_t idx) {
        const std::size_t y = idx / ladder.size();
        Cyl& cyl = cyls[idx];
        cyl.m = ladder[idx % ladder.size()];
        cyl.members = grid.space().ball_members({y, std::pow(cyl.m * grid.dt(), 1.0 / grid.p())});
        cyl.avgs.resize(static_cast<std::size_t>(nt + 1));
        for (long c = 0; c <= nt; ++c) {
          const double cd = static_cast<double>(c);
          cyl.avgs[static_cast<std::size_t>(c)] =
              avg(cyl.members, SpaceTimeGrid::cells_in_open_steps(cd - cyl.m, cd + cyl.m));
        }
      });
      for (const Cyl& cyl : cyls) {
        for (long c = 0; c <= nt; ++c) {
          const double v = cyl.avgs[static_cast<std::size_t>(c)];
          if (v < 0.0) continue;
          const double cd = static_cast<double>(c);
          const TimeSpan span = SpaceTimeGrid::cells_in_open_steps(cd - cyl.m, cd + cyl.m);
          for (std::size_t i : cyl.members)
            for (long s = span.begin; s < span.end; ++s) bump(out, grid.cell(i, s), v);
        }
      }
      break;
    }
  }
  return out;
}

namespace {

double weighted_lq(const SpaceTimeGrid& grid, std::span<const double> f, std::span<const double> omega,
                   double q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.n_points(); ++i)
    for (long s = 0; s < static_cast<long>(grid.nt()); ++s) {
      const std::size_t c = grid.cell(i, s);
      acc += std::pow(std::fabs(f[c]), q) * omega[c] * grid.cell_measure(i);
    }
  return acc;
}

void check_ratio_inputs(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                        const std::vector<std::vector<double>>& testset) {
  if (omega.size() != grid.n_cells()) throw Error(ErrorKind::InvalidArgument, "weight size mismatch");
  if (!(q > 1.0)) throw Error(ErrorKind::InvalidArgument, "q must exceed 1");
  if (testset.empty()) throw Error(ErrorKind::InvalidArgument, "empty testset");
}

}  // namespace

NormRatio weak_type_ratio(const SpaceTimeGrid& grid, const AdjacentSystem* adj,
                          std::span<const double> omega, double q, double gamma, MaximalOp op,
                          const ScaleFamily& fam, const std::vector<std::vector<double>>& testset,
                          std::span<const double> thresholds) {
  check_ratio_inputs(grid, omega, q, testset);
  for (double xi : thresholds)
    if (!(xi > 0.0)) throw Error(ErrorKind::InvalidArgument, "thresholds must be positive");
  NormRatio out;
  for (std::size_t fi = 0; fi < testset.size(); ++fi) {
    const auto& f = testset[fi];
    const double den = weighted_lq(grid, f, omega, q);
    if (den == 0.0) {
      ++out.skipped;
      out.per_field.push_back(0.0);
      continue;
    }
    const MaximalField mf = maximal_field(grid, adj, f, op, gamma, fam);
    std::vector<std::pair<double, double>> level;  // (Mf, omega * lambda)
    for (std::size_t i = 0; i < grid.n_points(); ++i)
      for (long s = 0; s < static_cast<long>(grid.nt()); ++s) {
        const std::size_t c = grid.cell(i, s);
        if (mf.covered[c] && mf.values[c] > 0.0)
          level.emplace_back(mf.values[c], omega[c] * grid.cell_measure(i));
      }
    double best = 0.0;
    if (thresholds.empty()) {
      std::sort(level.begin(), level.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      double mass = 0.0;
      for (std::size_t j = 0; j < level.size(); ++j) {
        mass += level[j].second;
        if (j + 1 < level.size() && level[j + 1].first == level[j].first) continue;
        best = std::max(best, std::pow(level[j].first, q) * mass / den);
      }
    } else {
      for (double xi : thresholds) {
        double mass = 0.0;
        for (const auto& [v, w] : level)
          if (v > xi) mass += w;
        best = std::max(best, std::pow(xi, q) * mass / den);
      }
    }
    out.per_field.push_back(best);
    if (best > out.ratio) {
      out.ratio = best;
      out.worst_field = fi;
    }
  }
  return out;
}

NormRatio strong_type_ratio(const SpaceTimeGrid& grid, const AdjacentSystem* adj,
                            std::span<const double> omega, double q, double gamma, MaximalOp op,
                            const ScaleFamily& fam, const std::vector<std::vector<double>>& testset) {
  check_ratio_inputs(grid, omega, q, testset);
  NormRatio out;
  for (std::size_t fi = 0; fi < testset.size(); ++fi) {
    const auto& f = testset[fi];
    const double den = weighted_lq(grid, f, omega, q);
    if (den == 0.0) {
      ++out.skipped;
      out.per_field.push_back(0.0);
      continue;
    }
    const MaximalField mf = maximal_field(grid, adj, f, op, gamma, fam);
    const double num = weighted_lq(grid, mf.values, omega, q);
    const double r = std::pow(num / den, 1.0 / q);
    out.per_field.push_back(r);
    if (r > out.ratio) {
      out.ratio = r;
      out.worst_field = fi;
    }
  }
  return out;
}

std::vector<std::vector<double>> make_testset(const SpaceTimeGrid& grid, const BoxFamily& family,
                                              std::size_t n, std::uint64_t seed) {
  if (family.boxes.empty()) throw Error(ErrorKind::EmptyFamily, "testset needs family boxes");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const long nt = static_cast<long>(grid.nt());
  std::vector<std::vector<double>> out;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> f(grid.n_cells(), 0.0);
    switch (j % 3) {
      case 0: {
        const auto& box = family.boxes[rng() % family.boxes.size()];
        const Part part = (rng() & 1U) ? Part::upper : Part::lower;
        const TimeSpan span = part_span(box, part);
        for (std::size_t i : *box.members)
          for (long s = std::max(0L, span.begin); s < std::min(nt, span.end); ++s)
            f[grid.cell(i, s)] = 1.0;
        break;
      }
      case 1:
        for (double& v : f) v = (rng() & 1U) ? 1.0 : -1.0;
        break;
      default: {
        std::vector<double> raw(grid.n_cells());
        for (double& v : raw) v = unit(rng);
        for (std::size_t i = 0; i < grid.n_points(); ++i)
          for (long s = 0; s < nt; ++s) {
            double acc = 0.0;
            int cnt = 0;
            for (long d = -1; d <= 1; ++d)
              if (s + d >= 0 && s + d < nt) {
                acc += raw[grid.cell(i, s + d)];
                ++cnt;
              }
            f[grid.cell(i, s)] = 0.1 + acc / cnt;
          }
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<std::vector<double>> geometric_testset(const SpaceTimeGrid& grid, std::size_t n,
                                                   std::uint64_t seed, bool indicators_only) {
  const auto& space = grid.space();
  const int dim = std::max(space.dim(), 1);
  auto coord = [&](std::size_t i, int d) {
    if (space.dim() == 0) return static_cast<double>(i) / static_cast<double>(space.size());
    return space.coords(i)[static_cast<std::size_t>(d)];
  };
  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < space.size(); ++i)
    for (int d = 0; d < dim; ++d) {
      lo[d] = std::min(lo[d], coord(i, d));
      hi[d] = std::max(hi[d], coord(i, d));
    }
  if (const auto& g = space.grid_geometry()) {
    std::fill(lo.begin(), lo.end(), 0.0);
    std::fill(hi.begin(), hi.end(), g->extent);
  }
  const double t_lo = grid.t0();
  const double t_hi = grid.time_edge(static_cast<long>(grid.nt()));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> out;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> f(grid.n_cells(), 0.0);
    if (indicators_only || j % 2 == 0) {
      std::vector<double> a(dim), b(dim);
      for (int d = 0; d < dim; ++d) {
        const double w = (0.1 + 0.4 * unit(rng)) * (hi[d] - lo[d]);
        a[d] = lo[d] + unit(rng) * (hi[d] - lo[d] - w);
        b[d] = a[d] + w;
      }
      const double tw = (0.1 + 0.4 * unit(rng)) * (t_hi - t_lo);
      const double ta = t_lo + unit(rng) * (t_hi - t_lo - tw);
      for (std::size_t i = 0; i < space.size(); ++i) {
        bool inside = true;
        for (int d = 0; d < dim; ++d) inside = inside && coord(i, d) >= a[d] && coord(i, d) < b[d];
        if (!inside) continue;
        for (long s = 0; s < static_cast<long>(grid.nt()); ++s) {
          const double t = grid.time_center(s);
          if (t >= ta && t < ta + tw) f[grid.cell(i, s)] = 1.0;
        }
      }
    } else {
      std::vector<double> freq(dim);
      for (double& w : freq) w = 1.0 + 3.0 * unit(rng);
      const double ft = 1.0 + 3.0 * unit(rng);
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      for (std::size_t i = 0; i < space.size(); ++i) {
        double arg = phase;
        for (int d = 0; d < dim; ++d) arg += freq[d] * (coord(i, d) - lo[d]) / (hi[d] - lo[d] + 1e-300);
        for (long s = 0; s < static_cast<long>(grid.nt()); ++s) {
          const double t = (grid.time_center(s) - t_lo) / (t_hi - t_lo);
          f[grid.cell(i, s)] = 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * (arg + ft * t));
        }
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

double equivalence_gamma1(const SpaceTimeGrid& grid, const AdjacentSystem& adj, double gamma) {
  const auto& sys = adj.grids.front();
  const double p = grid.p();
  const double K0 = grid.space().quasi_K0();
  const double C = adj.location_const;
  return gamma * std::min(std::pow(sys.c1 / C, p),
                          std::pow(sys.c1 * sys.delta / (2.0 * K0 * sys.C1 * C), p));
}

double equivalence_gamma2(const SpaceTimeGrid& grid, const AdjacentSystem& adj, double gamma) {
  const auto& sys = adj.grids.front();
  const double K0 = grid.space().quasi_K0();
  return gamma * std::min(1.0, std::pow(1.0 / (2.0 * K0 * sys.C1), grid.p()));
}

EquivalenceResult maximal_equivalence_check(const SpaceTimeGrid& grid, const AdjacentSystem& adj,
                                            std::span<const double> f, double gamma,
                                            const ScaleFamily& fam) {
  EquivalenceResult res;
  res.gamma1 = equivalence_gamma1(grid, adj, gamma);
  res.gamma2 = equivalence_gamma2(grid, adj, gamma);
  const MaximalField cyl = maximal_field(grid, &adj, f, MaximalOp::cyl_plus, gamma, fam);
  const MaximalField rect1 = maximal_field(grid, &adj, f, MaximalOp::rect_plus, res.gamma1, fam);
  const MaximalField rect = maximal_field(grid, &adj, f, MaximalOp::rect_plus, gamma, fam);
  const MaximalField cyl2 = maximal_field(grid, &adj, f, MaximalOp::cyl_plus, res.gamma2, fam);
  if (cyl.covered != rect1.covered || rect.covered != cyl2.covered || cyl.covered != rect.covered)
    throw Error(ErrorKind::CoverageMismatch, "cylinder and rectangle operators cover different cells");

  auto ratio = [](double num, double den) {
    if (num == 0.0) return 0.0;
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return num / den;
  };
  for (std::size_t c = 0; c < grid.n_cells(); ++c) {
    if (!cyl.covered[c]) continue;
    ++res.n_covered;
    res.c_fwd = std::max(res.c_fwd, ratio(cyl.values[c], rect1.values[c]));
    res.c_bwd = std::max(res.c_bwd, ratio(rect.values[c], cyl2.values[c]));
  }
  return res;
}

}  // namespace parweight
