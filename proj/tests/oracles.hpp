// Brute-force references and random generators for the tests. Nothing here
// calls the span, prefix-table or maximal machinery of the library: regions
// are found by scanning cell centers, sums are accumulated in long double.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "parweight/analysis.hpp"
#include "parweight/factorize.hpp"
#include "parweight/pbmo.hpp"
#include "parweight/weights.hpp"

namespace oracle {

using namespace parweight;

inline std::shared_ptr<const PointCloudSpace> line(std::size_t n) {
  return std::make_shared<const PointCloudSpace>(PointCloudSpace::euclidean_grid(1, 1.0, n));
}

/// n space cells on [0,1] with the sup metric, nt time cells of length 1/nt, p = 2.
inline SpaceTimeGrid grid(std::size_t n = 16, std::size_t nt = 64) {
  return SpaceTimeGrid(line(n), 0.0, 1.0 / static_cast<double>(nt), nt, 2.0);
}

inline std::vector<double> time_field(const SpaceTimeGrid& g, double sign) {
  std::vector<double> u(g.n_cells());
  for (std::size_t i = 0; i < g.n_points(); ++i)
    for (long s = 0; s < static_cast<long>(g.nt()); ++s)
      u[g.cell(i, s)] = sign * g.time_center(s);
  return u;
}

inline std::vector<double> exp_time(const SpaceTimeGrid& g, double a = 1.0) {
  auto t = time_field(g, a);
  for (double& x : t) x = std::exp(x);
  return t;
}

/// Time indices s (possibly outside the grid) whose center s + 1/2 lies in
/// [a, b), or (a, b) with open_left. Endpoints in steps from t0.
inline std::vector<long> cells_in(double a, double b, bool open_left = false) {
  std::vector<long> out;
  for (long s = static_cast<long>(std::floor(a)) - 2; s <= static_cast<long>(std::ceil(b)) + 2; ++s) {
    const double c = static_cast<double>(s) + 0.5;
    const bool left = open_left ? c > a + 1e-9 : c >= a - 1e-9;
    if (left && c < b - 1e-9) out.push_back(s);
  }
  return out;
}

inline std::vector<long> part_cells(const ParabolicBox& b, Part part, double gamma, double shift = 0.0) {
  const double c = static_cast<double>(b.t_index) + shift, m = b.L_steps;
  switch (part) {
    case Part::lower: return cells_in(c - m, c - gamma * m);
    case Part::upper: return cells_in(c + gamma * m, c + m);
    case Part::full: return cells_in(c - m, c + m, true);
  }
  return {};
}

/// Points within distance < r of x, by a full scan.
inline std::vector<std::size_t> ball(const PointCloudSpace& sp, std::size_t x, double r) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < sp.size(); ++j)
    if (sp.dist(x, j) < r) out.push_back(j);
  return out;
}

/// Measure-weighted average; nullopt for an empty region or one leaving the grid.
inline std::optional<double> average(const SpaceTimeGrid& g, std::span<const double> v,
                                     const std::vector<std::size_t>& pts, const std::vector<long>& cells) {
  if (pts.empty() || cells.empty()) return std::nullopt;
  for (long s : cells)
    if (s < 0 || s >= static_cast<long>(g.nt())) return std::nullopt;
  long double num = 0.0L, den = 0.0L;
  for (std::size_t i : pts) {
    const long double w = static_cast<long double>(g.cell_measure(i));
    for (long s : cells) {
      num += static_cast<long double>(v[g.cell(i, s)]) * w;
      den += w;
    }
  }
  return static_cast<double>(num / den);
}

inline double box_average(const SpaceTimeGrid& g, std::span<const double> v, const ParabolicBox& b,
                          Part part, double gamma, double shift = 0.0) {
  return *average(g, v, *b.members, part_cells(b, part, gamma, shift));
}

inline std::vector<double> powered(std::span<const double> v, double e) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::pow(v[i], e);
  return out;
}

inline double muckenhoupt_box(const SpaceTimeGrid& g, std::span<const double> w, double q, double gamma,
                              Orientation o, const ParabolicBox& b) {
  const auto s = powered(w, 1.0 - q / (q - 1.0));
  const Part wp = o == Orientation::plus ? Part::lower : Part::upper;
  const Part sp = o == Orientation::plus ? Part::upper : Part::lower;
  return box_average(g, w, b, wp, gamma) * std::pow(box_average(g, s, b, sp, gamma), q - 1.0);
}

inline double muckenhoupt(const SpaceTimeGrid& g, std::span<const double> w, double q, double gamma,
                          Orientation o, const BoxFamily& fam) {
  double best = 0.0;
  for (const auto& b : fam.boxes) best = std::max(best, muckenhoupt_box(g, w, q, gamma, o, b));
  return best;
}

/// Lag-free halves [c-m, c) and [c, c+m).
inline double rhi(const SpaceTimeGrid& g, std::span<const double> w, double q, const BoxFamily& fam,
                  RhiSide side, double kappa) {
  const auto s = side == RhiSide::weight ? std::vector<double>(w.begin(), w.end())
                                         : powered(w, 1.0 - q / (q - 1.0));
  const auto sk = powered(s, kappa + 1.0);
  double best = 0.0;
  for (const auto& b : fam.boxes) {
    const Part top = side == RhiSide::weight ? Part::lower : Part::upper;
    const Part bot = side == RhiSide::weight ? Part::upper : Part::lower;
    const double lhs = std::pow(box_average(g, sk, b, top, 0.0), 1.0 / (kappa + 1.0));
    best = std::max(best, lhs / box_average(g, s, b, bot, 0.0));
  }
  return best;
}

/// Maximal field by enumeration of every box: rectangles over all grids,
/// chosen levels and cubes; cylinders centered at the cell's own point. A box
/// counts for cell (i, s) when i is in it and its center edge bounds s.
inline std::vector<double> maximal(const SpaceTimeGrid& g, const AdjacentSystem& adj,
                                   std::span<const double> f, MaximalOp op, double gamma,
                                   const ScaleFamily& fam, std::vector<char>* covered = nullptr) {
  const long nt = static_cast<long>(g.nt());
  std::vector<double> out(g.n_cells(), 0.0);
  std::vector<char> cov(g.n_cells(), 0);
  std::vector<double> af(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) af[i] = std::fabs(f[i]);
  const bool upper = op == MaximalOp::rect_plus || op == MaximalOp::cyl_plus;
  auto visit = [&](const std::vector<std::size_t>& pts, const std::vector<std::size_t>& targets, double m) {
    for (long c = 0; c <= nt; ++c) {
      const double cd = static_cast<double>(c);
      const auto cells = upper ? cells_in(cd + gamma * m, cd + m) : cells_in(cd - m, cd - gamma * m);
      const auto v = average(g, af, pts, cells);
      if (!v) continue;
      for (std::size_t i : targets)
        for (long s : {c - 1, c}) {
          if (s < 0 || s >= nt) continue;
          const std::size_t cell = g.cell(i, s);
          if (!cov[cell] || *v > out[cell]) out[cell] = *v;
          cov[cell] = 1;
        }
    }
  };
  if (op == MaximalOp::rect_plus || op == MaximalOp::rect_minus) {
    for (const auto& sys : adj.grids)
      for (int k : fam.levels) {
        const double m = std::pow(sys.edge(k), g.p()) / g.dt();
        for (const auto& cube : sys.level(k).cubes) visit(cube.members, cube.members, m);
      }
  } else {
    std::vector<double> ladder = fam.ladder;
    if (ladder.empty())
      for (int k : fam.levels) ladder.push_back(std::pow(adj.edge(k), g.p()) / g.dt());
    for (std::size_t i = 0; i < g.n_points(); ++i)
      for (double m : ladder) visit(ball(g.space(), i, std::pow(m * g.dt(), 1.0 / g.p())), {i}, m);
  }
  if (covered) *covered = cov;
  return out;
}

/// Oscillation functional summed directly over the cells of both parts.
inline double oscillation(const SpaceTimeGrid& g, std::span<const double> u, const ParabolicBox& b,
                          double gamma, Orientation o, double a) {
  const auto up = part_cells(b, Part::upper, gamma), lo = part_cells(b, Part::lower, gamma);
  std::vector<double> above(u.size()), below(u.size());
  for (std::size_t c = 0; c < u.size(); ++c) {
    above[c] = std::max(u[c] - a, 0.0);
    below[c] = std::max(a - u[c], 0.0);
  }
  if (o == Orientation::plus)
    return *average(g, above, *b.members, up) + *average(g, below, *b.members, lo);
  return *average(g, above, *b.members, lo) + *average(g, below, *b.members, up);
}

/// Dense scan: every value of u inside the box plus a uniform grid of candidates.
inline double oscillation_min(const SpaceTimeGrid& g, std::span<const double> u, const ParabolicBox& b,
                              double gamma, Orientation o) {
  std::vector<double> cand;
  for (Part part : {Part::upper, Part::lower})
    for (std::size_t i : *b.members)
      for (long s : part_cells(b, part, gamma)) cand.push_back(u[g.cell(i, s)]);
  const auto [lo, hi] = std::minmax_element(cand.begin(), cand.end());
  const double a0 = *lo, a1 = *hi;
  for (int k = 0; k <= 400; ++k) cand.push_back(a0 + (a1 - a0) * k / 400.0);
  double best = std::numeric_limits<double>::infinity();
  for (double a : cand) best = std::min(best, oscillation(g, u, b, gamma, o, a));
  return best;
}

// Hand-rolled generators.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin() { return uniform(0.0, 1.0) < 0.5; }

  std::vector<double> field(std::size_t n, double a = -1.0, double b = 1.0) {
    std::vector<double> out(n);
    for (double& x : out) x = uniform(a, b);
    return out;
  }
  /// exp of a smooth-ish random walk in time plus noise: strictly positive.
  std::vector<double> weight(const SpaceTimeGrid& g, double spread = 1.0) {
    std::vector<double> out(g.n_cells());
    for (std::size_t i = 0; i < g.n_points(); ++i) {
      double walk = uniform(-spread, spread);
      for (long s = 0; s < static_cast<long>(g.nt()); ++s) {
        walk += uniform(-spread, spread) / 8.0;
        out[g.cell(i, s)] = std::exp(walk + uniform(-0.1, 0.1) * spread);
      }
    }
    return out;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline BoxFamily family(const SpaceTimeGrid& g, const AdjacentSystem& adj, BoxMode mode,
                        std::vector<double> lags) {
  FamilySpec spec;
  spec.mode = mode;
  return build_family(g, &adj, spec, lags);
}

}  // namespace oracle
