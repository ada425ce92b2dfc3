#include "parweight/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "parweight/error.hpp"

namespace parweight {

double DyadicSystem::edge(int k) const { return scale * std::pow(delta, k); }

const DyadicLevel& DyadicSystem::level(int k) const {
  if (k < k_min || k > k_max)
    throw Error(ErrorKind::InvalidArgument, "level " + std::to_string(k) + " outside system");
  return levels[static_cast<std::size_t>(k - k_min)];
}

namespace {

[[noreturn]] void violation(int k, std::size_t alpha, const std::string& which) {
  throw Error(ErrorKind::InvariantViolation, "dyadic level " + std::to_string(k) + " cube " +
                                                 std::to_string(alpha) + ": " + which);
}

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

void link_parents(DyadicSystem& sys) {
  for (std::size_t li = 1; li < sys.levels.size(); ++li) {
    const auto& coarse = sys.levels[li - 1];
    for (auto& cube : sys.levels[li].cubes) cube.parent = coarse.cube_of_point[cube.center];
  }
}

}  // namespace

void verify_dyadic(const PointCloudSpace& space, const DyadicSystem& sys) {
  const std::size_t n = space.size();
  for (const auto& lvl : sys.levels) {
    const double e = sys.edge(lvl.k);
    if (lvl.cube_of_point.size() != n) violation(lvl.k, 0, "partition size");
    std::vector<std::size_t> seen(n, 0);
    for (std::size_t a = 0; a < lvl.cubes.size(); ++a) {
      const Cube& q = lvl.cubes[a];
      if (q.members.empty()) violation(lvl.k, a, "empty cube");
      for (std::size_t m : q.members) {
        ++seen[m];
        if (lvl.cube_of_point[m] != a) violation(lvl.k, a, "partition index");
      }
      if (lvl.k > sys.k_min) {
        if (!q.parent) violation(lvl.k, a, "missing parent");
        const auto& parent = sys.level(lvl.k - 1).cubes[*q.parent];
        if (!std::includes(parent.members.begin(), parent.members.end(), q.members.begin(),
                           q.members.end()))
          violation(lvl.k, a, "nesting");
      }
      for (std::size_t y : space.ball_members({q.center, sys.c1 * e}))
        if (lvl.cube_of_point[y] != a) violation(lvl.k, a, "inner ball");
      for (std::size_t m : q.members)
        if (!(space.dist(q.center, m) < sys.C1 * e)) violation(lvl.k, a, "outer ball");
      for (std::size_t b = 0; b < lvl.cubes.size(); ++b) {
        if (b != a && space.dist(q.center, lvl.cubes[b].center) < sys.c0 * e)
          violation(lvl.k, a, "net separation");
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (seen[i] != 1) violation(lvl.k, 0, "partition coverage of point " + std::to_string(i));
  }
}

DyadicSystem build_grid_dyadic(const PointCloudSpace& space, int k_min, int k_max,
                               unsigned shift_mask) {
  const auto& geom = space.grid_geometry();
  if (!geom) throw Error(ErrorKind::InvalidArgument, "fast path needs a Euclidean grid space");
  if (k_min < 0 || k_max < k_min || k_max > 40)
    throw Error(ErrorKind::InvalidArgument, "fast path levels must satisfy 0 <= k_min <= k_max <= 40");

  DyadicSystem sys;
  sys.delta = 0.5;
  sys.c0 = 0.25;
  sys.C0 = 0.5;
  const double K0 = space.quasi_K0();
  sys.c1 = sys.c0 / (3.0 * K0 * K0);
  sys.C1 = 2.0 * K0 * sys.C0;
  sys.scale = geom->extent;
  sys.k_min = k_min;
  sys.k_max = k_max;
  sys.fast_path = true;
  sys.shift_mask = shift_mask;

  const int dim = geom->dim;
  const long n = static_cast<long>(geom->n_cells);

  for (int k = k_min; k <= k_max; ++k) {
    DyadicLevel lvl;
    lvl.k = k;
    lvl.cube_of_point.assign(space.size(), 0);
    const long pow2 = 1L << k;
    const double side = sys.edge(k);
    const long sign = (k % 2 == 0) ? 1 : -1;

    std::map<std::vector<long>, std::size_t> index;
    std::vector<std::vector<long>> keys;
    std::vector<std::vector<std::size_t>> members;
    std::vector<long> key(dim);
    for (std::size_t id = 0; id < space.size(); ++id) {
      std::size_t rest = id;
      for (int d = dim - 1; d >= 0; --d) {
        const long j = static_cast<long>(rest % geom->n_cells);
        rest /= geom->n_cells;
        const long s = (shift_mask >> d) & 1U;
        key[d] = floor_div(3 * (2 * j + 1) * pow2 - s * sign * 2 * n, 6 * n);
      }
      auto [it, inserted] = index.try_emplace(key, keys.size());
      if (inserted) {
        keys.push_back(key);
        members.emplace_back();
      }
      members[it->second].push_back(id);
    }

    // Alpha order follows the lexicographic key order.
    std::vector<std::size_t> remap(keys.size());
    {
      std::size_t alpha = 0;
      for (const auto& [kkey, slot] : index) remap[slot] = alpha++;
    }
    lvl.cubes.resize(keys.size());
    for (std::size_t slot = 0; slot < keys.size(); ++slot) {
      Cube& cube = lvl.cubes[remap[slot]];
      cube.members = std::move(members[slot]);
      std::vector<double> mid(dim);
      for (int d = 0; d < dim; ++d) {
        const double shift = ((shift_mask >> d) & 1U) ? static_cast<double>(sign) / 3.0 : 0.0;
        const double lo = std::max(0.0, (static_cast<double>(keys[slot][d]) + shift) * side);
        const double hi = std::min(geom->extent, (static_cast<double>(keys[slot][d]) + 1.0 + shift) * side);
        mid[d] = 0.5 * (lo + hi);
      }
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t m : cube.members) {
        double dd = 0.0;
        auto c = space.coords(m);
        for (int d = 0; d < dim; ++d) dd = std::max(dd, std::fabs(c[d] - mid[d]));
        if (dd < best) {
          best = dd;
          cube.center = m;
        }
      }
      for (std::size_t m : cube.members) lvl.cube_of_point[m] = remap[slot];
    }
    sys.levels.push_back(std::move(lvl));
  }
  link_parents(sys);
  verify_dyadic(space, sys);
  return sys;
}

namespace {

DyadicSystem build_net_dyadic(const PointCloudSpace& space, double delta, double c0, double C0,
                              int k_min, int k_max, const std::vector<std::size_t>& order) {
  DyadicSystem sys;
  sys.delta = delta;
  sys.c0 = c0;
  sys.C0 = C0;
  const double K0 = space.quasi_K0();
  sys.c1 = c0 / (3.0 * K0 * K0);
  sys.C1 = 2.0 * K0 * C0;
  sys.k_min = k_min;
  sys.k_max = k_max;
  const double diam = space.diameter();
  // The coarsest net then has a single center, so one cube holds the space.
  sys.scale = diam > 0.0 ? 2.0 * diam / (c0 * std::pow(delta, k_min)) : 1.0;

  const std::size_t n_levels = static_cast<std::size_t>(k_max - k_min + 1);
  std::vector<std::vector<std::size_t>> nets(n_levels);
  std::vector<std::size_t> net;
  for (std::size_t li = 0; li < n_levels; ++li) {
    const double sep = c0 * sys.edge(k_min + static_cast<int>(li));
    std::vector<char> in_net(space.size(), 0);
    for (std::size_t z : net) in_net[z] = 1;
    for (std::size_t p : order) {
      if (in_net[p]) continue;
      bool far = true;
      for (std::size_t z : net) {
        if (space.dist(z, p) < sep || space.dist(p, z) < sep) {
          far = false;
          break;
        }
      }
      if (far) {
        net.push_back(p);
        in_net[p] = 1;
      }
    }
    nets[li] = net;
  }

  sys.levels.resize(n_levels);
  for (std::size_t li = n_levels; li-- > 0;) {
    DyadicLevel& lvl = sys.levels[li];
    lvl.k = k_min + static_cast<int>(li);
    const auto& centers = nets[li];
    lvl.cubes.resize(centers.size());
    for (std::size_t a = 0; a < centers.size(); ++a) lvl.cubes[a].center = centers[a];
    auto nearest = [&](std::size_t from) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < centers.size(); ++a) {
        const double d = space.dist(centers[a], from);
        if (d < best_d) {
          best_d = d;
          best = a;
        }
      }
      return best;
    };
    lvl.cube_of_point.assign(space.size(), 0);
    if (li + 1 == n_levels) {
      for (std::size_t x = 0; x < space.size(); ++x) lvl.cube_of_point[x] = nearest(x);
    } else {
      const DyadicLevel& fine = sys.levels[li + 1];
      std::vector<std::size_t> parent_of(fine.cubes.size());
      for (std::size_t b = 0; b < fine.cubes.size(); ++b) parent_of[b] = nearest(fine.cubes[b].center);
      for (std::size_t x = 0; x < space.size(); ++x)
        lvl.cube_of_point[x] = parent_of[fine.cube_of_point[x]];
    }
    for (std::size_t x = 0; x < space.size(); ++x)
      lvl.cubes[lvl.cube_of_point[x]].members.push_back(x);
  }
  link_parents(sys);
  verify_dyadic(space, sys);
  return sys;
}

}  // namespace

DyadicSystem build_dyadic(const PointCloudSpace& space, double delta, double c0, double C0,
                          int k_min, int k_max, std::vector<std::string>* warnings) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::InvalidArgument, "delta must lie in (0,1)");
  if (!(c0 > 0.0) || c0 > C0) throw Error(ErrorKind::InvalidArgument, "need 0 < c0 <= C0");
  if (k_max < k_min) throw Error(ErrorKind::InvalidArgument, "empty level range");
  if (space.grid_geometry() && delta == 0.5) return build_grid_dyadic(space, k_min, k_max, 0);

  const double K0 = space.quasi_K0();
  if (warnings && 12.0 * K0 * K0 * K0 * C0 * delta > c0) {
    std::ostringstream msg;
    msg << "12 K0^3 C0 delta = " << 12.0 * K0 * K0 * K0 * C0 * delta << " exceeds c0 = " << c0;
    warnings->push_back(msg.str());
  }
  std::vector<std::size_t> order(space.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return build_net_dyadic(space, delta, c0, C0, k_min, k_max, order);
}

namespace {

double cube_diameter(const PointCloudSpace& space, const DyadicSystem& sys, const Cube& cube) {
  const auto& geom = space.grid_geometry();
  if (!sys.fast_path || !geom) return space.diameter(cube.members);
  const int dim = geom->dim;
  double d = 0.0;
  for (int ax = 0; ax < dim; ++ax) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t m : cube.members) {
      lo = std::min(lo, space.coords(m)[ax]);
      hi = std::max(hi, space.coords(m)[ax]);
    }
    d = std::max(d, hi - lo);
  }
  return d;
}

}  // namespace

std::vector<Ball> sample_balls(const PointCloudSpace& space, const AdjacentSystem& adj) {
  const double diam = space.diameter();
  std::vector<double> radii;
  for (double r = adj.edge(adj.k_max()); r < diam; r *= 2.0) radii.push_back(r);
  radii.push_back(std::max(diam, adj.edge(adj.k_max())));
  std::vector<Ball> balls;
  for (double r : radii)
    for (std::size_t x = 0; x < space.size(); ++x) balls.push_back({x, r});
  return balls;
}

CubeRef find_containing_cube(const PointCloudSpace& space, const AdjacentSystem& adj,
                             const Ball& ball) {
  const auto members = space.ball_members(ball);
  for (int k = adj.k_max(); k >= adj.k_min(); --k) {
    for (unsigned tau = 0; tau < adj.size(); ++tau) {
      const auto& lvl = adj.grids[tau].level(k);
      const std::size_t alpha = lvl.cube_of_point[ball.center];
      const bool inside = std::all_of(members.begin(), members.end(),
                                      [&](std::size_t m) { return lvl.cube_of_point[m] == alpha; });
      if (inside) return {tau, k, alpha};
    }
  }
  throw Error(ErrorKind::CoverageFailure, "no cube contains B(" + std::to_string(ball.center) +
                                              ", " + std::to_string(ball.radius) + ")");
}

AdjacentSystem build_adjacent(const PointCloudSpace& space, double delta, int k_min, int k_max,
                              unsigned n_general_grids, std::vector<std::string>* warnings) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::InvalidArgument, "delta must lie in (0,1)");
  AdjacentSystem adj;
  const auto& geom = space.grid_geometry();
  if (geom && delta == 0.5) {
    const unsigned K = 1U << geom->dim;
    for (unsigned mask = 0; mask < K; ++mask)
      adj.grids.push_back(build_grid_dyadic(space, k_min, k_max, mask));
  } else {
    const double K0 = space.quasi_K0();
    if (warnings && 96.0 * std::pow(K0, 6) * delta > 1.0) {
      std::ostringstream msg;
      msg << "96 K0^6 delta = " << 96.0 * std::pow(K0, 6) * delta << " exceeds 1";
      warnings->push_back(msg.str());
    }
    if (n_general_grids == 0) throw Error(ErrorKind::InvalidArgument, "need at least one grid");
    std::vector<std::size_t> order(space.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (unsigned tau = 0; tau < n_general_grids; ++tau) {
      if (tau > 0) {
        std::mt19937_64 rng(0x9e3779b97f4a7c15ULL + tau);
        std::shuffle(order.begin(), order.end(), rng);
      }
      adj.grids.push_back(build_net_dyadic(space, delta, 1.0, 1.0, k_min, k_max, order));
    }
  }

  double worst = 0.0;
  for (const Ball& ball : sample_balls(space, adj)) {
    const CubeRef ref = find_containing_cube(space, adj, ball);
    const auto& cube = adj.grids[ref.tau].cube(ref.k, ref.alpha);
    worst = std::max(worst, cube_diameter(space, adj.grids[ref.tau], cube) / ball.radius);
  }
  adj.location_const = worst;
  return adj;
}

AdjacentSystem build_adjacent(const PointCloudSpace& space, double delta,
                              std::vector<std::string>* warnings) {
  int k_max = 1;
  if (const auto& geom = space.grid_geometry(); geom && delta == 0.5) {
    k_max = 0;
    while ((std::size_t{1} << k_max) < geom->n_cells) ++k_max;
  }
  return build_adjacent(space, delta, 0, k_max, 3, warnings);
}

CubeRef locate_ball(const PointCloudSpace& space, const AdjacentSystem& adj, const Ball& ball) {
  if (!(ball.radius >= adj.edge(adj.k_max())))
    throw Error(ErrorKind::CoverageFailure, "radius " + std::to_string(ball.radius) +
                                                " below the finest level edge");
  const CubeRef ref = find_containing_cube(space, adj, ball);
  const auto& cube = adj.grids[ref.tau].cube(ref.k, ref.alpha);
  const double diam = cube_diameter(space, adj.grids[ref.tau], cube);
  if (diam > adj.location_const * ball.radius * (1.0 + 1e-12))
    throw Error(ErrorKind::CoverageFailure, "located cube too large for B(" +
                                                std::to_string(ball.center) + ", " +
                                                std::to_string(ball.radius) + ")");
  return ref;
}

std::string dyadic_to_json(const DyadicSystem& sys) {
  nlohmann::json j;
  j["delta"] = sys.delta;
  j["c0"] = sys.c0;
  j["C0"] = sys.C0;
  j["c1"] = sys.c1;
  j["C1"] = sys.C1;
  j["scale"] = sys.scale;
  j["levels"] = nlohmann::json::array();
  for (const auto& lvl : sys.levels) {
    nlohmann::json jl;
    jl["k"] = lvl.k;
    jl["cubes"] = nlohmann::json::array();
    for (const auto& cube : lvl.cubes) {
      nlohmann::json jc;
      jc["center"] = cube.center;
      jc["members"] = cube.members;
      if (cube.parent) jc["parent"] = *cube.parent;
      jl["cubes"].push_back(std::move(jc));
    }
    j["levels"].push_back(std::move(jl));
  }
  return j.dump();
}

}  // namespace parweight
