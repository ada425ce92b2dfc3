#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "parweight/space.hpp"

namespace parweight {

struct Cube {
  std::vector<std::size_t> members;  // ascending point ids
  std::size_t center = 0;
  std::optional<std::size_t> parent;  // cube index on level k-1
};

struct DyadicLevel {
  int k = 0;
  std::vector<Cube> cubes;
  std::vector<std::size_t> cube_of_point;
};

class DyadicSystem {
 public:
  double delta = 0.5;
  double c0 = 0.25, C0 = 0.5;
  double c1 = 0.0, C1 = 0.0;  // c0/(3K0^2), 2K0C0
  double scale = 1.0;         // edge(k) = scale * delta^k
  int k_min = 0, k_max = 0;
  bool fast_path = false;
  unsigned shift_mask = 0;  // fast path: bit d set when axis d is shifted
  std::vector<DyadicLevel> levels;

  double edge(int k) const;
  const DyadicLevel& level(int k) const;
  const Cube& cube(int k, std::size_t alpha) const { return level(k).cubes[alpha]; }
};

struct AdjacentSystem {
  std::vector<DyadicSystem> grids;
  double location_const = 0.0;

  std::size_t size() const { return grids.size(); }
  int k_min() const { return grids.front().k_min; }
  int k_max() const { return grids.front().k_max; }
  double edge(int k) const { return grids.front().edge(k); }
};

struct CubeRef {
  unsigned tau = 0;
  int k = 0;
  std::size_t alpha = 0;
};

/// Verifies partition, nesting, sandwich and separation; throws
/// InvariantViolation naming (k, alpha, which) on the first failure.
void verify_dyadic(const PointCloudSpace& space, const DyadicSystem& sys);

/// Euclidean grids with delta = 1/2 use exact (optionally shifted) dyadic
/// intervals; everything else goes through nested greedy nets. Guard
/// violations on the general path are appended to warnings.
DyadicSystem build_dyadic(const PointCloudSpace& space, double delta, double c0, double C0,
                          int k_min, int k_max, std::vector<std::string>* warnings = nullptr);

/// Fast path on a Euclidean grid: level-k boundaries at
/// extent * 2^-k * (m + s_d (-1)^k / 3), s_d = 1 on shifted axes.
DyadicSystem build_grid_dyadic(const PointCloudSpace& space, int k_min, int k_max,
                               unsigned shift_mask);

/// Default level range: k_min = 0, k_max = log2(n_cells) on grids, two levels
/// otherwise.
AdjacentSystem build_adjacent(const PointCloudSpace& space, double delta,
                              std::vector<std::string>* warnings = nullptr);
AdjacentSystem build_adjacent(const PointCloudSpace& space, double delta, int k_min, int k_max,
                              unsigned n_general_grids = 3,
                              std::vector<std::string>* warnings = nullptr);

/// Balls used to calibrate the location constant: every point with radii
/// doubling from the finest edge up to the space diameter.
std::vector<Ball> sample_balls(const PointCloudSpace& space, const AdjacentSystem& adj);

/// Smallest cube of any grid containing the ball. Ignores the location
/// constant; throws CoverageFailure when nothing contains it.
CubeRef find_containing_cube(const PointCloudSpace& space, const AdjacentSystem& adj,
                             const Ball& ball);

/// find_containing_cube plus the range guard and the diam <= C r check.
CubeRef locate_ball(const PointCloudSpace& space, const AdjacentSystem& adj, const Ball& ball);

std::string dyadic_to_json(const DyadicSystem& sys);

}  // namespace parweight
