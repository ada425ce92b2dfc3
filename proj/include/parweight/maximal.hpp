#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "parweight/pargeo.hpp"

namespace parweight {

enum class MaximalOp { rect_plus, rect_minus, cyl_plus, cyl_minus, rect_restricted, hardy_littlewood };

std::string to_string(MaximalOp op);

/// Scales the maximal operators range over. Rectangle operators use every
/// cube of the chosen levels; cylinder operators use l^p = ladder[j]*dt.
struct ScaleFamily {
  std::vector<int> levels;
  std::vector<double> ladder;  // empty: the rectangle time scales of `levels`
  unsigned tau = 0;            // rect_restricted only
  int restrict_level = 0;      // rect_restricted: levels k <= restrict_level
};

/// Levels whose time scale satisfies 1 <= l^p/dt <= nt/2.
ScaleFamily default_scale_family(const SpaceTimeGrid& grid, const AdjacentSystem& adj);
std::vector<double> cylinder_ladder(const SpaceTimeGrid& grid, const AdjacentSystem& adj,
                                    const ScaleFamily& fam);

struct MaximalField {
  MaximalOp op = MaximalOp::rect_plus;
  double gamma = 0.0;
  std::vector<double> values;  // 0 on uncovered cells
  std::vector<std::uint8_t> covered;

  std::size_t n_covered() const;
};

struct MaximalOptions {
  bool naive = false;  // exact per-box sums instead of prefix tables
};

/// Sup over family boxes containing the cell of the average of |f| over the
/// box's upper (plus) or lower (minus) part. Boxes are centered at the two
/// time edges bounding the cell; only the averaged part has to fit in the
/// grid. Hardy-Littlewood takes full cylinders with any center.
MaximalField maximal_field(const SpaceTimeGrid& grid, const AdjacentSystem* adj,
                           std::span<const double> f, MaximalOp op, double gamma,
                           const ScaleFamily& fam, MaximalOptions opts = {});

struct NormRatio {
  double ratio = 0.0;
  std::size_t worst_field = 0;
  std::size_t skipped = 0;  // fields with zero norm
  std::vector<double> per_field;
};

/// max over f and thresholds of xi^q omega({Mf > xi}) / int |f|^q omega. With
/// an empty threshold list the sup over all xi is taken exactly.
NormRatio weak_type_ratio(const SpaceTimeGrid& grid, const AdjacentSystem* adj,
                          std::span<const double> omega, double q, double gamma, MaximalOp op,
                          const ScaleFamily& fam, const std::vector<std::vector<double>>& testset,
                          std::span<const double> thresholds = {});

/// max over f of ||Mf||_{L^q(omega)} / ||f||_{L^q(omega)}.
NormRatio strong_type_ratio(const SpaceTimeGrid& grid, const AdjacentSystem* adj,
                            std::span<const double> omega, double q, double gamma, MaximalOp op,
                            const ScaleFamily& fam, const std::vector<std::vector<double>>& testset);

/// Seeded testset: indicators of random family box parts, random +-1 fields
/// and time-smoothed random fields, in equal shares.
std::vector<std::vector<double>> make_testset(const SpaceTimeGrid& grid, const BoxFamily& family,
                                              std::size_t n, std::uint64_t seed);

/// Testset defined in continuum coordinates, so the same seed gives the
/// same functions on a refined grid: indicators of random space-time boxes
/// and smooth bumps.
std::vector<std::vector<double>> geometric_testset(const SpaceTimeGrid& grid, std::size_t n,
                                                   std::uint64_t seed, bool indicators_only = false);

struct EquivalenceResult {
  double gamma1 = 0.0, gamma2 = 0.0;
  double c_fwd = 0.0, c_bwd = 0.0;
  std::size_t n_covered = 0;
};

/// Lags for which each operator is dominated by the other kind.
double equivalence_gamma1(const SpaceTimeGrid& grid, const AdjacentSystem& adj, double gamma);
double equivalence_gamma2(const SpaceTimeGrid& grid, const AdjacentSystem& adj, double gamma);

/// c_fwd = max M^{g+}f / MM^{g1+}f, c_bwd = max MM^{g+}f / M^{g2+}f over
/// covered cells. Throws CoverageMismatch when the coverage differs.
EquivalenceResult maximal_equivalence_check(const SpaceTimeGrid& grid, const AdjacentSystem& adj,
                                            std::span<const double> f, double gamma,
                                            const ScaleFamily& fam);

}  // namespace parweight
