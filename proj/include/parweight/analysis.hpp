#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "parweight/weights.hpp"

namespace parweight {

/// weight: (<omega^{k+1}>_{P^-})^{1/(k+1)} <= C <omega>_{P^+};
/// dual:   (<sigma^{k+1}>_{P^+})^{1/(k+1)} <= C <sigma>_{P^-}, sigma = omega^{1-q'}.
/// P^- and P^+ are the lag-free halves of each family box.
enum class RhiSide { weight, dual };

struct RhiResult {
  double kappa = 0.0;
  double C = 0.0;
  std::size_t worst_index = 0;
  BoxMode mode = BoxMode::rectangle;
  RhiSide side = RhiSide::weight;
  bool within_budget = true;
  std::vector<double> ladder_kappa;  // kappas tried, in order
  std::vector<double> ladder_C;
};

/// Per-box ratios lhs/rhs at a fixed kappa.
std::vector<double> rhi_values(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                               const BoxFamily& family, RhiSide side, double kappa);

/// Realized constant at one kappa.
RhiResult rhi_constant(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                       const BoxFamily& family, RhiSide side, double kappa);

/// Largest kappa on the ladder whose realized C is within budget; otherwise the
/// last kappa tried with within_budget = false.
RhiResult reverse_holder_search(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                                const BoxFamily& family, RhiSide side,
                                std::vector<double> kappa_ladder = {1.0, 0.5, 0.25, 0.1, 0.05},
                                double C_budget = 8.0);

struct SelfImprovement {
  double epsilon = 0.0;  // 0 when the ladder is exhausted
  double constant = 0.0;
  double base_constant = 0.0;  // at q
  bool exhausted = false;
  std::vector<double> epsilons;
  std::vector<double> constants;
};

/// Largest epsilon with [omega]_{A^+_{q-eps}(gamma)} <= multiple * [omega]_{A^+_q(gamma)}.
SelfImprovement self_improvement(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                                 double gamma, const BoxFamily& family,
                                 std::vector<double> epsilon_ladder, double multiple = 10.0);

struct AinftyFit {
  double epsilon = 1.0;
  double Ctilde = 1.0;
  double max_residual = 0.0;  // max log(envelope / observed)
  std::size_t n_points = 0;
  std::vector<double> fractions;  // realized lambda(E)/lambda(P^-)
  std::vector<double> ratios;     // omega(E)/omega(P^+)
};

/// E collects the heaviest cells of P^- until lambda(E) >= fraction * lambda(P^-);
/// fits omega(E)/omega(P^+) <= Ctilde (lambda(E)/lambda(P^-))^epsilon.
AinftyFit ainfty_check(const SpaceTimeGrid& grid, std::span<const double> omega,
                       const BoxFamily& family, std::span<const double> fractions);

struct LagTransfer {
  std::vector<double> gammas;
  std::vector<double> constants;
  std::vector<std::vector<double>> ratios;  // constants[i] / constants[j]
  std::size_t n_boxes = 0;
  std::size_t violations = 0;  // per-box failures of the transfer bound
  double worst_slack = 0.0;    // max over boxes and pairs of value(g') / bound
};

/// Constants for every lag on the same boxes, plus the per-box check
/// value_{g'} <= ((1-g)/(1-g'))^q value_g for g <= g'.
LagTransfer lag_transfer(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                         std::vector<double> gammas, const BoxFamily& family);

}  // namespace parweight
