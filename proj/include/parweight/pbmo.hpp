#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "parweight/pargeo.hpp"

namespace parweight {

struct OscillationResult {
  double a = 0.0;      // leftmost minimizer, up to rounding on flat stretches
  double value = 0.0;  // minimal functional value
  double gamma = 0.0;
  Orientation orientation = Orientation::plus;
};

/// plus:  min_a <(u-a)_+>_{R^+} + <(a-u)_+>_{R^-};
/// minus: min_b <(u-b)_+>_{R^-} + <(b-u)_+>_{R^+}.
/// The objective is convex and piecewise linear with kinks at the values of
/// u, so the minimum is taken over those breakpoints.
OscillationResult best_oscillation_constant(const SpaceTimeGrid& grid, std::span<const double> u,
                                            const ParabolicBox& box, double gamma,
                                            Orientation orientation);

/// Objective at a given constant, summed in cell order.
double oscillation_objective(const SpaceTimeGrid& grid, std::span<const double> u,
                             const ParabolicBox& box, double gamma, Orientation orientation,
                             double a);

struct PbmoReport {
  double norm = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> per_box;
};

PbmoReport pbmo_norm(const SpaceTimeGrid& grid, std::span<const double> u, double gamma,
                     const BoxFamily& family, Orientation orientation);

struct JNProfile {
  double a = 0.0;
  std::vector<double> xi;
  std::vector<double> upper_tail;  // lambda(R^+ n {(u-a)_+ > xi}) / lambda(R)
  std::vector<double> lower_tail;  // lambda(R^- n {(a-u)_+ > xi}) / lambda(R)
  double A = 0.0, B = 0.0;         // tails <= A e^{-B xi}
  double max_log_residual = 0.0;   // of the per-side least-squares lines through log tails
  bool degenerate = false;         // every tail vanished
};

JNProfile jn_profile(const SpaceTimeGrid& grid, std::span<const double> u, const ParabolicBox& box,
                     double gamma, std::span<const double> xi_grid);

struct LogCorrespondence {
  double pbmo_norm_of_minus_log = 0.0;
  double aq_const = 0.0;
  double reverse_aq_const = 0.0;  // [exp(-u)] rebuilt from u = -log omega
};

LogCorrespondence log_correspondence_check(const SpaceTimeGrid& grid, std::span<const double> omega,
                                           double q, double gamma, const BoxFamily& family);

}  // namespace parweight
