#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parweight/maximal.hpp"
#include "parweight/pargeo.hpp"

namespace parweight {

enum class WeightPreset { constant, exp_time, pow_time, pow_space, file };

/// constant: c = value; exp_time: e^{a t}, a = value; pow_time: |t - shift|^value;
/// pow_space: |x_0 - shift|^value; file: per-cell CSV at path.
struct WeightSpec {
  WeightPreset preset = WeightPreset::constant;
  double value = 1.0;
  double shift = 0.0;
  std::string path;
};

std::vector<double> make_weight(const SpaceTimeGrid& grid, const WeightSpec& spec);

/// Throws NonpositiveWeight unless every value is finite and > 0.
void validate_weight(std::span<const double> omega);

double conjugate(double q);  // q' = q/(q-1)

/// omega^{1-q'}.
std::vector<double> sigma(std::span<const double> omega, double q);

struct MuckenhouptReport {
  double constant = 0.0;
  double q = 2.0;
  double gamma = 0.0;
  Orientation orientation = Orientation::plus;
  BoxMode mode = BoxMode::rectangle;
  std::size_t worst_index = 0;
  std::optional<ParabolicBox> worst_box;
  std::size_t n_boxes = 0;
  std::vector<double> per_box;
};

/// Per box: plus = <omega>_{lower} <sigma>_{upper}^{q-1}, minus swaps the parts.
std::vector<double> muckenhoupt_values(const SpaceTimeGrid& grid, std::span<const double> omega,
                                       double q, double gamma, Orientation orientation,
                                       const BoxFamily& family);

/// Max of muckenhoupt_values; ties go to the lowest box index.
MuckenhouptReport muckenhoupt_constant(const SpaceTimeGrid& grid, std::span<const double> omega,
                                       double q, double gamma, Orientation orientation,
                                       const BoxFamily& family);

struct A1Options {
  bool cylinder = false;    // M^{gamma-+} instead of the rectangle operators
  bool allow_zero = false;  // weights that vanish somewhere (0/0 cells skipped)
};

struct A1Report {
  double constant = 0.0;
  double gamma = 0.0;
  Orientation orientation = Orientation::plus;
  std::size_t worst_cell = 0;
  std::size_t n_covered = 0;
  std::size_t n_skipped = 0;  // 0/0 cells
};

/// max over covered cells of MM^{gamma-}omega / omega (plus) or MM^{gamma+}omega / omega
/// (minus). A positive value over a zero weight counts as infinite.
A1Report a1_constant(const SpaceTimeGrid& grid, const AdjacentSystem* adj,
                     std::span<const double> omega, double gamma, Orientation orientation,
                     const ScaleFamily& fam, A1Options opts = {});

/// Same ratio for a precomputed maximal field.
A1Report a1_from_maximal(const MaximalField& mf, std::span<const double> omega);

struct InequalitySides {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  // lhs / rhs
};

/// omega(R^-) <= K [lambda(R^-)/lambda(S)]^q omega(S) for S inside the upper part;
/// dual: sigma(R^+) <= K^{q'-1} [lambda(R^+)/lambda(P)]^{q'} sigma(P) for P
/// inside the lower part. K is the Muckenhoupt constant supplied by the caller.
InequalitySides absolute_continuity_check(const SpaceTimeGrid& grid, std::span<const double> omega,
                                          double q, double gamma, const ParabolicBox& box,
                                          const Region& subset, double constant, bool dual = false);

struct ShiftCheck {
  double lhs = 0.0;
  double rhs = 0.0;        // K^{ceil theta} times the shifted average
  double rhs_raw = 0.0;    // same with the unfloored constant
  int exponent = 0;
  bool holds = false;
  bool holds_raw = false;
};

/// <omega>_{R^-} <= K^{ceil theta} <omega>_{R^- + theta(1+gamma)L}; dual:
/// <sigma>_{R^+} <= K^{ceil theta} <sigma>_{R^+ - theta(1+gamma)L}. The bound
/// uses K = max(1, constant). Throws ShiftOutOfGrid when the shifted part
/// leaves the grid.
ShiftCheck time_shift_check(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                            double gamma, const ParabolicBox& box, double theta, double constant,
                            bool dual = false);

struct ShiftSummary {
  double constant = 0.0;  // raw family constant
  int exponent = 0;
  std::size_t n_checked = 0;
  std::size_t n_skipped = 0;  // shifted part outside the grid
  std::size_t violations = 0;
  std::size_t violations_raw = 0;
  double worst_ratio = 0.0;  // max lhs / rhs
};

ShiftSummary time_shift_family(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                               double gamma, const BoxFamily& family, double theta,
                               bool dual = false);

struct TwoOffsetReport {
  double constant = 0.0;
  std::size_t n_boxes = 0;
  std::size_t n_skipped = 0;
};

/// sup of <omega>_{R^- - t1(1+gamma)L} <sigma>_{R^+ + t2(1+gamma)L}^{q-1}; requires
/// t1 + t2 > -2 gamma/(1+gamma). Boxes whose shifted parts leave the grid are skipped.
TwoOffsetReport two_offset_constant(const SpaceTimeGrid& grid, std::span<const double> omega,
                                    double q, double gamma, const BoxFamily& family, double theta1,
                                    double theta2);

}  // namespace parweight
