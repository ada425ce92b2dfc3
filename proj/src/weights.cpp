#include "parweight/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "parweight/error.hpp"
#include "parweight/io.hpp"
#include "parweight/parallel.hpp"

namespace parweight {

std::vector<double> make_weight(const SpaceTimeGrid& grid, const WeightSpec& spec) {
  std::vector<double> w(grid.n_cells());
  const long nt = static_cast<long>(grid.nt());
  const auto& space = grid.space();
  switch (spec.preset) {
    case WeightPreset::constant:
      std::fill(w.begin(), w.end(), spec.value);
      break;
    case WeightPreset::exp_time:
      for (std::size_t i = 0; i < grid.n_points(); ++i)
        for (long s = 0; s < nt; ++s) w[grid.cell(i, s)] = std::exp(spec.value * grid.time_center(s));
      break;
    case WeightPreset::pow_time:
      for (long s = 0; s < nt; ++s) {
        const double d = std::fabs(grid.time_center(s) - spec.shift);
        if (d < 1e-12)
          throw Error(ErrorKind::InvalidArgument, "pow_time: a cell center sits on the singularity");
        for (std::size_t i = 0; i < grid.n_points(); ++i) w[grid.cell(i, s)] = std::pow(d, spec.value);
      }
      break;
    case WeightPreset::pow_space:
      if (space.dim() < 1) throw Error(ErrorKind::InvalidArgument, "pow_space needs coordinates");
      for (std::size_t i = 0; i < grid.n_points(); ++i) {
        const double d = std::fabs(space.coords(i)[0] - spec.shift);
        if (d < 1e-12)
          throw Error(ErrorKind::InvalidArgument, "pow_space: a point sits on the singularity");
        for (long s = 0; s < nt; ++s) w[grid.cell(i, s)] = std::pow(d, spec.value);
      }
      break;
    case WeightPreset::file:
      w = read_field_csv(spec.path, grid);
      break;
  }
  validate_weight(w);
  return w;
}

void validate_weight(std::span<const double> omega) {
  for (std::size_t c = 0; c < omega.size(); ++c)
    if (!(omega[c] > 0.0) || !std::isfinite(omega[c]))
      throw Error(ErrorKind::NonpositiveWeight, "cell " + std::to_string(c) + " has value " +
                                                    std::to_string(omega[c]));
}

double conjugate(double q) {
  if (!(q > 1.0)) throw Error(ErrorKind::InvalidArgument, "q must exceed 1");
  return q / (q - 1.0);
}

std::vector<double> sigma(std::span<const double> omega, double q) {
  const double e = 1.0 - conjugate(q);
  std::vector<double> out(omega.size());
  for (std::size_t c = 0; c < omega.size(); ++c) out[c] = std::pow(omega[c], e);
  return out;
}

namespace {

void check_inputs(const SpaceTimeGrid& grid, std::span<const double> omega, double q, double gamma) {
  if (omega.size() != grid.n_cells()) throw Error(ErrorKind::InvalidArgument, "weight size mismatch");
  if (!(q > 1.0) || !std::isfinite(q)) throw Error(ErrorKind::InvalidArgument, "q must exceed 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorKind::InvalidArgument, "lag must lie in [0,1)");
  validate_weight(omega);
}

Part past(Orientation o) { return o == Orientation::plus ? Part::lower : Part::upper; }
Part future(Orientation o) { return o == Orientation::plus ? Part::upper : Part::lower; }

// run_end[cell(i, s)]: first time index after s where omega(i, .) changes.
std::vector<long> constant_runs(const SpaceTimeGrid& grid, std::span<const double> omega) {
  const long nt = static_cast<long>(grid.nt());
  std::vector<long> run_end(omega.size());
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    long end = nt;
    for (long s = nt - 1; s >= 0; --s) {
      if (s + 1 < nt && omega[grid.cell(i, s)] != omega[grid.cell(i, s + 1)]) end = s + 1;
      run_end[grid.cell(i, s)] = end;
    }
  }
  return run_end;
}

// The value of omega when it is constant on the box part.
std::optional<double> constant_on(const SpaceTimeGrid& grid, std::span<const double> omega,
                                  const std::vector<long>& run_end, const ParabolicBox& box, Part part,
                                  double gamma) {
  const TimeSpan span = part_span(box, part, gamma);
  if (span.empty()) return std::nullopt;
  const double v = omega[grid.cell(box.members->front(), span.begin)];
  for (std::size_t i : *box.members) {
    const std::size_t c = grid.cell(i, span.begin);
    if (omega[c] != v || run_end[c] < span.end) return std::nullopt;
  }
  return v;
}

}  // namespace

std::vector<double> muckenhoupt_values(const SpaceTimeGrid& grid, std::span<const double> omega,
                                       double q, double gamma, Orientation orientation,
                                       const BoxFamily& family) {
  check_inputs(grid, omega, q, gamma);
  if (family.boxes.empty()) throw Error(ErrorKind::EmptyFamily, "no boxes");
  const Field w(grid, {omega.begin(), omega.end()});
  const Field s(grid, sigma(omega, q));
  const auto run_end = constant_runs(grid, omega);
  std::vector<double> out(family.boxes.size());
  parallel_for(out.size(), [&](std::size_t b) {
    const auto& box = family.boxes[b];
    const double a = part_average(grid, w, box, past(orientation), gamma);
    // Where omega is a constant c the sigma factor is exactly 1/c; computing it
    // as a power of a power would drift by an ulp with q and break the
    // monotonicity of the per-box values in q.
    if (const auto c = constant_on(grid, omega, run_end, box, future(orientation), gamma)) {
      out[b] = a / *c;
      return;
    }
    const double d = part_average(grid, s, box, future(orientation), gamma);
    out[b] = a * std::pow(d, q - 1.0);
  });
  return out;
}

MuckenhouptReport muckenhoupt_constant(const SpaceTimeGrid& grid, std::span<const double> omega,
                                       double q, double gamma, Orientation orientation,
                                       const BoxFamily& family) {
  MuckenhouptReport r;
  r.q = q;
  r.gamma = gamma;
  r.orientation = orientation;
  r.mode = family.mode;
  r.per_box = muckenhoupt_values(grid, omega, q, gamma, orientation, family);
  r.n_boxes = r.per_box.size();
  for (std::size_t b = 0; b < r.per_box.size(); ++b)
    if (b == 0 || r.per_box[b] > r.constant) {
      r.constant = r.per_box[b];
      r.worst_index = b;
    }
  r.worst_box = family.boxes[r.worst_index];
  return r;
}

A1Report a1_from_maximal(const MaximalField& mf, std::span<const double> omega) {
  if (omega.size() != mf.values.size()) throw Error(ErrorKind::InvalidArgument, "weight size mismatch");
  A1Report r;
  r.gamma = mf.gamma;
  bool first = true;
  for (std::size_t c = 0; c < omega.size(); ++c) {
    if (!mf.covered[c]) continue;
    ++r.n_covered;
    double ratio;
    if (omega[c] == 0.0) {
      if (mf.values[c] == 0.0) {
        ++r.n_skipped;
        continue;
      }
      ratio = std::numeric_limits<double>::infinity();
    } else {
      ratio = mf.values[c] / omega[c];
    }
    if (first || ratio > r.constant) {
      r.constant = ratio;
      r.worst_cell = c;
      first = false;
    }
  }
  return r;
}

A1Report a1_constant(const SpaceTimeGrid& grid, const AdjacentSystem* adj,
                     std::span<const double> omega, double gamma, Orientation orientation,
                     const ScaleFamily& fam, A1Options opts) {
  if (omega.size() != grid.n_cells()) throw Error(ErrorKind::InvalidArgument, "weight size mismatch");
  if (opts.allow_zero) {
    for (double v : omega)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw Error(ErrorKind::NonpositiveWeight, "weight must be finite and nonnegative");
  } else {
    validate_weight(omega);
  }
  const bool plus = orientation == Orientation::plus;
  MaximalOp op;
  if (opts.cylinder)
    op = plus ? MaximalOp::cyl_minus : MaximalOp::cyl_plus;
  else
    op = plus ? MaximalOp::rect_minus : MaximalOp::rect_plus;
  const MaximalField mf = maximal_field(grid, adj, omega, op, gamma, fam);
  A1Report r = a1_from_maximal(mf, omega);
  r.orientation = orientation;
  return r;
}

namespace {

bool subset_of(const Region& sub, const std::vector<std::size_t>& members, TimeSpan span) {
  if (sub.span.begin < span.begin || sub.span.end > span.end) return false;
  return std::includes(members.begin(), members.end(), sub.points.begin(), sub.points.end());
}

}  // namespace

InequalitySides absolute_continuity_check(const SpaceTimeGrid& grid, std::span<const double> omega,
                                          double q, double gamma, const ParabolicBox& box,
                                          const Region& subset, double constant, bool dual) {
  check_inputs(grid, omega, q, gamma);
  const Region whole = box_region(grid, box, dual ? Part::upper : Part::lower, gamma);
  const Region host = box_region(grid, box, dual ? Part::lower : Part::upper, gamma);
  if (subset.points.empty() || subset.span.empty())
    throw Error(ErrorKind::EmptyRegion, "subset is empty");
  if (!subset_of(subset, host.points, host.span))
    throw Error(ErrorKind::SubsetNotContained,
                dual ? "subset must lie in the lower part" : "subset must lie in the upper part");

  const Field f(grid, dual ? sigma(omega, q) : std::vector<double>(omega.begin(), omega.end()));
  const double e = dual ? conjugate(q) : q;
  const double k = dual ? std::pow(constant, conjugate(q) - 1.0) : constant;
  InequalitySides r;
  r.lhs = region_integral(grid, f, whole);
  r.rhs = k * std::pow(region_measure(grid, whole) / region_measure(grid, subset), e) *
          region_integral(grid, f, subset);
  r.ratio = r.lhs / r.rhs;
  return r;
}

namespace {

ShiftCheck shift_check_with(const SpaceTimeGrid& grid, const Field& f, const ParabolicBox& box,
                            double gamma, double theta, double constant, bool dual) {
  const Part part = dual ? Part::upper : Part::lower;
  const double shift = (dual ? -1.0 : 1.0) * theta * (1.0 + gamma) * box.L_steps;
  const TimeSpan moved = part_span(box, part, gamma, shift);
  if (moved.empty() || !grid.contains(moved))
    throw Error(ErrorKind::ShiftOutOfGrid, "shifted part leaves the time grid");
  ShiftCheck r;
  r.exponent = static_cast<int>(std::ceil(theta - 1e-12));
  r.lhs = part_average(grid, f, box, part, gamma);
  const double avg = part_average(grid, f, box, part, gamma, shift);
  r.rhs_raw = std::pow(constant, r.exponent) * avg;
  r.rhs = std::pow(std::max(1.0, constant), r.exponent) * avg;
  // Relative slack for rounding in the averages.
  r.holds = r.lhs <= r.rhs * (1.0 + 1e-12);
  r.holds_raw = r.lhs <= r.rhs_raw * (1.0 + 1e-12);
  return r;
}

}  // namespace

ShiftCheck time_shift_check(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                            double gamma, const ParabolicBox& box, double theta, double constant,
                            bool dual) {
  check_inputs(grid, omega, q, gamma);
  if (!(theta > 0.0)) throw Error(ErrorKind::InvalidArgument, "theta must be positive");
  const Field f(grid, dual ? sigma(omega, q) : std::vector<double>(omega.begin(), omega.end()));
  return shift_check_with(grid, f, box, gamma, theta, constant, dual);
}

ShiftSummary time_shift_family(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                               double gamma, const BoxFamily& family, double theta, bool dual) {
  if (!(theta > 0.0)) throw Error(ErrorKind::InvalidArgument, "theta must be positive");
  ShiftSummary s;
  s.constant = muckenhoupt_constant(grid, omega, q, gamma, Orientation::plus, family).constant;
  s.exponent = static_cast<int>(std::ceil(theta - 1e-12));
  const Field f(grid, dual ? sigma(omega, q) : std::vector<double>(omega.begin(), omega.end()));
  for (const auto& box : family.boxes) {
    ShiftCheck c;
    try {
      c = shift_check_with(grid, f, box, gamma, theta, s.constant, dual);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ShiftOutOfGrid) throw;
      ++s.n_skipped;
      continue;
    }
    ++s.n_checked;
    if (!c.holds) ++s.violations;
    if (!c.holds_raw) ++s.violations_raw;
    s.worst_ratio = std::max(s.worst_ratio, c.lhs / c.rhs);
  }
  return s;
}

TwoOffsetReport two_offset_constant(const SpaceTimeGrid& grid, std::span<const double> omega,
                                    double q, double gamma, const BoxFamily& family, double theta1,
                                    double theta2) {
  check_inputs(grid, omega, q, gamma);
  if (!(theta1 + theta2 > -2.0 * gamma / (1.0 + gamma)))
    throw Error(ErrorKind::InvalidArgument, "offsets need theta1 + theta2 > -2 gamma/(1+gamma)");
  if (family.boxes.empty()) throw Error(ErrorKind::EmptyFamily, "no boxes");
  const Field w(grid, {omega.begin(), omega.end()});
  const Field s(grid, sigma(omega, q));
  TwoOffsetReport r;
  for (const auto& box : family.boxes) {
    const double lag = (1.0 + gamma) * box.L_steps;
    const double s1 = -theta1 * lag, s2 = theta2 * lag;
    const TimeSpan a = part_span(box, Part::lower, gamma, s1);
    const TimeSpan b = part_span(box, Part::upper, gamma, s2);
    if (a.empty() || b.empty() || !grid.contains(a) || !grid.contains(b)) {
      ++r.n_skipped;
      continue;
    }
    ++r.n_boxes;
    const double v = part_average(grid, w, box, Part::lower, gamma, s1) *
                     std::pow(part_average(grid, s, box, Part::upper, gamma, s2), q - 1.0);
    r.constant = std::max(r.constant, v);
  }
  if (r.n_boxes == 0) throw Error(ErrorKind::EmptyFamily, "every shifted box leaves the grid");
  return r;
}

}  // namespace parweight
