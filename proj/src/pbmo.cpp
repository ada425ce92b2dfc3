#include "parweight/pbmo.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "parweight/error.hpp"
#include "parweight/parallel.hpp"
#include "parweight/weights.hpp"

namespace parweight {

namespace {

void check_oscillation_inputs(const SpaceTimeGrid& grid, std::span<const double> u, double gamma) {
  if (u.size() != grid.n_cells()) throw Error(ErrorKind::InvalidArgument, "field size mismatch");
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::InvalidArgument, "lag must lie in (0,1)");
}

struct Parts {
  Region ahead;   // where (u - a)_+ is charged
  Region behind;  // where (a - u)_+ is charged
};

Parts parts_for(const SpaceTimeGrid& grid, const ParabolicBox& box, double gamma, Orientation o) {
  const Region upper = box_region(grid, box, Part::upper, gamma);
  const Region lower = box_region(grid, box, Part::lower, gamma);
  if (o == Orientation::plus) return {upper, lower};
  return {lower, upper};
}

// Mass-weighted sum of g(u) over the region's cells in cell order, divided by
// the region's mass times its length.
template <class G>
double cell_average(const SpaceTimeGrid& grid, std::span<const double> u, const Region& r, G&& g) {
  double num = 0.0, mass = 0.0;
  for (std::size_t i : r.points) {
    const double mu = grid.space().mass(i);
    double row = 0.0;
    for (long s = r.span.begin; s < r.span.end; ++s) row += g(u[grid.cell(i, s)]);
    num += mu * row;
    mass += mu;
  }
  return num / (mass * static_cast<double>(r.span.size()));
}

double objective(const SpaceTimeGrid& grid, std::span<const double> u, const Parts& p, double a) {
  return cell_average(grid, u, p.ahead, [a](double x) { return std::max(x - a, 0.0); }) +
         cell_average(grid, u, p.behind, [a](double x) { return std::max(a - x, 0.0); });
}

}  // namespace

double oscillation_objective(const SpaceTimeGrid& grid, std::span<const double> u,
                             const ParabolicBox& box, double gamma, Orientation orientation,
                             double a) {
  check_oscillation_inputs(grid, u, gamma);
  return objective(grid, u, parts_for(grid, box, gamma, orientation), a);
}

OscillationResult best_oscillation_constant(const SpaceTimeGrid& grid, std::span<const double> u,
                                            const ParabolicBox& box, double gamma,
                                            Orientation orientation) {
  check_oscillation_inputs(grid, u, gamma);
  const Parts p = parts_for(grid, box, gamma, orientation);

  // Breakpoints with their normalized weights on each side.
  struct Knot {
    double x, w_ahead, w_behind;
  };
  std::vector<Knot> knots;
  double scale = 0.0;
  auto collect = [&](const Region& r, bool ahead) {
    const double norm = region_measure(grid, r);
    for (std::size_t i : r.points)
      for (long s = r.span.begin; s < r.span.end; ++s) {
        const double x = u[grid.cell(i, s)];
        const double w = grid.cell_measure(i) / norm;
        knots.push_back({x, ahead ? w : 0.0, ahead ? 0.0 : w});
        scale = std::max(scale, std::fabs(x));
      }
  };
  collect(p.ahead, true);
  collect(p.behind, false);
  std::sort(knots.begin(), knots.end(), [](const Knot& a, const Knot& b) { return a.x < b.x; });
  std::vector<Knot> uniq;
  for (const auto& k : knots) {
    if (!uniq.empty() && uniq.back().x == k.x) {
      uniq.back().w_ahead += k.w_ahead;
      uniq.back().w_behind += k.w_behind;
    } else {
      uniq.push_back(k);
    }
  }

  // Estimated objective at every knot from running sums.
  const std::size_t n = uniq.size();
  double s_ahead = 0.0, w_ahead = 0.0;  // strictly above the knot
  for (const auto& k : uniq) {
    s_ahead += k.w_ahead * k.x;
    w_ahead += k.w_ahead;
  }
  double s_behind = 0.0, w_behind = 0.0;  // strictly below
  std::vector<double> est(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& k = uniq[j];
    s_ahead -= k.w_ahead * k.x;
    w_ahead -= k.w_ahead;
    est[j] = (s_ahead - k.x * w_ahead) + (k.x * w_behind - s_behind);
    s_behind += k.w_behind * k.x;
    w_behind += k.w_behind;
  }
  const double best_est = *std::min_element(est.begin(), est.end());
  const double window = best_est + 1e-9 * (std::fabs(best_est) + scale) + 1e-300;

  // Exact re-evaluation of every knot near the estimated minimum.
  OscillationResult r;
  r.gamma = gamma;
  r.orientation = orientation;
  std::vector<std::pair<std::size_t, double>> exact;
  double vmin = INFINITY;
  for (std::size_t j = 0; j < n; ++j) {
    if (est[j] > window) continue;
    exact.push_back({j, objective(grid, u, p, uniq[j].x)});
    vmin = std::min(vmin, exact.back().second);
  }
  // The objective is often flat between two knots; rounding must not pick the
  // right end of such a stretch over the left one. The value is the exact
  // minimum, which keeps it independent of the direction of the scan.
  const double tie = vmin + 1e-13 * (std::fabs(vmin) + scale);
  r.value = vmin;
  for (const auto& [j, v] : exact)
    if (v <= tie) {
      r.a = uniq[j].x;
      break;
    }
  return r;
}

PbmoReport pbmo_norm(const SpaceTimeGrid& grid, std::span<const double> u, double gamma,
                     const BoxFamily& family, Orientation orientation) {
  check_oscillation_inputs(grid, u, gamma);
  if (family.boxes.empty()) throw Error(ErrorKind::EmptyFamily, "no boxes");
  PbmoReport r;
  r.per_box.resize(family.boxes.size());
  parallel_for(family.boxes.size(), [&](std::size_t b) {
    r.per_box[b] = best_oscillation_constant(grid, u, family.boxes[b], gamma, orientation).value;
  });
  for (std::size_t b = 0; b < r.per_box.size(); ++b)
    if (b == 0 || r.per_box[b] > r.norm) {
      r.norm = r.per_box[b];
      r.worst_index = b;
    }
  return r;
}

JNProfile jn_profile(const SpaceTimeGrid& grid, std::span<const double> u, const ParabolicBox& box,
                     double gamma, std::span<const double> xi_grid) {
  check_oscillation_inputs(grid, u, gamma);
  for (double xi : xi_grid)
    if (!(xi >= 0.0)) throw Error(ErrorKind::InvalidArgument, "thresholds must be nonnegative");
  JNProfile prof;
  prof.a = best_oscillation_constant(grid, u, box, gamma, Orientation::plus).a;
  const Region upper = box_region(grid, box, Part::upper, gamma);
  const Region lower = box_region(grid, box, Part::lower, gamma);
  const Region full = box_region(grid, box, Part::full, gamma);
  const double lam = region_measure(grid, full);

  auto tail = [&](const Region& r, double xi, bool above) {
    std::vector<double> terms;
    for (std::size_t i : r.points)
      for (long s = r.span.begin; s < r.span.end; ++s) {
        const double x = u[grid.cell(i, s)];
        const double d = above ? x - prof.a : prof.a - x;
        if (d > xi) terms.push_back(grid.cell_measure(i));
      }
    return exact_sum(terms) / lam;
  };

  // One least-squares line per side, then common constants: B the smaller decay,
  // A the smallest prefactor covering both sides. A nonincreasing tail has a
  // nonpositive fitted slope, so B >= 0.
  std::vector<double> ux, uy, lx, ly;
  for (double xi : xi_grid) {
    prof.xi.push_back(xi);
    prof.upper_tail.push_back(tail(upper, xi, true));
    prof.lower_tail.push_back(tail(lower, xi, false));
    if (prof.upper_tail.back() > 0.0) {
      ux.push_back(xi);
      uy.push_back(std::log(prof.upper_tail.back()));
    }
    if (prof.lower_tail.back() > 0.0) {
      lx.push_back(xi);
      ly.push_back(std::log(prof.lower_tail.back()));
    }
  }
  if (ux.empty() && lx.empty()) {
    prof.degenerate = true;
    return prof;
  }

  struct Line {
    double slope = 0.0, intercept = 0.0;
  };
  // Coordinates are taken relative to the first point, so equal tails give an
  // exactly zero slope instead of rounding residue of either sign.
  auto fit = [](const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      mx += x[j] - x[0];
      my += y[j] - y[0];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double dx = (x[j] - x[0]) - mx;
      sxx += dx * dx;
      sxy += dx * ((y[j] - y[0]) - my);
    }
    Line l;
    l.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    l.intercept = (y[0] + my) - l.slope * (x[0] + mx);
    return l;
  };
  prof.B = INFINITY;
  double logA = -INFINITY;
  for (const auto& [x, y] : {std::pair{&ux, &uy}, std::pair{&lx, &ly}}) {
    if (x->empty()) continue;
    const Line l = fit(*x, *y);
    prof.B = std::min(prof.B, 0.0 - l.slope);  // +0 for a flat tail
    for (std::size_t j = 0; j < x->size(); ++j)
      prof.max_log_residual =
          std::max(prof.max_log_residual, std::fabs((*y)[j] - (l.intercept + l.slope * (*x)[j])));
  }
  for (const auto& [x, y] : {std::pair{&ux, &uy}, std::pair{&lx, &ly}})
    for (std::size_t j = 0; j < x->size(); ++j) logA = std::max(logA, (*y)[j] + prof.B * (*x)[j]);
  prof.A = std::exp(logA);
  return prof;
}

LogCorrespondence log_correspondence_check(const SpaceTimeGrid& grid, std::span<const double> omega,
                                           double q, double gamma, const BoxFamily& family) {
  validate_weight(omega);
  std::vector<double> u(omega.size());
  for (std::size_t c = 0; c < u.size(); ++c) u[c] = -std::log(omega[c]);
  LogCorrespondence r;
  r.pbmo_norm_of_minus_log = pbmo_norm(grid, u, gamma, family, Orientation::plus).norm;
  r.aq_const = muckenhoupt_constant(grid, omega, q, gamma, Orientation::plus, family).constant;
  std::vector<double> back(u.size());
  for (std::size_t c = 0; c < u.size(); ++c) back[c] = std::exp(-u[c]);
  r.reverse_aq_const = muckenhoupt_constant(grid, back, q, gamma, Orientation::plus, family).constant;
  return r;
}

}  // namespace parweight
