#include "parweight/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "parweight/error.hpp"
#include "parweight/parallel.hpp"

namespace parweight {

std::vector<double> rhi_values(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                               const BoxFamily& family, RhiSide side, double kappa) {
  if (omega.size() != grid.n_cells()) throw Error(ErrorKind::InvalidArgument, "weight size mismatch");
  if (!(kappa > 0.0)) throw Error(ErrorKind::InvalidArgument, "kappa must be positive");
  if (family.boxes.empty()) throw Error(ErrorKind::EmptyFamily, "no boxes");
  validate_weight(omega);
  std::vector<double> base = side == RhiSide::weight
                                 ? std::vector<double>(omega.begin(), omega.end())
                                 : sigma(omega, q);
  std::vector<double> raised(base.size());
  for (std::size_t c = 0; c < base.size(); ++c) raised[c] = std::pow(base[c], kappa + 1.0);
  const Field f(grid, std::move(base));
  const Field g(grid, std::move(raised));
  const Part hi = side == RhiSide::weight ? Part::lower : Part::upper;
  const Part lo = side == RhiSide::weight ? Part::upper : Part::lower;
  std::vector<double> out(family.boxes.size());
  parallel_for(out.size(), [&](std::size_t b) {
    const auto& box = family.boxes[b];
    const double lhs = std::pow(part_average(grid, g, box, hi, 0.0), 1.0 / (kappa + 1.0));
    out[b] = lhs / part_average(grid, f, box, lo, 0.0);
  });
  return out;
}

RhiResult rhi_constant(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                       const BoxFamily& family, RhiSide side, double kappa) {
  const auto v = rhi_values(grid, omega, q, family, side, kappa);
  RhiResult r;
  r.kappa = kappa;
  r.mode = family.mode;
  r.side = side;
  r.worst_index = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  r.C = v[r.worst_index];
  r.ladder_kappa = {kappa};
  r.ladder_C = {r.C};
  return r;
}

RhiResult reverse_holder_search(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                                const BoxFamily& family, RhiSide side,
                                std::vector<double> kappa_ladder, double C_budget) {
  if (kappa_ladder.empty()) throw Error(ErrorKind::InvalidArgument, "empty kappa ladder");
  std::sort(kappa_ladder.begin(), kappa_ladder.end(), std::greater<>());
  RhiResult best;
  std::vector<double> ks, cs;
  for (double k : kappa_ladder) {
    best = rhi_constant(grid, omega, q, family, side, k);
    ks.push_back(k);
    cs.push_back(best.C);
    if (best.C <= C_budget) break;
  }
  best.within_budget = best.C <= C_budget;
  best.ladder_kappa = std::move(ks);
  best.ladder_C = std::move(cs);
  return best;
}

SelfImprovement self_improvement(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                                 double gamma, const BoxFamily& family,
                                 std::vector<double> epsilon_ladder, double multiple) {
  for (double e : epsilon_ladder)
    if (!(e > 0.0) || !(q - e > 1.0))
      throw Error(ErrorKind::InvalidArgument, "each epsilon needs 0 < epsilon < q - 1");
  std::sort(epsilon_ladder.begin(), epsilon_ladder.end());
  SelfImprovement r;
  r.base_constant = muckenhoupt_constant(grid, omega, q, gamma, Orientation::plus, family).constant;
  for (double e : epsilon_ladder) {
    const double c =
        muckenhoupt_constant(grid, omega, q - e, gamma, Orientation::plus, family).constant;
    r.epsilons.push_back(e);
    r.constants.push_back(c);
    if (std::isfinite(c) && c <= multiple * r.base_constant) {
      r.epsilon = e;
      r.constant = c;
    }
  }
  r.exhausted = r.epsilon == 0.0;
  return r;
}

AinftyFit ainfty_check(const SpaceTimeGrid& grid, std::span<const double> omega,
                       const BoxFamily& family, std::span<const double> fractions) {
  if (omega.size() != grid.n_cells()) throw Error(ErrorKind::InvalidArgument, "weight size mismatch");
  if (family.boxes.empty()) throw Error(ErrorKind::EmptyFamily, "no boxes");
  if (fractions.empty()) throw Error(ErrorKind::InvalidArgument, "no subset fractions");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw Error(ErrorKind::InvalidArgument, "fractions must lie in (0,1]");
  validate_weight(omega);

  struct Point {
    double frac, ratio;
  };
  std::vector<std::vector<Point>> per_box(family.boxes.size());
  parallel_for(family.boxes.size(), [&](std::size_t b) {
    const auto& box = family.boxes[b];
    const Region lower = box_region(grid, box, Part::lower, 0.0);
    const Region upper = box_region(grid, box, Part::upper, 0.0);
    struct Cell {
      double w, lam;
      std::size_t id;
    };
    std::vector<Cell> cells;
    for (std::size_t i : lower.points)
      for (long s = lower.span.begin; s < lower.span.end; ++s) {
        const std::size_t c = grid.cell(i, s);
        cells.push_back({omega[c], grid.cell_measure(i), c});
      }
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
      return a.w != b.w ? a.w > b.w : a.id < b.id;
    });
    std::vector<double> mass_terms, lam_terms;
    for (const auto& c : cells) lam_terms.push_back(c.lam);
    const double lam_total = exact_sum(lam_terms);
    double up = 0.0;
    {
      std::vector<double> t;
      for (std::size_t i : upper.points)
        for (long s = upper.span.begin; s < upper.span.end; ++s)
          t.push_back(omega[grid.cell(i, s)] * grid.cell_measure(i));
      up = exact_sum(t);
    }
    for (double f : fractions) {
      mass_terms.clear();
      lam_terms.clear();
      double lam = 0.0;
      for (const auto& c : cells) {
        if (lam >= f * lam_total * (1.0 - 1e-12)) break;
        mass_terms.push_back(c.w * c.lam);
        lam_terms.push_back(c.lam);
        lam += c.lam;
      }
      per_box[b].push_back({exact_sum(lam_terms) / lam_total, exact_sum(mass_terms) / up});
    }
  });

  AinftyFit fit;
  for (const auto& pts : per_box)
    for (const auto& p : pts) {
      fit.fractions.push_back(p.frac);
      fit.ratios.push_back(p.ratio);
    }
  fit.n_points = fit.ratios.size();
  fit.Ctilde = std::max(1.0, *std::max_element(fit.ratios.begin(), fit.ratios.end()));
  bool any = false;
  for (std::size_t j = 0; j < fit.n_points; ++j) {
    if (fit.fractions[j] >= 1.0 - 1e-12) continue;
    const double e = std::log(fit.ratios[j] / fit.Ctilde) / std::log(fit.fractions[j]);
    fit.epsilon = any ? std::min(fit.epsilon, e) : e;
    any = true;
  }
  if (!any) fit.epsilon = 1.0;
  for (std::size_t j = 0; j < fit.n_points; ++j) {
    const double env = std::log(fit.Ctilde) + fit.epsilon * std::log(fit.fractions[j]);
    fit.max_residual = std::max(fit.max_residual, env - std::log(fit.ratios[j]));
  }
  return fit;
}

LagTransfer lag_transfer(const SpaceTimeGrid& grid, std::span<const double> omega, double q,
                         std::vector<double> gammas, const BoxFamily& family) {
  if (gammas.empty()) throw Error(ErrorKind::InvalidArgument, "no lags");
  std::sort(gammas.begin(), gammas.end());
  for (const auto& box : family.boxes)
    for (double g : gammas)
      if (!is_integral(g * box.L_steps))
        throw Error(ErrorKind::InvalidArgument, "lag not aligned with a family box");

  LagTransfer r;
  r.gammas = gammas;
  r.n_boxes = family.boxes.size();
  std::vector<std::vector<double>> values;
  for (double g : gammas) {
    values.push_back(muckenhoupt_values(grid, omega, q, g, Orientation::plus, family));
    r.constants.push_back(*std::max_element(values.back().begin(), values.back().end()));
  }
  const std::size_t n = gammas.size();
  r.ratios.assign(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) r.ratios[i][j] = r.constants[i] / r.constants[j];

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double factor = std::pow((1.0 - gammas[i]) / (1.0 - gammas[j]), q);
      for (std::size_t b = 0; b < r.n_boxes; ++b) {
        const double bound = factor * values[i][b];
        const double slack = values[j][b] / bound;
        r.worst_slack = std::max(r.worst_slack, slack);
        if (values[j][b] > bound * (1.0 + 1e-12)) ++r.violations;
      }
    }
  return r;
}

}  // namespace parweight
