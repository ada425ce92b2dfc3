#include "parweight/factorize.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "parweight/error.hpp"

namespace parweight {

namespace {

double lq_norm(const SpaceTimeGrid& grid, std::span<const double> f, double q) {
  std::vector<double> terms(f.size());
  for (std::size_t i = 0; i < grid.n_points(); ++i)
    for (long s = 0; s < static_cast<long>(grid.nt()); ++s) {
      const std::size_t c = grid.cell(i, s);
      terms[c] = std::pow(std::fabs(f[c]), q) * grid.cell_measure(i);
    }
  return std::pow(exact_sum(terms), 1.0 / q);
}

class TOperator {
 public:
  TOperator(const SpaceTimeGrid& grid, const AdjacentSystem& adj, std::span<const double> w,
            double q, double gamma, const ScaleFamily& fam, MaximalOp first, MaximalOp second)
      : grid_(grid), adj_(adj), q_(q), gamma_(gamma), fam_(fam), first_(first), second_(second),
        w_pos_(w.size()), w_neg_(w.size()) {
    for (std::size_t c = 0; c < w.size(); ++c) {
      w_pos_[c] = std::pow(w[c], 1.0 / q);
      w_neg_[c] = 1.0 / w_pos_[c];
    }
  }

  std::vector<double> operator()(std::span<const double> f) const {
    const std::size_t n = f.size();
    std::vector<double> a(n), b(n);
    for (std::size_t c = 0; c < n; ++c) {
      a[c] = std::pow(f[c], q_ - 1.0) * w_pos_[c];
      b[c] = f[c] * w_neg_[c];
    }
    const MaximalField ma = maximal_field(grid_, &adj_, a, first_, gamma_, fam_);
    const MaximalField mb = maximal_field(grid_, &adj_, b, second_, gamma_, fam_);
    std::vector<double> out(n);
    for (std::size_t c = 0; c < n; ++c)
      out[c] = std::pow(w_neg_[c] * ma.values[c], 1.0 / (q_ - 1.0)) + w_pos_[c] * mb.values[c];
    return out;
  }

  const std::vector<double>& w_pos() const { return w_pos_; }
  const std::vector<double>& w_neg() const { return w_neg_; }

 private:
  const SpaceTimeGrid& grid_;
  const AdjacentSystem& adj_;
  double q_, gamma_;
  const ScaleFamily& fam_;
  MaximalOp first_, second_;
  std::vector<double> w_pos_, w_neg_;
};

double estimate_norm(const SpaceTimeGrid& grid, const TOperator& T, double q,
                     const FactorizeOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> fields;
  fields.emplace_back(grid.n_cells(), 1.0);
  for (std::size_t j = 0; j < opts.n_norm_fields; ++j) {
    std::vector<double> f(grid.n_cells());
    for (double& x : f) x = (j % 2 == 0) ? unit(rng) : std::exp(2.0 * gauss(rng));
    fields.push_back(std::move(f));
  }
  double best = 0.0;
  for (const auto& f : fields) best = std::max(best, lq_norm(grid, T(f), q) / lq_norm(grid, f, q));
  return best;
}

struct Series {
  std::vector<double> phi;
  double T_norm_est = 0.0;
  double c = 0.0;
  std::size_t n_terms = 0;
  bool converged = false;
  bool retried = false;
  std::vector<double> term_norms;
};

bool run_series(const SpaceTimeGrid& grid, const TOperator& T, double q, double c,
                const FactorizeOptions& opts, Series& out) {
  std::vector<double> term(grid.n_cells(), 1.0);
  const double g_norm = lq_norm(grid, term, q);
  for (double& x : term) x /= g_norm;
  out.phi = term;
  out.term_norms = {1.0};
  out.n_terms = 1;
  out.converged = false;
  int rises = 0;
  while (out.n_terms < opts.max_terms) {
    term = T(term);
    for (double& x : term) x /= c;
    const double n = lq_norm(grid, term, q);
    for (std::size_t k = 0; k < term.size(); ++k) out.phi[k] += term[k];
    rises = n > out.term_norms.back() ? rises + 1 : 0;
    out.term_norms.push_back(n);
    ++out.n_terms;
    if (rises >= 3) return false;
    if (n < opts.tol * lq_norm(grid, out.phi, q)) {
      out.converged = true;
      break;
    }
  }
  return true;
}

Series build_series(const SpaceTimeGrid& grid, const TOperator& T, double q,
                    const FactorizeOptions& opts) {
  Series s;
  s.T_norm_est = 2.0 * estimate_norm(grid, T, q, opts);
  s.c = 2.0 * s.T_norm_est;
  if (run_series(grid, T, q, s.c, opts, s)) return s;
  s.retried = true;
  s.T_norm_est *= 4.0;
  s.c = 2.0 * s.T_norm_est;
  if (run_series(grid, T, q, s.c, opts, s)) return s;
  throw Error(ErrorKind::Divergence, "series terms kept growing after the enlarged retry");
}

struct Certificate {
  double constant = 0.0;
  std::size_t violations = 0;
};

Certificate certify(const SpaceTimeGrid& grid, const AdjacentSystem& adj, std::span<const double> w,
                    MaximalOp op, double gamma, const ScaleFamily& fam, double bound, double slack) {
  const MaximalField mf = maximal_field(grid, &adj, w, op, gamma, fam);
  Certificate cert;
  cert.constant = a1_from_maximal(mf, w).constant;
  for (std::size_t c = 0; c < w.size(); ++c)
    if (mf.covered[c] && mf.values[c] > bound * w[c] * (1.0 + slack)) ++cert.violations;
  return cert;
}

}  // namespace

FactorizationResult rdf_factorize(const SpaceTimeGrid& grid, const AdjacentSystem& adj,
                                  std::span<const double> omega, double q, double gamma,
                                  const ScaleFamily& fam, FactorizeOptions opts) {
  if (omega.size() != grid.n_cells()) throw Error(ErrorKind::InvalidArgument, "weight size mismatch");
  if (!(q > 1.0) || !std::isfinite(q)) throw Error(ErrorKind::InvalidArgument, "q must exceed 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorKind::InvalidArgument, "lag must lie in [0,1)");
  validate_weight(omega);

  FactorizationResult r;
  r.dual_route = q < 2.0;
  const double qq = r.dual_route ? conjugate(q) : q;
  const std::vector<double> w =
      r.dual_route ? sigma(omega, q) : std::vector<double>(omega.begin(), omega.end());
  const MaximalOp first = r.dual_route ? MaximalOp::rect_plus : MaximalOp::rect_minus;
  const MaximalOp second = r.dual_route ? MaximalOp::rect_minus : MaximalOp::rect_plus;

  const TOperator T(grid, adj, w, qq, gamma, fam, first, second);
  Series s = build_series(grid, T, qq, opts);
  r.T_norm_est = s.T_norm_est;
  r.series_base = s.c;
  r.n_terms = s.n_terms;
  r.converged = s.converged;
  r.retried = s.retried;
  r.term_norms = std::move(s.term_norms);

  // a = w^{1/qq} phi^{qq-1} is dominated by `first`, b = w^{-1/qq} phi by `second`.
  std::vector<double> a(w.size()), b(w.size());
  for (std::size_t c = 0; c < w.size(); ++c) {
    a[c] = T.w_pos()[c] * std::pow(s.phi[c], qq - 1.0);
    b[c] = T.w_neg()[c] * s.phi[c];
  }
  const double bound_a = std::pow(s.c, qq - 1.0);
  const double bound_b = s.c;
  if (r.dual_route) {
    r.u = std::move(b);
    r.v = std::move(a);
    r.bound_u = bound_b;
    r.bound_v = bound_a;
  } else {
    r.u = std::move(a);
    r.v = std::move(b);
    r.bound_u = bound_a;
    r.bound_v = bound_b;
  }
  r.phi = std::move(s.phi);

  for (std::size_t c = 0; c < omega.size(); ++c) {
    const double rebuilt = r.u[c] * std::pow(r.v[c], 1.0 - q);
    r.residual = std::max(r.residual, std::fabs(omega[c] - rebuilt) / omega[c]);
  }
  const Certificate cu =
      certify(grid, adj, r.u, MaximalOp::rect_minus, gamma, fam, r.bound_u, opts.cert_slack);
  const Certificate cv =
      certify(grid, adj, r.v, MaximalOp::rect_plus, gamma, fam, r.bound_v, opts.cert_slack);
  r.a1_plus_const_u = cu.constant;
  r.violations_u = cu.violations;
  r.a1_minus_const_v = cv.constant;
  r.violations_v = cv.violations;
  return r;
}

MuckenhouptReport compose_check(const SpaceTimeGrid& grid, std::span<const double> u,
                                std::span<const double> v, double q, double gamma,
                                const BoxFamily& family) {
  if (u.size() != grid.n_cells() || v.size() != grid.n_cells())
    throw Error(ErrorKind::InvalidArgument, "field size mismatch");
  validate_weight(u);
  validate_weight(v);
  std::vector<double> w(u.size());
  for (std::size_t c = 0; c < w.size(); ++c) w[c] = u[c] * std::pow(v[c], 1.0 - q);
  return muckenhoupt_constant(grid, w, q, gamma, Orientation::plus, family);
}

CRConstruction coifman_rochberg(const SpaceTimeGrid& grid, const AdjacentSystem& adj,
                                std::span<const double> nu, double epsilon, double gamma,
                                const ScaleFamily& fam) {
  if (nu.size() != grid.n_cells()) throw Error(ErrorKind::InvalidArgument, "measure size mismatch");
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw Error(ErrorKind::InvalidArgument, "epsilon must lie in [0,1)");
  for (double x : nu)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw Error(ErrorKind::InvalidArgument, "measure density must be finite and nonnegative");

  CRConstruction cr;
  cr.nu.assign(nu.begin(), nu.end());
  cr.epsilon = epsilon;
  // Every integer scale up to nt, so a point mass is seen from its whole future.
  ScaleFamily cyl = fam;
  if (cyl.ladder.empty())
    for (std::size_t m = 1; m <= grid.nt(); ++m) cyl.ladder.push_back(static_cast<double>(m));
  const MaximalField mf = maximal_field(grid, &adj, nu, MaximalOp::cyl_minus, 0.0, cyl);
  bool any_positive = false;
  for (std::size_t c = 0; c < nu.size(); ++c)
    if (mf.covered[c] && mf.values[c] > 0.0) any_positive = true;
  if (!any_positive) throw Error(ErrorKind::DegenerateMeasure, "M^-nu vanishes on every covered cell");
  cr.maximal = mf.values;
  cr.covered = mf.covered;
  cr.weight.resize(nu.size());
  for (std::size_t c = 0; c < nu.size(); ++c)
    cr.weight[c] = mf.covered[c] ? std::pow(mf.values[c], epsilon) : 1.0;
  cr.a1 = a1_constant(grid, &adj, cr.weight, gamma, Orientation::plus, fam, {.allow_zero = true});
  return cr;
}

CRConstruction a1_decompose(const SpaceTimeGrid& grid, const AdjacentSystem& adj,
                            std::span<const double> omega, double gamma_prime, double kappa,
                            const ScaleFamily& fam) {
  if (omega.size() != grid.n_cells()) throw Error(ErrorKind::InvalidArgument, "weight size mismatch");
  if (!(kappa > 0.0)) throw Error(ErrorKind::InvalidArgument, "kappa must be positive");
  for (double x : omega)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw Error(ErrorKind::NonpositiveWeight, "weight must be finite and nonnegative");

  CRConstruction cr;
  cr.epsilon = 1.0 / (1.0 + kappa);
  cr.nu.resize(omega.size());
  for (std::size_t c = 0; c < omega.size(); ++c) cr.nu[c] = std::pow(omega[c], 1.0 + kappa);
  const MaximalField mf = maximal_field(grid, &adj, cr.nu, MaximalOp::rect_minus, gamma_prime, fam);
  cr.maximal = mf.values;
  cr.covered = mf.covered;
  cr.weight.resize(omega.size());
  cr.phi.resize(omega.size());
  for (std::size_t c = 0; c < omega.size(); ++c) {
    if (!mf.covered[c]) {
      cr.weight[c] = 1.0;
      cr.phi[c] = 1.0;
      continue;
    }
    cr.weight[c] = std::pow(mf.values[c], cr.epsilon);
    if (omega[c] == 0.0 && cr.weight[c] == 0.0) {
      cr.phi[c] = 1.0;  // omega = phi * weight holds for any phi
      continue;
    }
    cr.phi[c] = omega[c] / cr.weight[c];
    cr.sup_log_phi = std::max(cr.sup_log_phi, std::fabs(std::log(cr.phi[c])));
  }
  cr.a1 = a1_constant(grid, &adj, cr.weight, gamma_prime, Orientation::plus, fam,
                      {.allow_zero = true});
  return cr;
}

}  // namespace parweight
