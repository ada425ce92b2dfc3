#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "parweight/maximal.hpp"
#include "parweight/weights.hpp"

namespace parweight {

struct FactorizeOptions {
  double tol = 1e-10;            // stop once ||term||_q < tol ||phi||_q
  std::size_t max_terms = 200;
  std::size_t n_norm_fields = 32;  // random fields for the norm estimate
  std::uint64_t seed = 1;
  double cert_slack = 1e-12;  // relative rounding slack in the pointwise certificates
};

struct FactorizationResult {
  std::vector<double> u, v, phi;
  double T_norm_est = 0.0;  // twice the largest observed ||Tf||/||f||
  double series_base = 0.0; // c = 2 T_norm_est, possibly enlarged by a retry
  std::size_t n_terms = 0;
  bool converged = false;
  bool retried = false;
  bool dual_route = false;
  double residual = 0.0;  // max |omega - u v^{1-q}| / omega
  double a1_plus_const_u = 0.0;   // max MM^{g-}u / u
  double a1_minus_const_v = 0.0;  // max MM^{g+}v / v
  double bound_u = 0.0;  // certified bound for a1_plus_const_u
  double bound_v = 0.0;
  std::size_t violations_u = 0;
  std::size_t violations_v = 0;
  std::vector<double> term_norms;
};

/// phi = sum_{i>=0} c^{-i} T^i g with
/// Tf = [w^{-1/q} MM^{g-}(f^{q-1} w^{1/q})]^{1/(q-1)} + w^{1/q} MM^{g+}(f w^{-1/q}),
/// u = w^{1/q} phi^{q-1}, v = w^{-1/q} phi. For q < 2 the construction runs on
/// sigma = w^{1-q'} at q' with the two operators exchanged and the roles of u
/// and v swapped. g is the normalized constant field.
FactorizationResult rdf_factorize(const SpaceTimeGrid& grid, const AdjacentSystem& adj,
                                  std::span<const double> omega, double q, double gamma,
                                  const ScaleFamily& fam, FactorizeOptions opts = {});

/// [u v^{1-q}]_{A^+_q(gamma')} on the family.
MuckenhouptReport compose_check(const SpaceTimeGrid& grid, std::span<const double> u,
                                std::span<const double> v, double q, double gamma,
                                const BoxFamily& family);

struct CRConstruction {
  std::vector<double> nu;       // density with respect to lambda
  double epsilon = 0.0;
  std::vector<double> maximal;  // M^-nu (or MM^{g'-}nu in a decomposition)
  std::vector<double> weight;   // maximal^epsilon, 1 on uncovered cells
  std::vector<std::uint8_t> covered;
  A1Report a1;                  // A^+_1(gamma) constant of weight
  std::vector<double> phi;      // decomposition only: omega / weight
  double sup_log_phi = 0.0;
};

/// weight = (M^-nu)^eps with the lag-free backward cylinder operator, over
/// fam.ladder or, when that is empty, every integer scale 1..nt. Throws
/// DegenerateMeasure when M^-nu vanishes on every covered cell.
CRConstruction coifman_rochberg(const SpaceTimeGrid& grid, const AdjacentSystem& adj,
                                std::span<const double> nu, double epsilon, double gamma,
                                const ScaleFamily& fam);

/// nu = omega^{1+kappa}, eps = 1/(1+kappa), phi = omega / (MM^{g'-}nu)^eps.
/// omega may vanish where MM^{g'-}nu does too; phi is 1 there.
CRConstruction a1_decompose(const SpaceTimeGrid& grid, const AdjacentSystem& adj,
                            std::span<const double> omega, double gamma_prime, double kappa,
                            const ScaleFamily& fam);

}  // namespace parweight
