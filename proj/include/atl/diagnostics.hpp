#pragma once

#include "atl/core.hpp"
#include "atl/distributions.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace atl {

// Lower density ---------------------------------------------------------------

/// mu(B_r(x)) for the open Euclidean ball, in closed form. Supported: UniformCube with
/// d <= 2, LatticeMixture with d_Q <= 2, GammaFamily, GaussianScale.
double ball_mass(const MarginalSpec& m, std::span<const double> x, double r);

/// Geometric radius grid on [r_min, 1): r_k = r_min^{1 - k/(points-1)} scaled so the last
/// point sits just below 1. Grids with (points-1) dividing (points'-1) nest exactly.
std::vector<double> radius_grid(std::size_t points, double r_min = 1e-6);

struct DensityProfile {
  std::vector<double> radii;
  std::vector<double> ratios;  // mu(B_r(x)) / r^d0
  double infimum;              // min over the grid; an upper bound on the true infimum
};

DensityProfile lower_density_profile(const MarginalSpec& m, std::span<const double> x, double d0,
                                     std::size_t points = 512, double r_min = 1e-6);

/// inf over the radius grid of mu(B_r(x)) / r^d0.
double lower_density(const MarginalSpec& m, std::span<const double> x, double d0,
                     std::size_t points = 512, double r_min = 1e-6);

// Assumption checkers -----------------------------------------------------------
// Monte Carlo estimates compared with the assumed bound; a grid point passes when the
// estimate minus three standard errors does not exceed the bound.

struct BoundCheck {
  double level;     // xi or zeta
  double estimate;  // Monte Carlo mass
  double standard_error;
  double bound;
  bool pass;
};

struct TailReport {
  std::vector<BoundCheck> target;  // mu_Q(omega_{mu_Q,d_Q} < xi) vs C_PQ xi^gamma_Q
  std::vector<BoundCheck> source;  // mu_Q(omega_{mu_P,d_P} < xi) vs C_PQ xi^gamma_P
  std::size_t mc_n;
  bool pass;
};

struct TailOptions {
  double d_p = 1.0, d_q = 1.0;
  double gamma_p = 1.0, gamma_q = 1.0;  // +infinity allowed
  double c_pq = 2.0;
  std::vector<double> xi_grid{0.05, 0.1, 0.2, 0.4};
  std::size_t mc_n = 10000;
  std::uint64_t seed = 0;
  std::size_t radius_points = 512;
};

TailReport check_tail_assumption(const MarginalSpec& marginal_p, const MarginalSpec& marginal_q,
                                 const TailOptions& opt);

struct MarginReport {
  std::vector<BoundCheck> checks;  // mu_Q(|eta_Q - 1/2| < zeta) vs C_M zeta^alpha
  std::size_t mc_n;
  bool pass;
};

MarginReport check_margin_assumption(const PairSpec& spec, double alpha, double c_m,
                                     const std::vector<double>& zeta_grid, std::size_t mc_n,
                                     std::uint64_t seed);

struct SmoothnessReport {
  double max_ratio;  // max |eta(x) - eta(x')| / |x - x'|^beta over sampled pairs
  double beta;
  double c_s;
  std::size_t pairs;
  bool pass;
};

SmoothnessReport check_smoothness(const PairSpec& spec, Which which, double beta, double c_s,
                                  std::size_t n_pairs, std::uint64_t seed);

struct TransferReport {
  double min_slope;  // min over the grid of (g(z) - c) / (z - 1/2)
  double phi;
  bool pass;
};

/// Slope of a transfer map around 1/2 on an equispaced grid of [0,1] (z = 1/2 excluded).
/// The centre value c defaults to g(1/2). Slopes within 1e-12 of phi pass.
TransferReport check_transfer(const TransferMapSpec& g, double phi, std::size_t grid_points = 1001,
                              std::optional<double> centre = std::nullopt);

// Risk ------------------------------------------------------------------------

struct MonteCarloRisk {
  std::size_t n = 100000;
  std::uint64_t seed = 0;
};
struct QuadratureRisk {
  std::size_t resolution = 4096;  // midpoints per axis
};
using RiskMode = std::variant<MonteCarloRisk, QuadratureRisk>;

struct RiskReport {
  double test_error;
  double excess_error;
  double standard_error;  // zero for quadrature
  std::size_t evaluations;
  std::string mode;
};

/// Test error P(f(X) != Y) and excess error under the target distribution.
/// Quadrature needs a UniformCube target marginal with d <= 2.
RiskReport risk(const Classifier& f, const PairSpec& spec, const RiskMode& mode);

// Rates -----------------------------------------------------------------------

/// log x for x >= e, else 1.
double log_plus(double x);

/// beta gamma (1+alpha) / (gamma (2 beta + dim) + alpha beta); gamma = +inf gives the limit.
double rate_exponent(double beta, double gamma, double alpha, double dim);

struct ATerms {
  double source;     // (a0 / (phi^2 n_P))^{e_P}; +inf when phi^2 n_P = 0
  double partition;  // min{(L* a1 / n_Q)^{(1+alpha)/(2+alpha)}, (1-phi)^{1+alpha}}
  double mismatch;   // (Delta/phi)^{1+alpha}
  double total() const { return source + partition + mismatch; }
};

struct RateBounds {
  ATerms a_lower, a_upper;
  double A_lower, B_lower, A_upper, B_upper;
  double lower;  // min(A^L, B^L, 1)
  double upper;  // min(A^U, B^U, 1)
  // Present when a confidence level is supplied.
  std::optional<ATerms> a_delta;
  std::optional<double> A_delta, B_delta, D_delta, delta_bound;  // bound = min(A,B) + D
};

RateBounds rate_bounds(const ParameterVector& theta, std::size_t n_p, std::size_t n_q,
                       std::optional<double> delta = std::nullopt);

}  // namespace atl
