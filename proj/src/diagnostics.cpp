#include "atl/diagnostics.hpp"

#include "atl/kernels.hpp"
#include "atl/parallel.hpp"
#include "atl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace atl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Length of [c - rho, c + rho] inside [a, b].
double interval_overlap(double c, double rho, double a, double b) {
  return std::max(0.0, std::min(c + rho, b) - std::max(c - rho, a));
}

// Area of {u^2 + v^2 < rho^2, u <= X, v <= Y}.
double disc_quadrant(double rho, double X, double Y) {
  if (X <= -rho || Y <= -rho) return 0.0;
  const double rho2 = rho * rho;
  auto G = [&](double u) {  // integral of sqrt(rho^2 - t^2) from 0 to u
    const double h = std::sqrt(std::max(0.0, rho2 - u * u));
    return 0.5 * (u * h + rho2 * std::asin(std::clamp(u / rho, -1.0, 1.0)));
  };
  const double xc = std::min(X, rho);
  auto seg = [&](double lo, double hi, auto&& f) {
    hi = std::min(hi, xc);
    return hi > lo ? f(lo, hi) : 0.0;
  };
  auto chord = [&](double lo, double hi) { return G(hi) - G(lo); };
  if (Y >= rho) return 2.0 * (G(xc) - G(-rho));
  const double u0 = std::sqrt(std::max(0.0, rho2 - Y * Y));
  auto middle = [&](double lo, double hi) { return Y * (hi - lo) + chord(lo, hi); };
  if (Y >= 0.0)
    return 2.0 * seg(-rho, -u0, chord) + seg(-u0, u0, middle) + 2.0 * seg(u0, rho, chord);
  return seg(-u0, u0, middle);
}

// Area of the disc (centre c, radius rho) inside [a1,b1] x [a2,b2].
double disc_rectangle(double c1, double c2, double rho, double a1, double b1, double a2, double b2) {
  if (rho <= 0.0) return 0.0;
  const double v = disc_quadrant(rho, b1 - c1, b2 - c2) - disc_quadrant(rho, a1 - c1, b2 - c2) -
                   disc_quadrant(rho, b1 - c1, a2 - c2) + disc_quadrant(rho, a1 - c1, a2 - c2);
  return std::max(0.0, v);
}

double gamma_cdf(double gamma, double t) {
  if (t <= 0.0) return 0.0;
  if (gamma == 1.0) return -std::expm1(-t);
  if (gamma < 1.0) return 1.0 - std::pow(1.0 + (1.0 - gamma) * t, -gamma / (1.0 - gamma));
  if (t >= 1.0 / (gamma - 1.0)) return 1.0;
  return 1.0 - std::pow(1.0 - (gamma - 1.0) * t, gamma / (gamma - 1.0));
}

// Ball masses at a fixed centre over many radii; the lattice case sorts atom distances once.
class BallMass {
public:
  BallMass(const MarginalSpec& m, std::span<const double> x) : m_(m), x_(x.begin(), x.end()) {
    validate_marginal(m);
    if (x.size() != marginal_dim(m)) throw ValidationError("point dimension does not match the marginal");
    if (auto* c = std::get_if<UniformCube>(&m); c && c->d > 2)
      throw ValidationError("closed-form ball mass is available for UniformCube with d <= 2 only");
    if (auto* l = std::get_if<LatticeMixture>(&m)) {
      if (l->dq > 2) throw ValidationError("closed-form ball mass is available for d_Q <= 2 only");
      const LatticeGeometry g(l->q, l->r, l->dq, l->dp, l->d);
      const std::size_t n = g.atoms(l->d0);
      atom_d2_.reserve(n);
      for (std::size_t j = 0; j < n; ++j) {
        const auto a = g.atom(j, l->d0);
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - x_[i]) * (a[i] - x_[i]);
        atom_d2_.push_back(s);
      }
      std::sort(atom_d2_.begin(), atom_d2_.end());
      atom_mass_ = l->w / static_cast<double>(n);
    }
  }

  double operator()(double r) const {
    return std::visit(
        [&](const auto& v) -> double {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, UniformCube>) {
            if (v.d == 1) return interval_overlap(x_[0], r, 0.0, 1.0);
            return disc_rectangle(x_[0], x_[1], r, 0.0, 1.0, 0.0, 1.0);
          } else if constexpr (std::is_same_v<T, LatticeMixture>) {
            const LatticeGeometry g(v.q, v.r, v.dq, v.dp, v.d);
            double rest = 0.0;
            for (std::size_t i = v.dq; i < v.d; ++i) rest += x_[i] * x_[i];
            double cube = 0.0;
            const double rho2 = r * r - rest;
            if (rho2 > 0.0) {
              const double rho = std::sqrt(rho2);
              const double lo = g.cube_lo(), hi = g.cube_hi();
              const double vol = v.dq == 1 ? interval_overlap(x_[0], rho, lo, hi)
                                           : disc_rectangle(x_[0], x_[1], rho, lo, hi, lo, hi);
              cube = (1.0 - v.w) * vol / std::pow(g.kappa_q, static_cast<double>(v.dq));
            }
            const auto inside = std::lower_bound(atom_d2_.begin(), atom_d2_.end(), r * r) - atom_d2_.begin();
            return cube + atom_mass_ * static_cast<double>(inside);
          } else if constexpr (std::is_same_v<T, GammaFamily>) {
            return gamma_cdf(v.gamma, x_[0] + r) - gamma_cdf(v.gamma, x_[0] - r);
          } else {
            // Tail-side difference of survival functions keeps precision far from 0.
            const double s = v.sigma * std::numbers::sqrt2;
            const double a = std::abs(x_[0]);
            return 0.5 * (std::erfc((a - r) / s) - std::erfc((a + r) / s));
          }
        },
        m_);
  }

private:
  const MarginalSpec& m_;
  std::vector<double> x_;
  std::vector<double> atom_d2_;
  double atom_mass_ = 0.0;
};

double binomial_se(double p, std::size_t n) {
  return n == 0 ? 0.0 : std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

BoundCheck make_check(double level, std::size_t hits, std::size_t n, double bound) {
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  const double se = binomial_se(p, n);
  return {level, p, se, bound, p - 3.0 * se <= bound};
}

std::vector<std::vector<double>> draw_points(const MarginalSpec& m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t d = marginal_dim(m);
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  for (auto& p : pts) draw_point(m, rng, p);
  return pts;
}

}  // namespace

double ball_mass(const MarginalSpec& m, std::span<const double> x, double r) {
  if (!(r >= 0.0)) throw ValidationError("ball radius must be non-negative");
  return BallMass(m, x)(r);
}

std::vector<double> radius_grid(std::size_t points, double r_min) {
  if (points < 2) throw ValidationError("radius grid needs at least two points");
  if (!(r_min > 0.0 && r_min < 1.0)) throw ValidationError("r_min must lie in (0,1)");
  const double lo = std::log(r_min);
  const double hi = std::log(std::nextafter(1.0, 0.0));
  std::vector<double> r(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(points - 1);
    r[k] = std::exp(lo * (1.0 - t) + hi * t);
  }
  return r;
}

DensityProfile lower_density_profile(const MarginalSpec& m, std::span<const double> x, double d0,
                                     std::size_t points, double r_min) {
  if (!(d0 > 0.0)) throw ValidationError("d0 must be positive");
  const BallMass mass(m, x);
  DensityProfile out{radius_grid(points, r_min), {}, kInf};
  out.ratios.reserve(points);
  for (double r : out.radii) {
    const double v = mass(r) / std::pow(r, d0);
    out.ratios.push_back(v);
    out.infimum = std::min(out.infimum, v);
  }
  return out;
}

double lower_density(const MarginalSpec& m, std::span<const double> x, double d0, std::size_t points,
                     double r_min) {
  return lower_density_profile(m, x, d0, points, r_min).infimum;
}

TailReport check_tail_assumption(const MarginalSpec& marginal_p, const MarginalSpec& marginal_q,
                                 const TailOptions& opt) {
  validate_marginal(marginal_p);
  validate_marginal(marginal_q);
  if (marginal_dim(marginal_p) != marginal_dim(marginal_q))
    throw ValidationError("marginals differ in dimension");
  if (opt.mc_n == 0) throw ValidationError("Monte Carlo size must be positive");
  if (!(opt.c_pq > 0.0)) throw ValidationError("C_PQ must be positive");
  if (!(opt.gamma_p > 0.0) || !(opt.gamma_q > 0.0)) throw ValidationError("tail exponents must be positive");

  const auto pts = draw_points(marginal_q, opt.mc_n, opt.seed);
  std::vector<double> omega_q(pts.size()), omega_p(pts.size());
  const auto n = static_cast<std::ptrdiff_t>(pts.size());
#pragma omp parallel for schedule(dynamic, 64) num_threads(worker_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    omega_q[i] = lower_density(marginal_q, pts[i], opt.d_q, opt.radius_points);
    omega_p[i] = lower_density(marginal_p, pts[i], opt.d_p, opt.radius_points);
  }
  TailReport rep{{}, {}, opt.mc_n, true};
  for (double xi : opt.xi_grid) {
    if (!(xi > 0.0)) throw ValidationError("xi values must be positive");
    const auto hq = static_cast<std::size_t>(std::count_if(omega_q.begin(), omega_q.end(), [&](double w) { return w < xi; }));
    const auto hp = static_cast<std::size_t>(std::count_if(omega_p.begin(), omega_p.end(), [&](double w) { return w < xi; }));
    rep.target.push_back(make_check(xi, hq, opt.mc_n, opt.c_pq * std::pow(xi, opt.gamma_q)));
    rep.source.push_back(make_check(xi, hp, opt.mc_n, opt.c_pq * std::pow(xi, opt.gamma_p)));
    rep.pass = rep.pass && rep.target.back().pass && rep.source.back().pass;
  }
  return rep;
}

MarginReport check_margin_assumption(const PairSpec& spec, double alpha, double c_m,
                                     const std::vector<double>& zeta_grid, std::size_t mc_n,
                                     std::uint64_t seed) {
  spec.validate();
  if (mc_n == 0) throw ValidationError("Monte Carlo size must be positive");
  if (!(alpha > 0.0) || !(c_m > 0.0)) throw ValidationError("alpha and C_M must be positive");
  const auto pts = draw_points(spec.marginal_q, mc_n, seed);
  std::vector<double> gap(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) gap[i] = std::abs(eta(spec, Which::Q, pts[i]) - 0.5);
  MarginReport rep{{}, mc_n, true};
  for (double z : zeta_grid) {
    if (!(z > 0.0)) throw ValidationError("zeta values must be positive");
    const auto hits = static_cast<std::size_t>(std::count_if(gap.begin(), gap.end(), [&](double g) { return g < z; }));
    rep.checks.push_back(make_check(z, hits, mc_n, c_m * std::pow(z, alpha)));
    rep.pass = rep.pass && rep.checks.back().pass;
  }
  return rep;
}

SmoothnessReport check_smoothness(const PairSpec& spec, Which which, double beta, double c_s,
                                  std::size_t n_pairs, std::uint64_t seed) {
  spec.validate();
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("beta must lie in (0,1]");
  const MarginalSpec& m = which == Which::P ? spec.marginal_p : spec.marginal_q;
  const auto pts = draw_points(m, 2 * n_pairs, seed);
  double worst = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const auto& a = pts[2 * i];
    const auto& b = pts[2 * i + 1];
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    if (s == 0.0) continue;
    ++used;
    const double ratio = std::abs(eta(spec, which, a) - eta(spec, which, b)) / std::pow(std::sqrt(s), beta);
    worst = std::max(worst, ratio);
  }
  return {worst, beta, c_s, used, worst <= c_s};
}

TransferReport check_transfer(const TransferMapSpec& g, double phi, std::size_t grid_points,
                              std::optional<double> centre) {
  validate_transfer(g);
  if (grid_points < 2) throw ValidationError("transfer grid needs at least two points");
  const double c = centre ? *centre : transfer_value(g, 0.5);
  double worst = kInf;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double z = static_cast<double>(i) / static_cast<double>(grid_points - 1);
    if (z == 0.5) continue;
    worst = std::min(worst, (transfer_value(g, z) - c) / (z - 0.5));
  }
  return {worst, phi, worst >= phi - 1e-12};
}

RiskReport risk(const Classifier& f, const PairSpec& spec, const RiskMode& mode) {
  spec.validate();
  const std::size_t d = spec.dim();
  if (auto* mc = std::get_if<MonteCarloRisk>(&mode)) {
    if (mc->n == 0) throw ValidationError("Monte Carlo size must be positive");
    const Dataset test = sample(spec, Which::Q, mc->n, mc->seed);
    const auto pred = kernels::predict(f, test, kernels::Exec::Parallel);
    std::size_t wrong = 0;
    double excess = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      wrong += pred[i] != test.label(i) ? 1 : 0;
      const double e = eta(spec, Which::Q, test.point(i));
      if (pred[i] != (e >= 0.5 ? 1 : 0)) excess += std::abs(2.0 * e - 1.0);
    }
    const double p = static_cast<double>(wrong) / static_cast<double>(mc->n);
    return {p, excess / static_cast<double>(mc->n), binomial_se(p, mc->n), mc->n, "mc"};
  }

  const auto& quad = std::get<QuadratureRisk>(mode);
  const auto* cube = std::get_if<UniformCube>(&spec.marginal_q);
  if (!cube || cube->d > 2) throw ValidationError("quadrature risk needs a UniformCube target marginal with d <= 2");
  if (quad.resolution == 0) throw ValidationError("quadrature resolution must be positive");
  const std::size_t m = quad.resolution;
  const double h = 1.0 / static_cast<double>(m);
  const std::size_t rows = d == 1 ? 1 : m;
  double err = 0.0, excess = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    Dataset row(Origin::TargetQ, d);
    std::vector<double> x(d);
    for (std::size_t j = 0; j < m; ++j) {
      x[0] = (static_cast<double>(j) + 0.5) * h;
      if (d == 2) x[1] = (static_cast<double>(i) + 0.5) * h;
      row.push_back(x, 0);
    }
    const auto pred = kernels::predict(f, row, kernels::Exec::Parallel);
    double row_err = 0.0, row_excess = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double e = eta(spec, Which::Q, row.point(j));
      row_err += pred[j] == 1 ? 1.0 - e : e;
      if (pred[j] != (e >= 0.5 ? 1 : 0)) row_excess += std::abs(2.0 * e - 1.0);
    }
    err += row_err;
    excess += row_excess;
  }
  const double cells = static_cast<double>(rows) * static_cast<double>(m);
  return {err / cells, excess / cells, 0.0, rows * m, "quadrature"};
}

double log_plus(double x) { return x >= std::numbers::e ? std::log(x) : 1.0; }

double rate_exponent(double beta, double gamma, double alpha, double dim) {
  if (std::isinf(gamma)) return beta * (1.0 + alpha) / (2.0 * beta + dim);
  return beta * gamma * (1.0 + alpha) / (gamma * (2.0 * beta + dim) + alpha * beta);
}

namespace {

ATerms a_terms(const ParameterVector& t, std::size_t n_p, std::size_t n_q, double a0, double a1) {
  ATerms out{};
  const double denom = t.phi * t.phi * static_cast<double>(n_p);
  out.source = denom == 0.0 ? kInf : std::pow(a0 / denom, rate_exponent(t.beta, t.gamma_p, t.alpha, t.d_p));
  const double clamp = std::pow(1.0 - t.phi, 1.0 + t.alpha);
  const double part = n_q == 0 ? kInf
                               : std::pow(static_cast<double>(t.l_star) * a1 / static_cast<double>(n_q),
                                          (1.0 + t.alpha) / (2.0 + t.alpha));
  out.partition = std::min(part, clamp);
  out.mismatch = std::pow(t.delta / t.phi, 1.0 + t.alpha);
  return out;
}

double b_term(const ParameterVector& t, std::size_t n_q, double b) {
  if (n_q == 0) return kInf;
  return std::pow(b / static_cast<double>(n_q), rate_exponent(t.beta, t.gamma_q, t.alpha, t.d_q));
}

}  // namespace

RateBounds rate_bounds(const ParameterVector& theta, std::size_t n_p, std::size_t n_q,
                       std::optional<double> delta) {
  theta.validate();
  const double np = static_cast<double>(n_p), nq = static_cast<double>(n_q);
  const double ld = static_cast<double>(theta.l_star) * static_cast<double>(theta.d);
  RateBounds out{};
  out.a_lower = a_terms(theta, n_p, n_q, 1.0, 1.0);
  out.a_upper = a_terms(theta, n_p, n_q, log_plus(np), log_plus(ld * (np + nq)));
  out.A_lower = out.a_lower.total();
  out.A_upper = out.a_upper.total();
  out.B_lower = b_term(theta, n_q, 1.0);
  out.B_upper = b_term(theta, n_q, log_plus(nq));
  out.lower = std::min({out.A_lower, out.B_lower, 1.0});
  out.upper = std::min({out.A_upper, out.B_upper, 1.0});
  if (delta) {
    const double dl = *delta;
    if (!(dl > 0.0 && dl < 1.0)) throw ValidationError("delta must lie in (0,1)");
    out.a_delta = a_terms(theta, n_p, n_q, log_plus(np / dl), log_plus(ld * np / dl));
    out.A_delta = out.a_delta->total();
    out.B_delta = b_term(theta, n_q, log_plus(nq / dl));
    out.D_delta = n_q == 0 ? kInf
                           : std::pow(log_plus((np + nq) / dl) / nq, (1.0 + theta.alpha) / (2.0 + theta.alpha));
    out.delta_bound = std::min(*out.A_delta, *out.B_delta) + *out.D_delta;
  }
  return out;
}

}  // namespace atl
