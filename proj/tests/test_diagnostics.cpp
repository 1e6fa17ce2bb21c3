#include "doctest.h"

#include "atl/diagnostics.hpp"
#include "atl/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace atl;

namespace {

const double kPi = std::numbers::pi;
const double kInf = std::numeric_limits<double>::infinity();

double normal_pdf(double x, double s) { return std::exp(-0.5 * x * x / (s * s)) / (s * std::sqrt(2.0 * kPi)); }

// Monte Carlo estimate of a ball mass, an oracle for the closed forms.
double mc_ball_mass(const MarginalSpec& m, std::span<const double> x, double r, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> y(x.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    draw_point(m, rng, y);
    double s = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) s += (y[j] - x[j]) * (y[j] - x[j]);
    hits += s < r * r;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

ParameterVector theta_2d() {
  ParameterVector t;
  t.d = 2;
  t.d_q = t.d_p = 2;
  t.gamma_q = t.gamma_p = 1.0;
  t.alpha = t.beta = 1.0;
  t.delta = 0.0;
  t.phi = 1.0;
  t.l_star = 1;
  return t;
}

}  // namespace

TEST_CASE("radius grid") {
  const auto g = radius_grid(512);
  CHECK(g.size() == 512);
  CHECK(g.front() == doctest::Approx(1e-6));
  CHECK(g.back() < 1.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  // Nesting: with (G-1) dividing (G'-1) every coarse point is a fine point.
  const auto coarse = radius_grid(12);
  const auto fine = radius_grid(111);
  for (std::size_t k = 0; k < coarse.size(); ++k) CHECK(coarse[k] == fine[10 * k]);
  CHECK_THROWS_AS(radius_grid(1), ValidationError);
}

TEST_CASE("ball masses agree with Monte Carlo") {
  const std::size_t n = 200000;
  auto close = [n](double exact, double est) {
    const double se = std::sqrt(std::max(exact * (1.0 - exact), 1e-12) / static_cast<double>(n));
    return std::abs(exact - est) <= 4.0 * se + 1e-12;
  };
  const std::vector<std::pair<MarginalSpec, std::vector<double>>> cases{
      {UniformCube{1}, {0.2}},
      {UniformCube{2}, {0.1, 0.9}},
      {UniformCube{2}, {0.5, 0.5}},
      {UniformCube{2}, {1.2, -0.1}},
      {GammaFamily{0.5}, {0.3}},
      {GammaFamily{1.0}, {1.0}},
      {GammaFamily{2.0}, {0.1}},
      {GaussianScale{1.5}, {-0.7}},
      {LatticeMixture{3, 0.5, 0.3, 1, 1, 1, 1}, {0.0}},
      {LatticeMixture{2, 1.0, 0.4, 2, 2, 2, 2}, {-0.4, -0.5}},
      {LatticeMixture{2, 1.0, 0.4, 2, 1, 2, 3}, {0.1, 0.0, 0.0}},
  };
  std::uint64_t seed = 1;
  for (const auto& [m, x] : cases)
    for (double r : {0.05, 0.2, 0.5, 0.9}) CHECK(close(ball_mass(m, x, r), mc_ball_mass(m, x, r, n, seed++)));
}

TEST_CASE("lattice mixture total mass") {
  const LatticeMixture m{3, 0.5, 0.4, 1, 1, 1, 1};
  CHECK(ball_mass(m, std::vector<double>{0.0}, 100.0) == doctest::Approx(1.0));
  const LatticeMixture m2{2, 1.0, 0.25, 2, 1, 2, 2};
  CHECK(ball_mass(m2, std::vector<double>{0.0, 0.0}, 100.0) == doctest::Approx(1.0));
  // Atoms alone: the cube is at distance >= r kappa_Q from the origin.
  const LatticeGeometry g(3, 0.5, 1, 1, 1);
  CHECK(ball_mass(m, std::vector<double>{0.0}, 1e-3) == doctest::Approx(0.4 / 3.0));
  CHECK(ball_mass(m, std::vector<double>{0.0}, g.spacing * 1.5) == doctest::Approx(0.8 / 3.0));
  CHECK(ball_mass(m, std::vector<double>{0.0}, g.spacing) == doctest::Approx(0.4 / 3.0));  // open ball
  CHECK_THROWS_AS(ball_mass(UniformCube{3}, std::vector<double>{0, 0, 0}, 0.1), ValidationError);
}

TEST_CASE("lower density examples") {
  CHECK(lower_density(UniformCube{1}, std::vector<double>{0.0}, 1.0) == doctest::Approx(1.0));
  for (double s : {0.5, 1.0, 2.0})
    for (double x : {s + 1.0, s + 1.7, -(s + 2.5)})
      CHECK(std::abs(lower_density(GaussianScale{s}, std::vector<double>{x}, 1.0) - 2.0 * normal_pdf(x, s)) < 1e-6);
  // The uniform square: the corner is the worst point, the ratio is at least pi/4 there.
  CHECK(lower_density(UniformCube{2}, std::vector<double>{0.0, 0.0}, 2.0) >= 0.125);
}

TEST_CASE("grid refinement never raises the lower density estimate") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<MarginalSpec> ms{UniformCube{2}, GammaFamily{0.5}, GaussianScale{1.0},
                                     LatticeMixture{3, 0.5, 0.3, 2, 2, 2, 2}};
  for (const auto& m : ms)
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> x(marginal_dim(m));
      draw_point(m, rng, x);
      const double d0 = static_cast<double>(x.size());
      const double a = lower_density(m, x, d0, 17);
      const double b = lower_density(m, x, d0, 33);
      const double c = lower_density(m, x, d0, 513);
      CHECK(b <= a);
      CHECK(c <= b);
    }
}

TEST_CASE("lattice lower-density bounds hold at every grid radius") {
  for (std::size_t dq : {1, 2}) {
    const std::size_t q = 3, dp = 2, d = 2;
    const double r = 0.7;
    const LatticeGeometry g(q, r, dq, dp, d);
    for (std::size_t d0 : {dq, dp}) {
      for (double w : {0.0, 0.2, 0.5}) {
        const LatticeMixture m{q, r, w, d0, dq, dp, d};
        const double dd0 = static_cast<double>(d0);
        std::mt19937_64 rng(9);
        for (int i = 0; i < 30; ++i) {
          std::vector<double> x(d, 0.0);
          for (std::size_t j = 0; j < dq; ++j) x[j] = g.cube_lo() + (g.cube_hi() - g.cube_lo()) * uniform01(rng);
          for (double v : lower_density_profile(m, x, dd0).ratios) CHECK(v >= 1.0 - w - 1e-9);
        }
        const double n_atoms = static_cast<double>(g.atoms(d0));
        const double bound = std::pow(2.0, -3.0 * dd0) *
                             std::min(1.0, w * std::pow(static_cast<double>(q), dd0) / (n_atoms * std::pow(r, dd0)));
        for (std::size_t t = 0; t < g.base_atoms; ++t)
          for (double v : lower_density_profile(m, g.atom(t, dq), dd0).ratios) CHECK(v >= bound - 1e-12);
      }
    }
  }
}

TEST_CASE("tail assumption checks") {
  for (double gamma : {0.5, 1.0, 2.0}) {
    TailOptions opt;
    opt.gamma_p = opt.gamma_q = gamma;
    opt.c_pq = std::max(2.0 / std::pow(gamma, gamma), std::pow(2.0, gamma));
    opt.mc_n = 4000;
    opt.seed = 17;
    const auto rep = check_tail_assumption(GammaFamily{gamma}, GammaFamily{gamma}, opt);
    CHECK(rep.pass);
    CHECK(rep.target.size() == 4);
  }
  TailOptions cube;
  cube.d_p = cube.d_q = 2.0;
  cube.xi_grid = {0.1};
  cube.mc_n = 2000;
  const auto rep = check_tail_assumption(UniformCube{2}, UniformCube{2}, cube);
  CHECK(rep.target[0].estimate == 0.0);
  CHECK(rep.source[0].estimate == 0.0);

  TailOptions lat;
  lat.xi_grid = {0.25, 0.5, 1.0};
  lat.mc_n = 1000;
  const auto pure = check_tail_assumption(LatticeMixture{2, 0.5, 0.0, 1, 1, 1, 1},
                                          LatticeMixture{2, 0.5, 0.0, 1, 1, 1, 1}, lat);
  for (const auto& c : pure.target) CHECK(c.estimate == 0.0);

  // A deliberately false claim is rejected.
  TailOptions strict;
  strict.gamma_p = strict.gamma_q = 1.0;
  strict.c_pq = 1.0001;
  strict.xi_grid = {0.4};
  strict.mc_n = 4000;
  CHECK_FALSE(check_tail_assumption(GammaFamily{0.25}, GammaFamily{0.25}, strict).pass);
}

TEST_CASE("margin assumption checks") {
  // Mass (2/pi) asin(2 zeta) <= 2 zeta, so C_M = 2 holds for alpha = 1 and C_M = 1 does not.
  const auto rep = check_margin_assumption(setting1(), 1.0, 2.0, {0.25}, 20000, 5);
  const double exact = 2.0 / kPi * std::asin(0.5);
  CHECK(exact == doctest::Approx(1.0 / 3.0));
  CHECK(std::abs(rep.checks[0].estimate - exact) <= 3.0 * rep.checks[0].standard_error);
  CHECK(rep.pass);
  CHECK_FALSE(check_margin_assumption(setting1(), 1.0, 1.0, {0.25}, 20000, 5).pass);

  const PairSpec one{"one", UniformCube{2}, UniformCube{2}, ConstantEta{1.0}, TreePartition(2), {IdentityMap{}}};
  for (const auto& c : check_margin_assumption(one, 1.0, 1.0, {0.1, 0.3, 0.5}, 1000, 1).checks)
    CHECK(c.estimate == 0.0);

  AssouadParams p;
  p.q = 2;
  p.r = 0.5;
  p.eps_q = 0.05;
  p.w_q = p.w_p = 0.3;
  const PairSpec lat = AssouadFamily(p).member(1);
  for (const auto& c : check_margin_assumption(lat, 1.0, 1.0, {0.01, 0.04, 0.049}, 2000, 2).checks)
    CHECK(c.estimate == 0.0);
}

TEST_CASE("smoothness checks") {
  const PairSpec one{"c", UniformCube{2}, UniformCube{2}, ConstantEta{0.3}, TreePartition(2), {IdentityMap{}}};
  CHECK(check_smoothness(one, Which::Q, 1.0, 1.0, 500, 1).max_ratio == 0.0);
  const auto s = check_smoothness(setting1(), Which::Q, 1.0, 2.0 * kPi, 5000, 2);
  CHECK(s.pass);
  CHECK(s.max_ratio > 1.0);
  CHECK_FALSE(check_smoothness(setting1(), Which::Q, 1.0, 1.0, 5000, 2).pass);

  AssouadParams p;
  p.q = 3;
  p.r = 0.9;
  p.dq = 1;
  p.dp = 2;
  p.d = 2;
  p.w_p = p.w_q = 0.4;
  const LatticeGeometry g(p.q, p.r, p.dq, p.dp, p.d);
  p.eps_q = g.spacing / 6.0;
  const PairSpec lat = AssouadFamily(p).member(3);
  CHECK(check_smoothness(lat, Which::Q, 1.0, 1.0, 3000, 3).pass);
}

TEST_CASE("transfer slope checks") {
  CHECK(check_transfer(setting1().transfers[0], 0.8).pass);
  CHECK(check_transfer(setting1().transfers[0], 0.8).min_slope == doctest::Approx(0.8));
  for (const auto& g : setting2().transfers) CHECK(check_transfer(g, 0.5).pass);
  CHECK_FALSE(check_transfer(ShiftUp{}, 0.6).pass);
  // The slope is taken about h(1/2), which lies above 1/2 for eps > 0.
  for (double e : {0.02, 0.1, 0.125}) {
    const auto rep = check_transfer(LowerBoundH{e}, 1.0 - 4.0 * e);
    CHECK(rep.pass);
    CHECK(rep.min_slope == doctest::Approx((1.0 - 2.0 * e) / (1.0 + 2.0 * e)));
    CHECK_FALSE(check_transfer(LowerBoundH{e}, 0.0, 1001, 0.5).pass);
  }
  CHECK(check_transfer(PlateauH{0.8, 0.0}, 0.8).pass);
}

TEST_CASE("quadrature and Monte Carlo risk") {
  const PairSpec s1 = setting1();
  const auto bayes = risk(bayes_classifier(s1), s1, QuadratureRisk{});
  CHECK(std::abs(bayes.test_error - (0.5 - 1.0 / kPi)) < 1e-4);
  CHECK(std::abs(bayes.excess_error) < 1e-6);
  const auto one = risk(Classifier::constant(1), s1, QuadratureRisk{});
  CHECK(std::abs(one.excess_error - 1.0 / kPi) < 1e-4);
  CHECK(one.excess_error == doctest::Approx(one.test_error - bayes.test_error).epsilon(1e-9));
  CHECK(bayes.test_error <= one.test_error + 1e-6);

  const auto mc = risk(bayes_classifier(s1), s1, MonteCarloRisk{100000, 3});
  CHECK(std::abs(mc.test_error - (0.5 - 1.0 / kPi)) <= 3.0 * mc.standard_error);
  CHECK(mc.standard_error > 0.0);

  const PairSpec gauss{"g", GaussianScale{1.0}, GaussianScale{1.0}, ConstantEta{0.5}, TreePartition(1), {IdentityMap{}}};
  CHECK_THROWS_AS(risk(Classifier::constant(1), gauss, QuadratureRisk{}), ValidationError);
}

TEST_CASE("Bayes risk is minimal among fitted-type handles") {
  const PairSpec s2 = setting2();
  const Dataset ref = sample(s2, Which::Q, 60, 8);
  auto shared = std::make_shared<const Dataset>(ref);
  const double b = risk(bayes_classifier(s2), s2, QuadratureRisk{256}).test_error;
  for (double sigma : {0.1, 1.0, 10.0}) {
    CHECK(b <= risk(Classifier::target_knn(sigma, shared), s2, QuadratureRisk{256}).test_error + 1e-6);
    CHECK(b <= risk(Classifier::source_calibrated(sigma, TreeFunction::constant_half(2), shared), s2,
                    QuadratureRisk{256}).test_error + 1e-6);
  }
}

TEST_CASE("log_plus and exponents") {
  CHECK(log_plus(1.0) == 1.0);
  CHECK(log_plus(2.0) == 1.0);
  CHECK(log_plus(std::numbers::e) == doctest::Approx(1.0));
  CHECK(log_plus(100.0) == doctest::Approx(std::log(100.0)));
  CHECK(rate_exponent(1.0, 1.0, 1.0, 2.0) == doctest::Approx(2.0 / 5.0));
  CHECK(rate_exponent(1.0, kInf, 1.0, 2.0) == doctest::Approx(0.5));
  CHECK(rate_exponent(1.0, 1e12, 1.0, 2.0) == doctest::Approx(0.5));
}

TEST_CASE("rate bounds: spot values and degenerate terms") {
  ParameterVector t = theta_2d();
  const auto r = rate_bounds(t, 10000, 100);
  CHECK(r.a_lower.mismatch == 0.0);   // Delta = 0
  CHECK(r.a_lower.partition == 0.0);  // phi = 1
  CHECK(r.a_lower.source == doctest::Approx(std::pow(1e-4, 0.4)));
  CHECK(r.B_lower == doctest::Approx(std::pow(1e-2, 0.4)));
  CHECK(r.A_lower < r.B_lower);
  CHECK(r.lower == doctest::Approx(r.A_lower));
  CHECK(r.a_upper.source == doctest::Approx(std::pow(std::log(1e4) / 1e4, 0.4)));
  CHECK(r.B_upper == doctest::Approx(std::pow(std::log(100.0) / 100.0, 0.4)));

  t.phi = 0.5;
  t.delta = 0.2;
  const auto r2 = rate_bounds(t, 1000, 50);
  CHECK(r2.a_lower.mismatch == doctest::Approx(0.16));
  CHECK(r2.a_lower.partition == doctest::Approx(std::min(std::pow(1.0 / 50.0, 2.0 / 3.0), 0.25)));
  CHECK(r2.a_lower.source == doctest::Approx(std::pow(1.0 / (0.25 * 1000.0), 0.4)));

  const auto none = rate_bounds(theta_2d(), 0, 100);
  CHECK(std::isinf(none.a_lower.source));
  CHECK(none.lower == doctest::Approx(none.B_lower));

  const auto hp = rate_bounds(theta_2d(), 10000, 100, 0.05);
  REQUIRE(hp.delta_bound.has_value());
  CHECK(*hp.D_delta == doctest::Approx(std::pow(std::log(10100.0 / 0.05) / 100.0, 2.0 / 3.0)));
  CHECK(*hp.B_delta == doctest::Approx(std::pow(std::log(100.0 / 0.05) / 100.0, 0.4)));
  CHECK(hp.a_delta->source == doctest::Approx(std::pow(std::log(10000.0 / 0.05) / 1e4, 0.4)));
  CHECK(*hp.delta_bound == doctest::Approx(std::min(*hp.A_delta, *hp.B_delta) + *hp.D_delta));
  CHECK_THROWS_AS(rate_bounds(theta_2d(), 10, 10, 1.5), ValidationError);
}

TEST_CASE("rate bounds are monotone") {
  ParameterVector t = theta_2d();
  t.phi = 0.7;
  t.delta = 0.1;
  double prev_a = kInf, prev_au = kInf, prev_b = kInf;
  for (std::size_t n = 1; n <= 100000; n *= 3) {
    const auto r = rate_bounds(t, n, 100);
    CHECK(r.A_lower <= prev_a);
    CHECK(r.A_upper <= prev_au);
    prev_a = r.A_lower;
    prev_au = r.A_upper;
    const auto s = rate_bounds(t, 100, n);
    CHECK(s.B_lower <= prev_b);
    prev_b = s.B_lower;
  }
  double prev = kInf;
  for (double phi = 0.1; phi <= 1.0; phi += 0.1) {
    t.phi = phi;
    const double a = rate_bounds(t, 1000, 100).a_lower.source;
    CHECK(a <= prev);
    prev = a;
  }
}
