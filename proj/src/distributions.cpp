#include "atl/distributions.hpp"

#include "atl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

namespace atl {

namespace {

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && out > std::numeric_limits<std::size_t>::max() / base)
      throw ValidationError("lattice too large");
    out *= base;
  }
  return out;
}

void check_lattice_dims(std::size_t q, double r, std::size_t dq, std::size_t dp, std::size_t d) {
  if (q < 1) throw ValidationError("lattice needs q >= 1");
  if (!(r > 0.0) || !std::isfinite(r)) throw ValidationError("lattice needs r > 0");
  if (!(dq >= 1 && dq <= dp && dp <= d)) throw ValidationError("lattice needs 1 <= d_Q <= d_P <= d");
}

}  // namespace

std::size_t marginal_dim(const MarginalSpec& m) {
  return std::visit(
      [](const auto& v) -> std::size_t {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformCube>) return v.d;
        else if constexpr (std::is_same_v<T, LatticeMixture>) return v.d;
        else return 1;
      },
      m);
}

void validate_marginal(const MarginalSpec& m) {
  if (auto* c = std::get_if<UniformCube>(&m)) {
    if (c->d < 1) throw ValidationError("UniformCube needs d >= 1");
  } else if (auto* l = std::get_if<LatticeMixture>(&m)) {
    check_lattice_dims(l->q, l->r, l->dq, l->dp, l->d);
    if (!(l->w >= 0.0 && l->w <= 0.5)) throw ValidationError("LatticeMixture needs w in [0, 1/2]");
    if (l->d0 != l->dq && l->d0 != l->dp) throw ValidationError("LatticeMixture needs d0 in {d_Q, d_P}");
  } else if (auto* g = std::get_if<GammaFamily>(&m)) {
    if (!(g->gamma > 0.0) || !std::isfinite(g->gamma)) throw ValidationError("GammaFamily needs gamma > 0");
  } else if (auto* s = std::get_if<GaussianScale>(&m)) {
    if (!(s->sigma > 0.0) || !std::isfinite(s->sigma)) throw ValidationError("GaussianScale needs sigma > 0");
  }
}

LatticeGeometry::LatticeGeometry(std::size_t q_, double r_, std::size_t dq_, std::size_t dp_, std::size_t d_)
    : q(q_), dq(dq_), dp(dp_), d(d_), r(r_) {
  check_lattice_dims(q, r, dq, dp, d);
  kappa_p = 1.0 / (2.0 * std::sqrt(static_cast<double>(dp)));
  kappa_q = 1.0 / (2.0 * std::sqrt(static_cast<double>(dq)));
  spacing = (r / static_cast<double>(q)) * kappa_p;
  // Levels k with k * spacing < 1, evaluated exactly as atom coordinates are.
  extra_levels = 0;
  while (extra_levels < q && spacing * static_cast<double>(extra_levels) < 1.0) ++extra_levels;
  base_atoms = ipow(q, dq);
}

std::size_t LatticeGeometry::atoms(std::size_t d0) const {
  return base_atoms * ipow(extra_levels, d0 - dq);
}

std::vector<double> LatticeGeometry::atom(std::size_t j, std::size_t d0) const {
  std::vector<double> x(d, 0.0);
  std::size_t low = j % base_atoms;
  std::size_t high = j / base_atoms;
  for (std::size_t i = dq; i-- > 0;) {
    x[i] = spacing * static_cast<double>(low % q);
    low /= q;
  }
  for (std::size_t i = d0; i-- > dq;) {
    x[i] = spacing * static_cast<double>(high % extra_levels);
    high /= extra_levels;
  }
  return x;
}

bool LatticeGeometry::in_cube(std::span<const double> x) const {
  if (x.size() != d) return false;
  for (std::size_t i = 0; i < dq; ++i)
    if (!(x[i] >= cube_lo() && x[i] <= cube_hi())) return false;
  for (std::size_t i = dq; i < d; ++i)
    if (x[i] != 0.0) return false;
  return true;
}

std::optional<std::size_t> LatticeGeometry::atom_index(std::span<const double> x, std::size_t d0) const {
  if (x.size() != d) return std::nullopt;
  std::size_t low = 0, high = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (i >= d0) {
      if (x[i] != 0.0) return std::nullopt;
      continue;
    }
    const double k = std::round(x[i] / spacing);
    const std::size_t levels = i < dq ? q : extra_levels;
    if (!(k >= 0.0 && k < static_cast<double>(levels))) return std::nullopt;
    if (std::abs(x[i] - spacing * k) > 1e-12) return std::nullopt;
    const auto c = static_cast<std::size_t>(k);
    if (i < dq) low = low * q + c;
    else high = high * extra_levels + c;
  }
  return low + base_atoms * high;
}

double eta_value(const RegressionSpec& eta, std::span<const double> x) {
  return std::visit(
      [&](const auto& e) -> double {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Sinusoid>) {
          return 0.5 * (1.0 + std::sin(4.0 * std::numbers::pi * x[0]));
        } else if constexpr (std::is_same_v<T, ConstantEta>) {
          return e.value;
        } else {
          const LatticeGeometry g(e.q, e.r, e.dq, e.dp, e.d);
          if (x.size() != e.d) throw ValidationError("point dimension does not match the lattice");
          if (g.in_cube(x)) {
            double s = 0.0;
            for (std::size_t i = 0; i < e.dq; ++i) {
              const double diff = x[i] + e.r * g.kappa_q;
              s += diff * diff;
            }
            for (std::size_t i = e.dq; i < e.d; ++i) s += x[i] * x[i];
            return 0.5 - 2.0 * e.eps - 0.25 * std::pow(std::sqrt(s), e.beta);
          }
          if (auto t = g.atom_index(x, e.dp)) {
            if (*t < g.base_atoms) return 0.5 + static_cast<double>(e.signs[*t]) * e.eps;
            return 0.5 - 2.0 * e.eps;
          }
          throw OffSupportError("lattice regression function queried off its support");
        }
      },
      eta);
}

double transfer_value(const TransferMapSpec& g, double z) {
  if (!(z >= 0.0 && z <= 1.0)) throw ValidationError("transfer maps are defined on [0,1]");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IdentityMap>) {
          return z;
        } else if constexpr (std::is_same_v<T, AffineMap>) {
          return m.a + m.b * z;
        } else if constexpr (std::is_same_v<T, ShiftDown>) {
          return std::max(0.0, z - 0.25);
        } else if constexpr (std::is_same_v<T, ShiftUp>) {
          return std::min(z + 0.25, 1.0);
        } else if constexpr (std::is_same_v<T, LowerBoundH>) {
          const double e = m.eps;
          if (z <= 0.5 - 2.0 * e) return z;
          if (z <= 0.5 - e) return 3.0 * z + 4.0 * e - 1.0;
          return ((1.0 - 2.0 * e) * z + 4.0 * e) / (1.0 + 2.0 * e);
        } else {
          if (m.delta > m.phi / 2.0) return 0.5;
          const double w = m.delta / m.phi;
          if (z <= 0.5 - w) return m.phi * (z - 0.5) + 0.5 + m.delta;
          if (z <= 0.5 + w) return 0.5;
          return m.phi * (z - 0.5) + 0.5 - m.delta;
        }
      },
      g);
}

void validate_transfer(const TransferMapSpec& g) {
  if (auto* a = std::get_if<AffineMap>(&g)) {
    const double lo = std::min(a->a, a->a + a->b), hi = std::max(a->a, a->a + a->b);
    if (!(lo >= 0.0 && hi <= 1.0)) throw ValidationError("affine transfer must map [0,1] into [0,1]");
  } else if (auto* h = std::get_if<LowerBoundH>(&g)) {
    if (!(h->eps >= 0.0 && h->eps <= 0.125)) throw ValidationError("LowerBoundH needs eps in [0, 1/8]");
  } else if (auto* p = std::get_if<PlateauH>(&g)) {
    if (!(p->phi > 0.0 && p->phi <= 1.0)) throw ValidationError("PlateauH needs phi in (0,1]");
    if (!(p->delta >= 0.0)) throw ValidationError("PlateauH needs delta >= 0");
  }
}

namespace {

void validate_regression(const RegressionSpec& eta, std::size_t d) {
  if (auto* c = std::get_if<ConstantEta>(&eta)) {
    if (!(c->value >= 0.0 && c->value <= 1.0)) throw ValidationError("constant eta must lie in [0,1]");
  } else if (auto* l = std::get_if<LatticeEta>(&eta)) {
    check_lattice_dims(l->q, l->r, l->dq, l->dp, l->d);
    if (l->d != d) throw ValidationError("lattice eta dimension does not match the marginals");
    if (!(l->eps >= 0.0 && l->eps <= 0.125)) throw ValidationError("lattice eta needs eps in [0, 1/8]");
    if (!(l->beta > 0.0 && l->beta <= 1.0)) throw ValidationError("lattice eta needs beta in (0,1]");
    if (l->signs.size() != ipow(l->q, l->dq)) throw ValidationError("lattice eta needs q^d_Q signs");
    for (int s : l->signs)
      if (s != 1 && s != -1) throw ValidationError("lattice signs must be -1 or +1");
  }
}

}  // namespace

void PairSpec::validate() const {
  validate_marginal(marginal_p);
  validate_marginal(marginal_q);
  const std::size_t d = marginal_dim(marginal_q);
  if (marginal_dim(marginal_p) != d) throw ValidationError("source and target marginals differ in dimension");
  validate_regression(eta_q, d);
  if (partition.dim() != d) throw ValidationError("partition dimension does not match the marginals");
  if (transfers.size() != partition.leaves())
    throw ValidationError("need one transfer map per partition cell");
  for (const auto& g : transfers) validate_transfer(g);
}

double eta(const PairSpec& spec, Which which, std::span<const double> x) {
  if (x.size() != spec.dim()) throw ValidationError("point dimension does not match the specification");
  const double q = eta_value(spec.eta_q, x);
  if (which == Which::Q) return q;
  return transfer_value(spec.transfers[spec.partition.leaf_of(x)], q);
}

Label bayes_label(const PairSpec& spec, std::span<const double> x) {
  return eta(spec, Which::Q, x) >= 0.5 ? 1 : 0;
}

Classifier bayes_classifier(const PairSpec& spec) {
  auto shared = std::make_shared<const PairSpec>(spec);
  return Classifier::oracle("bayes:" + spec.name,
                            [shared](std::span<const double> x) { return bayes_label(*shared, x); });
}

namespace {

double gamma_inverse_survival(double gamma, double u) {
  if (gamma == 1.0) return -std::log(u);
  if (gamma < 1.0) return (std::pow(u, -(1.0 - gamma) / gamma) - 1.0) / (1.0 - gamma);
  return (1.0 - std::pow(u, (gamma - 1.0) / gamma)) / (gamma - 1.0);
}

}  // namespace

void draw_point(const MarginalSpec& m, std::mt19937_64& rng, std::span<double> out) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformCube>) {
          for (std::size_t i = 0; i < v.d; ++i) out[i] = uniform01(rng);
        } else if constexpr (std::is_same_v<T, LatticeMixture>) {
          const LatticeGeometry g(v.q, v.r, v.dq, v.dp, v.d);
          if (uniform01(rng) < v.w) {
            const std::size_t n = g.atoms(v.d0);
            const auto j = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
            const auto x = g.atom(j, v.d0);
            std::copy(x.begin(), x.end(), out.begin());
          } else {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t i = 0; i < v.dq; ++i)
              out[i] = g.cube_lo() + (g.cube_hi() - g.cube_lo()) * uniform01(rng);
          }
        } else if constexpr (std::is_same_v<T, GammaFamily>) {
          out[0] = gamma_inverse_survival(v.gamma, 1.0 - uniform01(rng));
        } else {
          out[0] = std::normal_distribution<double>(0.0, v.sigma)(rng);
        }
      },
      m);
}

Dataset sample(const PairSpec& spec, Which which, std::size_t n, std::uint64_t seed) {
  spec.validate();
  const std::size_t d = spec.dim();
  const MarginalSpec& m = which == Which::P ? spec.marginal_p : spec.marginal_q;
  std::mt19937_64 rng(seed);
  std::vector<double> features(n * d);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> x(features.data() + i * d, d);
    draw_point(m, rng, x);
    labels[i] = uniform01(rng) < eta(spec, which, x) ? 1 : 0;
  }
  return Dataset(which == Which::P ? Origin::SourceP : Origin::TargetQ, d, std::move(features),
                 std::move(labels));
}

PairSpec setting1() {
  return PairSpec{"setting1", UniformCube{2}, UniformCube{2}, Sinusoid{}, TreePartition(2),
                  {AffineMap{0.2, 0.8}}};
}

PairSpec setting2() {
  // Cell 0 keeps {x_2 >= 1/2}; cell 1 is {x_2 < 1/2}.
  return PairSpec{"setting2", UniformCube{2}, UniformCube{2}, Sinusoid{},
                  TreePartition(2, {SplitStep{0, 1, 0.5}}), {ShiftUp{}, ShiftDown{}}};
}

PairSpec setting_by_index(int setting) {
  if (setting == 1) return setting1();
  if (setting == 2) return setting2();
  throw ValidationError("setting must be 1 or 2");
}

AssouadFamily::AssouadFamily(AssouadParams params) : p_(std::move(params)) {
  check_lattice_dims(p_.q, p_.r, p_.dq, p_.dp, p_.d);
  if (!(p_.w_p >= 0.0 && p_.w_p <= 0.5) || !(p_.w_q >= 0.0 && p_.w_q <= 0.5))
    throw ValidationError("atom masses must lie in [0, 1/2]");
  if (!(p_.eps_q >= 0.0 && p_.eps_q <= 0.125)) throw ValidationError("eps_Q must lie in [0, 1/8]");
  if (!(p_.beta > 0.0 && p_.beta <= 1.0)) throw ValidationError("beta must lie in (0,1]");
  if (auto* pl = std::get_if<PlateauLink>(&p_.link)) validate_transfer(PlateauH{pl->phi, pl->delta});
  m_ = ipow(p_.q, p_.dq);

  const double up = 0.5 + p_.eps_q, down = 0.5 - p_.eps_q;
  double a, b;
  if (std::holds_alternative<ThresholdFlip>(p_.link)) {
    a = up;
    b = transfer_value(LowerBoundH{p_.eps_q}, down);
  } else {
    const auto& pl = std::get<PlateauLink>(p_.link);
    a = transfer_value(PlateauH{pl.phi, pl.delta}, up);
    b = transfer_value(PlateauH{pl.phi, pl.delta}, down);
  }
  eps_p_ = std::abs(a - b) / 2.0;
  if (p_.eps_p && std::abs(*p_.eps_p - eps_p_) > 1e-12)
    throw ValidationError("eps_P is inconsistent with the link: implied value " + std::to_string(eps_p_));
}

bool AssouadFamily::holder_admissible() const {
  const LatticeGeometry g(p_.q, p_.r, p_.dq, p_.dp, p_.d);
  return p_.eps_q <= std::pow(g.spacing, p_.beta) / 6.0;
}

PairSpec AssouadFamily::member(std::size_t index) const {
  if (m_ >= 63 || index >= size()) throw ValidationError("hypercube vertex index out of range");
  std::vector<int> signs(m_);
  for (std::size_t t = 0; t < m_; ++t) signs[t] = (index >> t) & 1U ? 1 : -1;
  return member(signs);
}

PairSpec AssouadFamily::member(const std::vector<int>& signs) const {
  const LatticeGeometry g(p_.q, p_.r, p_.dq, p_.dp, p_.d);
  PairSpec spec{"assouad",
                LatticeMixture{p_.q, p_.r, p_.w_p, p_.dp, p_.dq, p_.dp, p_.d},
                LatticeMixture{p_.q, p_.r, p_.w_q, p_.dq, p_.dq, p_.dp, p_.d},
                LatticeEta{p_.eps_q, p_.q, p_.r, p_.beta, p_.dq, p_.dp, p_.d, signs},
                TreePartition(p_.d),
                {}};
  if (auto* pl = std::get_if<PlateauLink>(&p_.link)) {
    spec.transfers = {PlateauH{pl->phi, pl->delta}};
  } else {
    // Split every existing cell between consecutive lattice levels, one axis at a time.
    TreePartition part(p_.d);
    for (std::size_t axis = 0; axis < p_.dq; ++axis) {
      const std::size_t cells = part.leaves();
      for (std::size_t leaf = 0; leaf < cells; ++leaf)
        for (std::size_t k = 1; k < p_.q; ++k)
          part = part.refined({leaf, axis, (static_cast<double>(k) - 0.5) * g.spacing});
    }
    spec.partition = part;
    spec.transfers.assign(part.leaves(), IdentityMap{});
    for (std::size_t t = 0; t < m_; ++t)
      if (signs.at(t) == -1) spec.transfers[part.leaf_of(g.atom(t, p_.dq))] = LowerBoundH{p_.eps_q};
  }
  spec.validate();
  return spec;
}

}  // namespace atl
