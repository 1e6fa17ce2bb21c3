#pragma once

#include "atl/core.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace atl {

// Marginals ------------------------------------------------------------------

struct UniformCube {
  std::size_t d = 2;
};

/// Mixture of a uniform hyper-rectangle (mass 1-w) and a uniform law on the admissible
/// atoms of a scaled integer lattice (mass w).
struct LatticeMixture {
  std::size_t q = 1;
  double r = 1.0;
  double w = 0.0;
  std::size_t d0 = 1;  // lattice dimension, equal to dq or dp
  std::size_t dq = 1;
  std::size_t dp = 1;
  std::size_t d = 1;
};

/// Univariate law with survival function (1+(1-g)x)^{-g/(1-g)} (g<1), e^{-x} (g=1),
/// (1-(g-1)x)^{g/(g-1)} on [0, 1/(g-1)] (g>1).
struct GammaFamily {
  double gamma = 1.0;
};

/// Univariate N(0, sigma^2).
struct GaussianScale {
  double sigma = 1.0;
};

using MarginalSpec = std::variant<UniformCube, LatticeMixture, GammaFamily, GaussianScale>;

std::size_t marginal_dim(const MarginalSpec& m);
void validate_marginal(const MarginalSpec& m);

/// Geometry shared by the lattice marginal and the lattice regression function.
struct LatticeGeometry {
  std::size_t q, dq, dp, d;
  double r;
  double kappa_p, kappa_q;
  double spacing;            // (r/q) * kappa_p
  std::size_t extra_levels;  // admissible levels per coordinate beyond dq
  std::size_t base_atoms;    // q^dq

  LatticeGeometry(std::size_t q, double r, std::size_t dq, std::size_t dp, std::size_t d);

  /// Number of admissible atoms for lattice dimension d0.
  std::size_t atoms(std::size_t d0) const;
  /// Coordinates of admissible atom j; j < base_atoms enumerates {0..q-1}^dq row-major.
  std::vector<double> atom(std::size_t j, std::size_t d0) const;
  double cube_lo() const { return -kappa_q * (1.0 + r); }
  double cube_hi() const { return -r * kappa_q; }
  /// True when x lies in the cube component (coordinates past dq are zero).
  bool in_cube(std::span<const double> x) const;
  /// Atom index of x among the d0-lattice, if x is one of its admissible atoms.
  std::optional<std::size_t> atom_index(std::span<const double> x, std::size_t d0) const;
};

// Regression functions --------------------------------------------------------

/// (1 + sin(4 pi x_1)) / 2.
struct Sinusoid {};

/// Lower-bound regression function; defined on the support of the lattice marginals only.
struct LatticeEta {
  double eps = 0.1;
  std::size_t q = 1;
  double r = 1.0;
  double beta = 1.0;
  std::size_t dq = 1;
  std::size_t dp = 1;
  std::size_t d = 1;
  std::vector<int> signs;  // q^dq entries in {-1, +1}
};

struct ConstantEta {
  double value = 0.5;
};

using RegressionSpec = std::variant<Sinusoid, LatticeEta, ConstantEta>;

/// Thrown for eta queries off the support of a lattice construction.
class OffSupportError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

double eta_value(const RegressionSpec& eta, std::span<const double> x);

// Transfer maps -----------------------------------------------------------------

struct IdentityMap {};
struct AffineMap {
  double a = 0.0;
  double b = 1.0;
};
struct ShiftDown {};  // max(0, z - 1/4)
struct ShiftUp {};    // min(z + 1/4, 1)
struct LowerBoundH {
  double eps = 0.1;
};
struct PlateauH {
  double phi = 1.0;
  double delta = 0.0;
};

using TransferMapSpec = std::variant<IdentityMap, AffineMap, ShiftDown, ShiftUp, LowerBoundH, PlateauH>;

double transfer_value(const TransferMapSpec& g, double z);
void validate_transfer(const TransferMapSpec& g);

// Pairs -----------------------------------------------------------------------

enum class Which { P, Q };

struct PairSpec {
  std::string name;
  MarginalSpec marginal_p;
  MarginalSpec marginal_q;
  RegressionSpec eta_q;
  TreePartition partition;
  std::vector<TransferMapSpec> transfers;  // one per cell

  std::size_t dim() const { return marginal_dim(marginal_q); }
  void validate() const;
};

/// eta_Q(x), or eta_P(x) = g_{leaf(x)}(eta_Q(x)).
double eta(const PairSpec& spec, Which which, std::span<const double> x);

/// 1{eta_Q(x) >= 1/2}.
Label bayes_label(const PairSpec& spec, std::span<const double> x);
Classifier bayes_classifier(const PairSpec& spec);

/// n labelled draws. The same seed always yields the same dataset, and the first m rows
/// of a draw of size n equal a draw of size m.
Dataset sample(const PairSpec& spec, Which which, std::size_t n, std::uint64_t seed);

/// Point draws from a marginal (feature vectors only), consuming `rng`.
void draw_point(const MarginalSpec& m, std::mt19937_64& rng, std::span<double> out);

/// Uniform marginals on [0,1]^2 with the sinusoidal target regression function.
/// Setting 1: one cell, transfer (1+4z)/5.
/// Setting 2: split at x_2 = 1/2; min(z+1/4,1) above, max(0,z-1/4) below.
PairSpec setting1();
PairSpec setting2();
PairSpec setting_by_index(int setting);

// Hypercube family for the lower-bound construction -----------------------------

/// ThresholdFlip: cells isolate the base lattice points and the source link is
/// LowerBoundH(eps_Q) at sites with sign -1, the identity elsewhere.
/// Plateau: every cell uses PlateauH(phi, delta).
struct ThresholdFlip {};
struct PlateauLink {
  double phi = 1.0;
  double delta = 0.0;
};
using LinkMode = std::variant<ThresholdFlip, PlateauLink>;

struct AssouadParams {
  std::size_t q = 1;
  double r = 1.0;
  double w_p = 0.0;
  double w_q = 0.0;
  double eps_q = 0.1;
  std::optional<double> eps_p;  // checked against the value implied by the link
  std::size_t dq = 1;
  std::size_t dp = 1;
  std::size_t d = 1;
  double beta = 1.0;
  LinkMode link = ThresholdFlip{};
};

class AssouadFamily {
public:
  explicit AssouadFamily(AssouadParams params);

  const AssouadParams& params() const { return p_; }
  std::size_t sites() const { return m_; }
  /// 2^sites.
  std::size_t size() const { return std::size_t{1} << m_; }
  /// Half the gap in eta_P at a site between the two signs.
  double eps_p() const { return eps_p_; }
  /// eps_Q <= (1/6) (r kappa_P / q)^beta, the Hoelder admissibility condition.
  bool holder_admissible() const;
  /// Member whose sign vector has bit t of `index` set for sigma_t = +1.
  PairSpec member(std::size_t index) const;
  PairSpec member(const std::vector<int>& signs) const;

private:
  AssouadParams p_;
  std::size_t m_;
  double eps_p_;
};

}  // namespace atl
