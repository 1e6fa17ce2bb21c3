#pragma once

#include "atl/core.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace atl {

/// Reference indices sorted by increasing Euclidean distance to `query`.
/// Equal distances keep the original index order.
struct NeighbourOrder {
  std::vector<double> query;
  std::vector<std::size_t> perm;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

NeighbourOrder neighbour_order(const Dataset& ref, std::span<const double> x);

/// Ascending list of robustness parameters sigma > 0.
class RobustnessGrid {
public:
  explicit RobustnessGrid(std::vector<double> values);

  /// Up to `points` geometrically spaced values spanning [1/n, n], snapped to {k/n}.
  static RobustnessGrid geometric(std::size_t n, std::size_t points);
  /// The full grid {1/n, 2/n, ..., n}.
  static RobustnessGrid exact(std::size_t n);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

private:
  std::vector<double> values_;
};

// Residual-sequence kernels. `residuals[i]` is Y - h(X) for the (i+1)-th nearest
// neighbour. These define the arithmetic every other path must reproduce exactly.

/// Partial sums S_1..S_k accumulated left to right; returns S_k / k.
double prefix_mean(std::span<const double> residuals, std::size_t k);

/// Adaptive neighbour count: the largest k <= n-1 with |S_r| <= sigma * sqrt(r) for
/// every r <= k, plus one. An empty admissible set gives 1.
std::size_t lepski_k(std::span<const double> residuals, double sigma);

/// For every sigma in ascending `sigmas`, the label 1{S_k/k >= 0} at k = lepski_k(sigma).
/// Single pass over the residuals.
void lepski_labels(std::span<const double> residuals, std::span<const double> sigmas,
                   std::span<Label> labels_out);

// Operations on a reference dataset ----------------------------------------------

std::vector<double> source_residuals(const Dataset& ref, const NeighbourOrder& order,
                                     const TreeFunction& h);
std::vector<double> target_residuals(const Dataset& ref, const NeighbourOrder& order);

double source_margin(const Dataset& ref, const NeighbourOrder& order, const TreeFunction& h,
                     std::size_t k);
double target_margin(const Dataset& ref, const NeighbourOrder& order, std::size_t k);

/// k-hat in [1, |ref|].
std::size_t lepski_k_source(const Dataset& ref, const NeighbourOrder& order,
                            const TreeFunction& h, double sigma);
/// k-tilde in [1, |ref|]; `ref` is the first half of the target sample.
std::size_t lepski_k_target(const Dataset& ref, const NeighbourOrder& order, double sigma);

}  // namespace atl
