#pragma once

#include "atl/core.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace atl {

// Candidate generation modes.
struct ExhaustiveRestricted {};
struct MonteCarloSplits {
  std::size_t num_splits = 100;
};
struct GreedyGrowth {
  std::size_t max_leaves = 2;
  std::size_t thresholds_per_axis = 0;  // 0: every source coordinate
};
using TreeSearchMode = std::variant<ExhaustiveRestricted, MonteCarloSplits, GreedyGrowth>;

// Calibration-value search modes.
struct TauGridSearch {
  std::size_t grid_size = 0;  // values per leaf; 0 or >= n+1 means the full grid
};
struct TauLeafMeanLocal {
  double radius = 0.1;
  std::size_t grid_size = 5;
};
using TauMode = std::variant<TauGridSearch, TauLeafMeanLocal>;

struct TreeSearchStrategy {
  TreeSearchMode mode = MonteCarloSplits{};
  TauMode tau = TauLeafMeanLocal{};

  void validate() const;
};

/// Source sample plus the neighbour orders (within the source sample) of every
/// calibration point. Evaluates the tree-selection objective
///   sum_i Y_i 1{m_i < 0} + (1 - Y_i) 1{m_i >= 0}
/// for all robustness values of a grid at once.
class CalibrationContext {
public:
  CalibrationContext(const Dataset& source, const Dataset& calib);

  const Dataset& source() const { return *source_; }
  const Dataset& calib() const { return *calib_; }

  /// `source_values[j]` = h(X_j) for every source point; `sigmas` ascending.
  /// Returns the empirical error count for each sigma.
  std::vector<int> objective(std::span<const double> source_values,
                             std::span<const double> sigmas) const;

  std::vector<double> tree_values(const TreeFunction& h) const;

private:
  const Dataset* source_;
  const Dataset* calib_;
  std::vector<std::uint32_t> perm_;  // calib.size() rows of source.size() indices
  std::vector<double> permuted_labels_;
};

struct TreeChoice {
  TreeFunction tree;
  int errors;
};

/// Every restriction to `points` achievable by a tree with `leaves` leaves and
/// calibration values on {0, 1/grid_n, ..., 1}, one representative per restriction.
/// Split thresholds range over the gaps of the sorted coordinates of `points`.
std::vector<TreeFunction> enumerate_restricted_trees(const Dataset& points, std::size_t leaves,
                                                     std::size_t grid_n);

/// Number of distinct restrictions of a tree list to `points`.
std::size_t count_distinct_restrictions(const std::vector<TreeFunction>& trees, const Dataset& points);

/// {L d (n+1)}^{2L}.
double restriction_count_bound(std::size_t leaves, std::size_t dim, std::size_t n);

/// `count` random refinement sequences with `leaves` leaves: each split picks an existing
/// leaf and an axis uniformly, and a threshold at the coordinate of a uniformly chosen point.
std::vector<TreePartition> random_partitions(const Dataset& points, std::size_t leaves,
                                             std::size_t count, std::mt19937_64& rng);

/// For each sigma, the best calibration values on every partition (by `tau`), then the best
/// partition; ties go to the lowest partition index. Partitions equal on the source sample
/// are scored once.
std::vector<TreeChoice> search_partitions(const CalibrationContext& ctx,
                                          const std::vector<TreePartition>& partitions,
                                          std::span<const double> sigmas, const TauMode& tau);

/// Per-sigma minimiser over an explicit candidate list, ties to the lowest index.
std::vector<TreeChoice> best_trees(const CalibrationContext& ctx,
                                   const std::vector<TreeFunction>& candidates,
                                   std::span<const double> sigmas);

/// CART-like growth: starting from one leaf, repeatedly apply the split (leaf, axis,
/// threshold at a source coordinate) whose refined tree minimises the objective.
/// Element t of the result has t+1 leaves; the objective never increases along it.
std::vector<TreeChoice> grow_greedy(const CalibrationContext& ctx, double sigma,
                                    const GreedyGrowth& greedy, const TauMode& tau,
                                    std::mt19937_64& rng);

struct Selection {
  std::size_t index;
  int errors;
  std::vector<int> all_errors;
};

/// Minimiser of the tree-selection objective on `calib` at one sigma; ties to lowest index.
Selection erm_select_tree(const std::vector<TreeFunction>& candidates, double sigma,
                          const Dataset& source, const Dataset& calib);

/// Minimiser of the misclassification count on `holdout`; ties to lowest index.
Selection erm_select_classifier(const std::vector<Classifier>& family, const Dataset& holdout);

/// Same selection from precomputed predictions: predictions[c][i] is the label of
/// candidate c on holdout row i.
Selection erm_select_predictions(const std::vector<std::vector<Label>>& predictions,
                                 const std::vector<Label>& truth);

}  // namespace atl
