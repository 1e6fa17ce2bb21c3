#pragma once

// Data-parallel kernels with the serial implementations kept alongside them.
// Both paths produce identical results; tests and the benchmark compare them.

#include "atl/core.hpp"
#include "atl/neighbours.hpp"
#include "atl/tree_search.hpp"

#include <span>
#include <vector>

namespace atl::kernels {

enum class Exec { Serial, Parallel };

std::vector<NeighbourOrder> neighbour_orders(const Dataset& ref, const Dataset& queries, Exec exec);

/// scores[c][g]: objective of candidate c (its values at the source points) at sigmas[g].
std::vector<std::vector<int>> score_candidates(const CalibrationContext& ctx,
                                               const std::vector<std::vector<double>>& source_values,
                                               std::span<const double> sigmas, Exec exec);

std::vector<Label> predict(const Classifier& classifier, const Dataset& points, Exec exec);

}  // namespace atl::kernels
