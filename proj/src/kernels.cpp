#include "atl/kernels.hpp"

#include "atl/parallel.hpp"

#include <cstddef>

namespace atl::kernels {

std::vector<NeighbourOrder> neighbour_orders(const Dataset& ref, const Dataset& queries, Exec exec) {
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
  std::vector<NeighbourOrder> out(queries.size());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = neighbour_order(ref, queries.point(i));
    return out;
  }
#pragma omp parallel for schedule(dynamic, 8) num_threads(worker_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = neighbour_order(ref, queries.point(i));
  return out;
}

std::vector<std::vector<int>> score_candidates(const CalibrationContext& ctx,
                                               const std::vector<std::vector<double>>& source_values,
                                               std::span<const double> sigmas, Exec exec) {
  const auto n = static_cast<std::ptrdiff_t>(source_values.size());
  std::vector<std::vector<int>> out(source_values.size());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t c = 0; c < n; ++c) out[c] = ctx.objective(source_values[c], sigmas);
    return out;
  }
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_threads())
  for (std::ptrdiff_t c = 0; c < n; ++c) out[c] = ctx.objective(source_values[c], sigmas);
  return out;
}

std::vector<Label> predict(const Classifier& classifier, const Dataset& points, Exec exec) {
  const auto n = static_cast<std::ptrdiff_t>(points.size());
  std::vector<Label> out(points.size());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = classifier.classify(points.point(i));
    return out;
  }
#pragma omp parallel for schedule(dynamic, 16) num_threads(worker_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = classifier.classify(points.point(i));
  return out;
}

}  // namespace atl::kernels
