#include "atl/neighbours.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace atl {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

NeighbourOrder neighbour_order(const Dataset& ref, std::span<const double> x) {
  if (ref.empty()) throw ValidationError("neighbour query against an empty reference set");
  if (x.size() != ref.dim()) throw ValidationError("query dimension does not match reference data");
  const std::size_t n = ref.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = squared_distance(ref.point(i), x);
  NeighbourOrder out{std::vector<double>(x.begin(), x.end()), std::vector<std::size_t>(n)};
  std::iota(out.perm.begin(), out.perm.end(), std::size_t{0});
  std::sort(out.perm.begin(), out.perm.end(), [&](std::size_t a, std::size_t b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  });
  return out;
}

RobustnessGrid::RobustnessGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("robustness grid must be nonempty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] > 0.0) || !std::isfinite(values_[i]))
      throw ValidationError("robustness values must be positive and finite");
    if (i > 0 && !(values_[i] > values_[i - 1]))
      throw ValidationError("robustness grid must be strictly ascending");
  }
}

RobustnessGrid RobustnessGrid::geometric(std::size_t n, std::size_t points) {
  if (n == 0) throw ValidationError("geometric grid needs n >= 1");
  if (points == 0) throw ValidationError("geometric grid needs at least one point");
  const double nn = static_cast<double>(n);
  if (points == 1 || n == 1) return RobustnessGrid({1.0});
  std::vector<double> values;
  const double lo = std::log(1.0 / nn);
  const double hi = std::log(nn);
  long long last = 0;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    const double sigma = std::exp(lo + t * (hi - lo));
    // Snap to the lattice {k/n}, k in [1, n^2].
    long long k = std::llround(sigma * nn);
    k = std::clamp<long long>(k, 1, static_cast<long long>(n * n));
    if (k > last) {
      values.push_back(static_cast<double>(k) / nn);
      last = k;
    }
  }
  return RobustnessGrid(std::move(values));
}

RobustnessGrid RobustnessGrid::exact(std::size_t n) {
  if (n == 0) throw ValidationError("exact grid needs n >= 1");
  std::vector<double> values(n * n);
  for (std::size_t k = 1; k <= n * n; ++k) values[k - 1] = static_cast<double>(k) / static_cast<double>(n);
  return RobustnessGrid(std::move(values));
}

double prefix_mean(std::span<const double> residuals, std::size_t k) {
  if (k < 1 || k > residuals.size()) throw ValidationError("neighbour count k out of range");
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += residuals[i];
  return s / static_cast<double>(k);
}

std::size_t lepski_k(std::span<const double> residuals, double sigma) {
  const std::size_t n = residuals.size();
  if (n == 0) throw ValidationError("Lepski rule needs at least one neighbour");
  double s = 0.0;
  for (std::size_t r = 1; r < n; ++r) {
    s += residuals[r - 1];
    if (!(std::abs(s) <= sigma * std::sqrt(static_cast<double>(r)))) return r;
  }
  return n;
}

void lepski_labels(std::span<const double> residuals, std::span<const double> sigmas,
                   std::span<Label> labels_out) {
  const std::size_t n = residuals.size();
  if (n == 0) throw ValidationError("Lepski rule needs at least one neighbour");
  const std::size_t g = sigmas.size();
  std::size_t next = 0;  // sigmas[0, next) have been resolved
  double s = 0.0;
  for (std::size_t r = 1; r < n && next < g; ++r) {
    s += residuals[r - 1];
    const double a = std::abs(s);
    const double root = std::sqrt(static_cast<double>(r));
    const Label lab = s / static_cast<double>(r) >= 0.0 ? 1 : 0;
    while (next < g && !(a <= sigmas[next] * root)) labels_out[next++] = lab;
  }
  if (next < g) {
    // Unresolved sigmas use k = n. The scan may have stopped early only when all were resolved.
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += residuals[i];
    const Label lab = total / static_cast<double>(n) >= 0.0 ? 1 : 0;
    for (; next < g; ++next) labels_out[next] = lab;
  }
}

std::vector<double> source_residuals(const Dataset& ref, const NeighbourOrder& order,
                                     const TreeFunction& h) {
  std::vector<double> res(order.perm.size());
  for (std::size_t i = 0; i < res.size(); ++i) {
    const std::size_t j = order.perm[i];
    res[i] = static_cast<double>(ref.label(j)) - h(ref.point(j));
  }
  return res;
}

std::vector<double> target_residuals(const Dataset& ref, const NeighbourOrder& order) {
  std::vector<double> res(order.perm.size());
  for (std::size_t i = 0; i < res.size(); ++i) res[i] = static_cast<double>(ref.label(order.perm[i])) - 0.5;
  return res;
}

double source_margin(const Dataset& ref, const NeighbourOrder& order, const TreeFunction& h,
                     std::size_t k) {
  return prefix_mean(source_residuals(ref, order, h), k);
}

double target_margin(const Dataset& ref, const NeighbourOrder& order, std::size_t k) {
  return prefix_mean(target_residuals(ref, order), k);
}

std::size_t lepski_k_source(const Dataset& ref, const NeighbourOrder& order, const TreeFunction& h,
                            double sigma) {
  if (!(sigma > 0)) throw ValidationError("sigma must be positive");
  return lepski_k(source_residuals(ref, order, h), sigma);
}

std::size_t lepski_k_target(const Dataset& ref, const NeighbourOrder& order, double sigma) {
  if (!(sigma > 0)) throw ValidationError("sigma must be positive");
  return lepski_k(target_residuals(ref, order), sigma);
}

}  // namespace atl
