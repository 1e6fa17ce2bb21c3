#include "atl/atl.hpp"

#include "atl/kernels.hpp"
#include "atl/parallel.hpp"
#include "atl/rng.hpp"

#include <random>
#include <string>

namespace atl {

RobustnessGrid SigmaGridSpec::resolve(std::size_t n) const {
  return kind == Kind::Exact ? RobustnessGrid::exact(n) : RobustnessGrid::geometric(n, points);
}

void AtlConfig::validate() const {
  if (l_values.empty()) throw ValidationError("L_values must be nonempty");
  if (sigma_p.kind == SigmaGridSpec::Kind::Geometric && sigma_p.points == 0)
    throw ValidationError("source sigma grid needs at least one point");
  if (sigma_q.kind == SigmaGridSpec::Kind::Geometric && sigma_q.points == 0)
    throw ValidationError("target sigma grid needs at least one point");
  if (max_family == 0) throw ValidationError("max_family must be positive");
  strategy.validate();
}

std::pair<Dataset, Dataset> split_target(const Dataset& target) {
  if (target.size() < 2) throw ValidationError("the target sample needs at least two points");
  const std::size_t m = target.size() / 2;
  return {target.slice(0, m), target.slice(m, target.size())};
}

namespace {

std::vector<TreeFunction> trees_for_level(const CalibrationContext& ctx, std::size_t leaves,
                                          const std::vector<double>& sigmas,
                                          const TreeSearchStrategy& strategy, std::uint64_t seed) {
  const Dataset& src = ctx.source();
  std::vector<TreeFunction> out;
  auto take = [&](const std::vector<TreeChoice>& choices) {
    for (const auto& c : choices) out.push_back(c.tree);
  };
  if (std::holds_alternative<ExhaustiveRestricted>(strategy.mode)) {
    take(best_trees(ctx, enumerate_restricted_trees(src, leaves, src.size()), sigmas));
  } else if (auto* mc = std::get_if<MonteCarloSplits>(&strategy.mode)) {
    std::vector<TreePartition> parts;
    if (leaves == 1) {
      parts.emplace_back(src.dim());
    } else {
      std::mt19937_64 rng(seed);
      parts = random_partitions(src, leaves, mc->num_splits, rng);
    }
    take(search_partitions(ctx, parts, sigmas, strategy.tau));
  } else {
    const auto& greedy = std::get<GreedyGrowth>(strategy.mode);
    for (std::size_t g = 0; g < sigmas.size(); ++g) {
      std::mt19937_64 rng(derive_seed(seed, {g}));
      const auto chain = grow_greedy(ctx, sigmas[g], GreedyGrowth{leaves, greedy.thresholds_per_axis},
                                     strategy.tau, rng);
      out.push_back(chain.back().tree);
    }
  }
  return out;
}

// Holdout labels for one candidate given precomputed neighbour orders; the arithmetic
// matches Classifier::classify exactly.
std::vector<Label> labels_from_orders(const Dataset& ref, const std::vector<NeighbourOrder>& orders,
                                      const TreeFunction* tree, double sigma) {
  std::vector<Label> out(orders.size());
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const auto res = tree ? source_residuals(ref, orders[i], *tree) : target_residuals(ref, orders[i]);
    out[i] = prefix_mean(res, lepski_k(res, sigma)) >= 0.0 ? 1 : 0;
  }
  return out;
}

}  // namespace

namespace {

// Families from `source` and `q0`, selection on `q1`; the target grid is resolved on `grid_n`.
AtlModel fit_split(const Dataset& source, const Dataset& q0, const Dataset& q1, std::size_t grid_n,
                   const AtlConfig& cfg) {
  auto calib = std::make_shared<const Dataset>(q0.with_origin(Origin::TargetQ));
  auto src = std::make_shared<const Dataset>(source.with_origin(Origin::SourceP));
  const bool has_source = !source.empty();
  const RobustnessGrid grid_q = cfg.sigma_q.resolve(grid_n);
  const std::vector<double> sigmas_p =
      has_source ? cfg.sigma_p.resolve(source.size()).values() : std::vector<double>{};

  const std::size_t family_size = cfg.l_values.size() * sigmas_p.size() + grid_q.size();
  if (family_size > cfg.max_family)
    throw ValidationError("classifier family of size " + std::to_string(family_size) +
                          " exceeds the limit of " + std::to_string(cfg.max_family));

  AtlModel model{Classifier::constant(0), 0, {}, {}, {}, q0.size(), src, calib};
  std::vector<std::vector<Label>> preds;

  if (has_source) {
    const CalibrationContext ctx(*src, *calib);
    const auto orders = kernels::neighbour_orders(*src, q1, kernels::Exec::Parallel);
    for (std::size_t li = 0; li < cfg.l_values.size(); ++li) {
      const std::size_t leaves = cfg.l_values[li];
      std::vector<TreeFunction> trees;
      if (leaves == 0) trees.assign(sigmas_p.size(), TreeFunction::constant_half(src->dim()));
      else trees = trees_for_level(ctx, leaves, sigmas_p, cfg.strategy, derive_seed(cfg.seed, {leaves}));
      for (std::size_t g = 0; g < sigmas_p.size(); ++g) {
        model.family_p.push_back(Classifier::source_calibrated(sigmas_p[g], trees[g], src));
        model.candidates.push_back({Family::Source, leaves, sigmas_p[g], 0});
      }
    }
    const std::size_t count = model.family_p.size();
    std::vector<std::vector<Label>> p_preds(count);
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_threads())
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      const auto& s = std::get<SourceCalibrated>(model.family_p[c].variant());
      p_preds[c] = labels_from_orders(*src, orders, &s.tree, s.sigma);
    }
    for (auto& p : p_preds) preds.push_back(std::move(p));
  }

  const auto q_orders = kernels::neighbour_orders(*calib, q1, kernels::Exec::Parallel);
  for (double sigma : grid_q.values()) {
    model.family_q.push_back(Classifier::target_knn(sigma, calib));
    model.candidates.push_back({Family::Target, 0, sigma, 0});
    preds.push_back(labels_from_orders(*calib, q_orders, nullptr, sigma));
  }

  const Selection sel = erm_select_predictions(preds, q1.labels());
  for (std::size_t c = 0; c < model.candidates.size(); ++c) model.candidates[c].holdout_errors = sel.all_errors[c];
  model.chosen_index = sel.index;
  model.chosen = sel.index < model.family_p.size() ? model.family_p[sel.index]
                                                   : model.family_q[sel.index - model.family_p.size()];
  return model;
}

void check_inputs(const Dataset& source, const Dataset& target, const AtlConfig& cfg) {
  cfg.validate();
  if (target.size() < 2) throw ValidationError("the target sample needs at least two points");
  if (!source.empty() && source.dim() != target.dim())
    throw ValidationError("source and target dimensions differ");
}

}  // namespace

AtlModel fit_atl(const Dataset& source, const Dataset& target, const AtlConfig& cfg) {
  check_inputs(source, target, cfg);
  const auto [q0, q1] = split_target(target);
  return fit_split(source, q0, q1, target.size(), cfg);
}

AtlModel fit_pooled(const Dataset& source, const Dataset& target, const AtlConfig& cfg) {
  check_inputs(source, target, cfg);
  const auto [q0, q1] = split_target(target);
  const Dataset reference = source.empty() ? q0 : concat(source, q0, Origin::TargetQ);
  return fit_split(Dataset(Origin::SourceP, target.dim()), reference, q1, source.size() + target.size(), cfg);
}

}  // namespace atl
