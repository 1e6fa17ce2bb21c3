#include "atl/tree_search.hpp"

#include "atl/kernels.hpp"
#include "atl/neighbours.hpp"
#include "atl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace atl {

void TreeSearchStrategy::validate() const {
  if (auto* mc = std::get_if<MonteCarloSplits>(&mode); mc && mc->num_splits < 1)
    throw ValidationError("Monte Carlo search needs at least one split");
  if (auto* g = std::get_if<GreedyGrowth>(&mode); g && g->max_leaves < 1)
    throw ValidationError("greedy search needs max_leaves >= 1");
  if (auto* t = std::get_if<TauLeafMeanLocal>(&tau)) {
    if (t->grid_size < 1) throw ValidationError("local tau grid needs at least one value");
    if (!(t->radius >= 0.0)) throw ValidationError("local tau radius must be non-negative");
  }
}

CalibrationContext::CalibrationContext(const Dataset& source, const Dataset& calib)
    : source_(&source), calib_(&calib) {
  if (source.empty()) throw ValidationError("calibration needs a nonempty source sample");
  if (source.dim() != calib.dim()) throw ValidationError("source and calibration dimensions differ");
  const std::size_t n = source.size();
  perm_.resize(calib.size() * n);
  permuted_labels_.resize(calib.size() * n);
  const auto orders = kernels::neighbour_orders(source, calib, kernels::Exec::Parallel);
  for (std::size_t i = 0; i < calib.size(); ++i) {
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t j = orders[i].perm[r];
      perm_[i * n + r] = static_cast<std::uint32_t>(j);
      permuted_labels_[i * n + r] = static_cast<double>(source.label(j));
    }
  }
}

std::vector<int> CalibrationContext::objective(std::span<const double> source_values,
                                               std::span<const double> sigmas) const {
  const std::size_t n = source_->size();
  if (source_values.size() != n) throw ValidationError("need one tree value per source point");
  std::vector<int> errors(sigmas.size(), 0);
  std::vector<double> res(n);
  std::vector<Label> labels(sigmas.size());
  for (std::size_t i = 0; i < calib_->size(); ++i) {
    const std::uint32_t* p = perm_.data() + i * n;
    const double* y = permuted_labels_.data() + i * n;
    for (std::size_t r = 0; r < n; ++r) res[r] = y[r] - source_values[p[r]];
    lepski_labels(res, sigmas, labels);
    const Label truth = calib_->label(i);
    for (std::size_t g = 0; g < sigmas.size(); ++g) errors[g] += labels[g] != truth ? 1 : 0;
  }
  return errors;
}

std::vector<double> CalibrationContext::tree_values(const TreeFunction& h) const {
  std::vector<double> v(source_->size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = h(source_->point(j));
  return v;
}

namespace {

using LeafAssignment = std::vector<std::uint32_t>;

LeafAssignment assign_leaves(const TreePartition& p, const Dataset& points) {
  LeafAssignment a(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) a[j] = static_cast<std::uint32_t>(p.leaf_of(points.point(j)));
  return a;
}

// Sorted unique coordinates per axis -> one threshold per gap (n+1 at most).
std::vector<std::vector<double>> gap_thresholds(const Dataset& points) {
  std::vector<std::vector<double>> out(points.dim());
  for (std::size_t a = 0; a < points.dim(); ++a) {
    std::vector<double> v;
    for (std::size_t j = 0; j < points.size(); ++j) v.push_back(points.point(j)[a]);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    auto& t = out[a];
    if (v.empty()) {
      t.push_back(0.0);
      continue;
    }
    t.push_back(v.front());
    for (std::size_t i = 0; i + 1 < v.size(); ++i) t.push_back(0.5 * (v[i] + v[i + 1]));
    t.push_back(v.back() + 1.0);
  }
  return out;
}

void enumerate_partitions(const TreePartition& current, std::size_t leaves,
                          const std::vector<std::vector<double>>& thresholds, const Dataset& points,
                          std::map<LeafAssignment, TreePartition>& seen,
                          std::vector<TreePartition>& out) {
  if (current.leaves() == leaves) {
    auto key = assign_leaves(current, points);
    if (seen.emplace(key, current).second) out.push_back(current);
    return;
  }
  for (std::size_t leaf = 0; leaf < current.leaves(); ++leaf)
    for (std::size_t axis = 0; axis < current.dim(); ++axis)
      for (double s : thresholds[axis])
        enumerate_partitions(current.refined({leaf, axis, s}), leaves, thresholds, points, seen, out);
}

struct TauResult {
  std::vector<std::uint32_t> idx;
  int errors;
};

// Calibration-value search on one partition, described by the leaf of every source point.
class TauSearch {
public:
  TauSearch(const CalibrationContext& ctx, LeafAssignment assign, std::size_t leaves,
            std::span<const double> sigmas)
      : ctx_(ctx), assign_(std::move(assign)), leaves_(leaves), sigmas_(sigmas),
        n_(ctx.source().size()), count_(leaves, 0), ones_(leaves, 0) {
    for (std::size_t j = 0; j < assign_.size(); ++j) {
      ++count_[assign_[j]];
      ones_[assign_[j]] += ctx.source().label(j);
    }
  }

  std::uint32_t mean_index(std::size_t leaf) const {
    if (count_[leaf] == 0) return half_index();
    return static_cast<std::uint32_t>(
        snap_to_grid(static_cast<double>(ones_[leaf]) / static_cast<double>(count_[leaf]), n_));
  }
  std::uint32_t half_index() const { return static_cast<std::uint32_t>(snap_to_grid(0.5, n_)); }
  bool searchable(std::size_t leaf) const { return count_[leaf] > 0; }

  const std::vector<int>& eval(const std::vector<std::uint32_t>& idx) {
    auto it = memo_.find(idx);
    if (it != memo_.end()) return it->second;
    std::vector<double> hv(assign_.size());
    for (std::size_t j = 0; j < hv.size(); ++j)
      hv[j] = static_cast<double>(idx[assign_[j]]) / static_cast<double>(n_);
    return memo_.emplace(idx, ctx_.objective(hv, sigmas_)).first->second;
  }

  std::vector<std::uint32_t> local_values(std::size_t leaf, const TauLeafMeanLocal& mode,
                                          std::optional<std::uint32_t> extra) const {
    const long long seed = mean_index(leaf);
    std::vector<std::uint32_t> vals;
    const long long half = static_cast<long long>((mode.grid_size - 1) / 2);
    long long step = 1;
    if (half > 0) step = std::max<long long>(1, std::llround(mode.radius * static_cast<double>(n_) / static_cast<double>(half)));
    for (long long k = -half; k <= half; ++k) {
      const long long v = std::clamp<long long>(seed + k * step, 0, static_cast<long long>(n_));
      vals.push_back(static_cast<std::uint32_t>(v));
    }
    if (extra) vals.push_back(*extra);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return vals;
  }

  // Coordinate descent per sigma from `start` over local grids; only strict improvements move.
  std::vector<TauResult> local_descent(const TauLeafMeanLocal& mode,
                                       const std::vector<std::uint32_t>& start) {
    std::vector<std::vector<std::uint32_t>> grids(leaves_);
    for (std::size_t l = 0; l < leaves_; ++l)
      if (searchable(l)) grids[l] = local_values(l, mode, start[l]);
    std::vector<TauResult> out;
    out.reserve(sigmas_.size());
    for (std::size_t g = 0; g < sigmas_.size(); ++g) {
      auto cur = start;
      int cur_err = eval(cur)[g];
      for (int sweep = 0; sweep < 32; ++sweep) {
        bool moved = false;
        for (std::size_t l = 0; l < leaves_; ++l) {
          if (!searchable(l)) continue;
          auto cand = cur;
          for (std::uint32_t v : grids[l]) {
            if (v == cur[l]) continue;
            cand[l] = v;
            const int e = eval(cand)[g];
            if (e < cur_err) {
              cur_err = e;
              cur[l] = v;
              moved = true;
            }
          }
        }
        if (!moved) break;
      }
      out.push_back({cur, cur_err});
    }
    return out;
  }

  std::vector<TauResult> run(const TauMode& mode) {
    if (auto* local = std::get_if<TauLeafMeanLocal>(&mode)) {
      std::vector<std::uint32_t> start(leaves_);
      for (std::size_t l = 0; l < leaves_; ++l) start[l] = mean_index(l);
      return local_descent(*local, start);
    }
    return grid_search(std::get<TauGridSearch>(mode));
  }

  std::vector<TauResult> grid_search(const TauGridSearch& mode) {
    std::vector<std::uint32_t> per_leaf;
    if (mode.grid_size == 0 || mode.grid_size >= n_ + 1) {
      for (std::size_t k = 0; k <= n_; ++k) per_leaf.push_back(static_cast<std::uint32_t>(k));
    } else if (mode.grid_size == 1) {
      per_leaf.push_back(half_index());
    } else {
      for (std::size_t i = 0; i < mode.grid_size; ++i)
        per_leaf.push_back(static_cast<std::uint32_t>(
            std::llround(static_cast<double>(i * n_) / static_cast<double>(mode.grid_size - 1))));
      per_leaf.erase(std::unique(per_leaf.begin(), per_leaf.end()), per_leaf.end());
    }
    std::vector<std::size_t> active;
    for (std::size_t l = 0; l < leaves_; ++l)
      if (searchable(l)) active.push_back(l);
    double combos = std::pow(static_cast<double>(per_leaf.size()), static_cast<double>(active.size()));
    if (combos > 2e5) throw ValidationError("joint tau grid search is too large; use the local search");

    std::vector<TauResult> best(sigmas_.size(), TauResult{{}, std::numeric_limits<int>::max()});
    std::vector<std::uint32_t> cur(leaves_, half_index());
    std::vector<std::size_t> digit(active.size(), 0);
    while (true) {
      for (std::size_t a = 0; a < active.size(); ++a) cur[active[a]] = per_leaf[digit[a]];
      const auto& e = eval(cur);
      for (std::size_t g = 0; g < sigmas_.size(); ++g)
        if (e[g] < best[g].errors) best[g] = {cur, e[g]};
      std::size_t a = 0;
      for (; a < active.size(); ++a) {
        if (++digit[a] < per_leaf.size()) break;
        digit[a] = 0;
      }
      if (a == active.size()) break;
    }
    return best;
  }

  void clear_memo() { memo_.clear(); }

private:
  const CalibrationContext& ctx_;
  LeafAssignment assign_;
  std::size_t leaves_;
  std::span<const double> sigmas_;
  std::size_t n_;
  std::vector<std::size_t> count_;
  std::vector<std::size_t> ones_;
  std::map<std::vector<std::uint32_t>, std::vector<int>> memo_;
};

TreeFunction to_tree(const TreePartition& p, const std::vector<std::uint32_t>& idx, std::size_t n) {
  std::vector<double> taus(idx.size());
  for (std::size_t l = 0; l < idx.size(); ++l) taus[l] = static_cast<double>(idx[l]) / static_cast<double>(n);
  return TreeFunction(p, std::move(taus), n);
}

}  // namespace

std::vector<TreeFunction> enumerate_restricted_trees(const Dataset& points, std::size_t leaves,
                                                     std::size_t grid_n) {
  if (leaves == 0) throw ValidationError("L = 0 denotes the constant-1/2 function and is not enumerable");
  if (points.empty()) throw ValidationError("restricted enumeration needs a nonempty point set");
  if (grid_n == 0) throw ValidationError("tau grid size must be positive");

  const auto thresholds = gap_thresholds(points);
  std::map<LeafAssignment, TreePartition> seen;
  std::vector<TreePartition> partitions;
  enumerate_partitions(TreePartition(points.dim()), leaves, thresholds, points, seen, partitions);

  const double combos = static_cast<double>(partitions.size()) *
                        std::pow(static_cast<double>(grid_n + 1), static_cast<double>(leaves));
  if (combos > 2e7) throw ValidationError("exhaustive tree enumeration is too large for this input");

  std::set<std::vector<std::uint32_t>> restrictions;
  std::vector<TreeFunction> out;
  for (const auto& p : partitions) {
    const auto assign = assign_leaves(p, points);
    std::vector<std::uint32_t> tau(leaves, 0);
    while (true) {
      std::vector<std::uint32_t> key(points.size());
      for (std::size_t j = 0; j < key.size(); ++j) key[j] = tau[assign[j]];
      if (restrictions.insert(key).second) out.push_back(to_tree(p, tau, grid_n));
      std::size_t l = 0;
      for (; l < leaves; ++l) {
        if (++tau[l] <= grid_n) break;
        tau[l] = 0;
      }
      if (l == leaves) break;
    }
  }
  return out;
}

std::size_t count_distinct_restrictions(const std::vector<TreeFunction>& trees, const Dataset& points) {
  std::set<std::vector<double>> distinct;
  for (const auto& h : trees) {
    std::vector<double> key(points.size());
    for (std::size_t j = 0; j < key.size(); ++j) key[j] = h(points.point(j));
    distinct.insert(std::move(key));
  }
  return distinct.size();
}

double restriction_count_bound(std::size_t leaves, std::size_t dim, std::size_t n) {
  const double base = static_cast<double>(leaves) * static_cast<double>(dim) * static_cast<double>(n + 1);
  return std::pow(base, 2.0 * static_cast<double>(leaves));
}

std::vector<TreePartition> random_partitions(const Dataset& points, std::size_t leaves,
                                             std::size_t count, std::mt19937_64& rng) {
  if (leaves == 0) throw ValidationError("L = 0 has no partition");
  if (points.empty() && leaves > 1) throw ValidationError("random splits need at least one data point");
  std::vector<TreePartition> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    TreePartition p(points.dim());
    for (std::size_t t = 1; t < leaves; ++t) {
      const std::size_t leaf = std::uniform_int_distribution<std::size_t>(0, t - 1)(rng);
      const std::size_t axis = std::uniform_int_distribution<std::size_t>(0, points.dim() - 1)(rng);
      const std::size_t i = std::uniform_int_distribution<std::size_t>(0, points.size() - 1)(rng);
      p = p.refined({leaf, axis, points.point(i)[axis]});
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<TreeChoice> search_partitions(const CalibrationContext& ctx,
                                          const std::vector<TreePartition>& partitions,
                                          std::span<const double> sigmas, const TauMode& tau) {
  if (partitions.empty()) throw ValidationError("no candidate partitions");
  const std::size_t n = ctx.source().size();

  std::vector<std::size_t> unique;
  std::vector<LeafAssignment> assigns;
  {
    std::set<LeafAssignment> seen;
    for (std::size_t c = 0; c < partitions.size(); ++c) {
      auto a = assign_leaves(partitions[c], ctx.source());
      if (seen.insert(a).second) {
        unique.push_back(c);
        assigns.push_back(std::move(a));
      }
    }
  }

  std::vector<std::vector<TauResult>> results(unique.size());
  const auto m = static_cast<std::ptrdiff_t>(unique.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_threads())
  for (std::ptrdiff_t u = 0; u < m; ++u) {
    TauSearch search(ctx, assigns[u], partitions[unique[u]].leaves(), sigmas);
    results[u] = search.run(tau);
  }

  std::vector<TreeChoice> out;
  out.reserve(sigmas.size());
  for (std::size_t g = 0; g < sigmas.size(); ++g) {
    std::size_t best = 0;
    for (std::size_t u = 1; u < unique.size(); ++u)
      if (results[u][g].errors < results[best][g].errors) best = u;
    out.push_back({to_tree(partitions[unique[best]], results[best][g].idx, n), results[best][g].errors});
  }
  return out;
}

std::vector<TreeChoice> best_trees(const CalibrationContext& ctx,
                                   const std::vector<TreeFunction>& candidates,
                                   std::span<const double> sigmas) {
  if (candidates.empty()) throw ValidationError("empty candidate list");
  std::vector<std::vector<double>> values;
  values.reserve(candidates.size());
  for (const auto& h : candidates) values.push_back(ctx.tree_values(h));
  const auto scores = kernels::score_candidates(ctx, values, sigmas, kernels::Exec::Parallel);
  std::vector<TreeChoice> out;
  for (std::size_t g = 0; g < sigmas.size(); ++g) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < candidates.size(); ++c)
      if (scores[c][g] < scores[best][g]) best = c;
    out.push_back({candidates[best], scores[best][g]});
  }
  return out;
}

std::vector<TreeChoice> grow_greedy(const CalibrationContext& ctx, double sigma,
                                    const GreedyGrowth& greedy, const TauMode& tau,
                                    std::mt19937_64& rng) {
  if (greedy.max_leaves < 1) throw ValidationError("greedy search needs max_leaves >= 1");
  const Dataset& src = ctx.source();
  const std::size_t n = src.size();
  const std::vector<double> sigmas{sigma};
  const TauLeafMeanLocal local =
      std::holds_alternative<TauLeafMeanLocal>(tau) ? std::get<TauLeafMeanLocal>(tau) : TauLeafMeanLocal{};

  // Candidate thresholds: source coordinates per axis, optionally a random subset.
  std::vector<std::vector<double>> thresholds(src.dim());
  for (std::size_t a = 0; a < src.dim(); ++a) {
    auto& t = thresholds[a];
    for (std::size_t j = 0; j < n; ++j) t.push_back(src.point(j)[a]);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    if (greedy.thresholds_per_axis > 0 && t.size() > greedy.thresholds_per_axis) {
      std::shuffle(t.begin(), t.end(), rng);
      t.resize(greedy.thresholds_per_axis);
      std::sort(t.begin(), t.end());
    }
  }

  TreePartition current(src.dim());
  TauSearch root(ctx, assign_leaves(current, src), 1, sigmas);
  auto first = root.run(tau)[0];
  std::vector<std::uint32_t> cur_idx = first.idx;
  int cur_err = first.errors;
  std::vector<TreeChoice> chain{{to_tree(current, cur_idx, n), cur_err}};

  while (current.leaves() < greedy.max_leaves) {
    struct Candidate {
      SplitStep step;
      std::vector<std::uint32_t> idx;
      int errors;
    };
    std::vector<Candidate> cands;
    for (std::size_t leaf = 0; leaf < current.leaves(); ++leaf)
      for (std::size_t a = 0; a < src.dim(); ++a)
        for (double s : thresholds[a]) cands.push_back({{leaf, a, s}, {}, 0});

    const auto m = static_cast<std::ptrdiff_t>(cands.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(worker_threads())
    for (std::ptrdiff_t c = 0; c < m; ++c) {
      const TreePartition p = current.refined(cands[c].step);
      TauSearch search(ctx, assign_leaves(p, src), p.leaves(), sigmas);
      // Start from the unrefined function so the objective cannot increase.
      std::vector<std::uint32_t> start = cur_idx;
      start.push_back(cur_idx[cands[c].step.leaf]);
      auto r = search.local_descent(local, start)[0];
      cands[c].idx = std::move(r.idx);
      cands[c].errors = r.errors;
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < cands.size(); ++c)
      if (cands[c].errors < cands[best].errors) best = c;
    current = current.refined(cands[best].step);
    cur_idx = cands[best].idx;
    cur_err = cands[best].errors;
    chain.push_back({to_tree(current, cur_idx, n), cur_err});
  }
  return chain;
}

Selection erm_select_tree(const std::vector<TreeFunction>& candidates, double sigma,
                          const Dataset& source, const Dataset& calib) {
  if (candidates.empty()) throw ValidationError("empty candidate list");
  if (!(sigma > 0)) throw ValidationError("sigma must be positive");
  CalibrationContext ctx(source, calib);
  std::vector<std::vector<double>> values;
  for (const auto& h : candidates) values.push_back(ctx.tree_values(h));
  const std::vector<double> sigmas{sigma};
  const auto scores = kernels::score_candidates(ctx, values, sigmas, kernels::Exec::Parallel);
  Selection sel{0, scores[0][0], {}};
  for (std::size_t c = 0; c < scores.size(); ++c) {
    sel.all_errors.push_back(scores[c][0]);
    if (scores[c][0] < sel.errors) sel = {c, scores[c][0], sel.all_errors};
  }
  return sel;
}

Selection erm_select_predictions(const std::vector<std::vector<Label>>& predictions,
                                 const std::vector<Label>& truth) {
  if (predictions.empty()) throw ValidationError("empty classifier family");
  Selection sel{0, std::numeric_limits<int>::max(), {}};
  for (std::size_t c = 0; c < predictions.size(); ++c) {
    if (predictions[c].size() != truth.size()) throw ValidationError("prediction length mismatch");
    int e = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) e += predictions[c][i] != truth[i] ? 1 : 0;
    sel.all_errors.push_back(e);
    if (e < sel.errors) {
      sel.index = c;
      sel.errors = e;
    }
  }
  return sel;
}

Selection erm_select_classifier(const std::vector<Classifier>& family, const Dataset& holdout) {
  if (family.empty()) throw ValidationError("empty classifier family");
  std::vector<std::vector<Label>> preds;
  preds.reserve(family.size());
  for (const auto& f : family) preds.push_back(kernels::predict(f, holdout, kernels::Exec::Parallel));
  return erm_select_predictions(preds, holdout.labels());
}

}  // namespace atl
