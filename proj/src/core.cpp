#include "atl/core.hpp"

#include "atl/neighbours.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace atl {

const char* origin_name(Origin origin) { return origin == Origin::SourceP ? "P" : "Q"; }

Origin parse_origin(const std::string& name) {
  if (name == "P") return Origin::SourceP;
  if (name == "Q") return Origin::TargetQ;
  throw ValidationError("origin must be \"P\" or \"Q\", got \"" + name + "\"");
}

Dataset::Dataset(Origin origin, std::size_t dim) : origin_(origin), dim_(dim) {
  if (dim == 0) throw ValidationError("dataset dimension must be positive");
}

Dataset::Dataset(Origin origin, std::size_t dim, std::vector<double> features,
                 std::vector<Label> labels)
    : origin_(origin), dim_(dim), features_(std::move(features)), labels_(std::move(labels)) {
  if (dim == 0) throw ValidationError("dataset dimension must be positive");
  if (features_.size() != labels_.size() * dim_)
    throw ValidationError("feature count does not match labels x dimension");
  for (Label y : labels_)
    if (y != 0 && y != 1) throw ValidationError("labels must be 0 or 1");
}

void Dataset::push_back(std::span<const double> x, Label y) {
  if (x.size() != dim_) throw ValidationError("sample dimension does not match dataset");
  if (y != 0 && y != 1) throw ValidationError("labels must be 0 or 1");
  features_.insert(features_.end(), x.begin(), x.end());
  labels_.push_back(y);
}

LabeledSample Dataset::sample(std::size_t i) const {
  auto p = point(i);
  return {std::vector<double>(p.begin(), p.end()), labels_[i]};
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw ValidationError("dataset slice out of range");
  std::vector<double> f(features_.begin() + static_cast<std::ptrdiff_t>(begin * dim_),
                        features_.begin() + static_cast<std::ptrdiff_t>(end * dim_));
  std::vector<Label> l(labels_.begin() + static_cast<std::ptrdiff_t>(begin),
                       labels_.begin() + static_cast<std::ptrdiff_t>(end));
  return Dataset(origin_, dim_, std::move(f), std::move(l));
}

Dataset Dataset::with_origin(Origin origin) const {
  Dataset out = *this;
  out.origin_ = origin;
  return out;
}

Dataset concat(const Dataset& first, const Dataset& second, Origin origin) {
  if (first.dim() != second.dim()) throw ValidationError("cannot concatenate datasets of different dimension");
  std::vector<double> f = first.features();
  f.insert(f.end(), second.features().begin(), second.features().end());
  std::vector<Label> l = first.labels();
  l.insert(l.end(), second.labels().begin(), second.labels().end());
  return Dataset(origin, first.dim(), std::move(f), std::move(l));
}

TreePartition::TreePartition(std::size_t dim, std::vector<SplitStep> steps)
    : dim_(dim), steps_(std::move(steps)) {
  if (dim == 0) throw ValidationError("partition dimension must be positive");
  for (std::size_t t = 0; t < steps_.size(); ++t) {
    if (steps_[t].leaf > t)
      throw ValidationError("split step " + std::to_string(t) + " refers to leaf " +
                            std::to_string(steps_[t].leaf) + " which does not exist yet");
    if (steps_[t].axis >= dim_) throw ValidationError("split axis out of range");
    if (std::isnan(steps_[t].threshold)) throw ValidationError("split threshold is NaN");
  }
}

std::size_t TreePartition::leaf_of(std::span<const double> x) const {
  if (x.size() != dim_) throw ValidationError("point dimension does not match partition");
  std::size_t leaf = 0;
  for (std::size_t t = 0; t < steps_.size(); ++t) {
    const SplitStep& s = steps_[t];
    if (s.leaf == leaf && !(x[s.axis] >= s.threshold)) leaf = t + 1;
  }
  return leaf;
}

TreePartition TreePartition::refined(SplitStep step) const {
  auto steps = steps_;
  steps.push_back(step);
  return TreePartition(dim_, std::move(steps));
}

TreeFunction::TreeFunction(TreePartition partition, std::vector<double> taus,
                           std::optional<std::size_t> grid_n)
    : partition_(std::move(partition)), taus_(std::move(taus)), grid_n_(grid_n) {
  if (taus_.size() != partition_.leaves())
    throw ValidationError("tree function needs one tau per leaf");
  if (grid_n_ && *grid_n_ == 0) throw ValidationError("tau grid size must be positive");
  for (double tau : taus_) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau values must lie in [0,1]");
    if (grid_n_) {
      const double scaled = tau * static_cast<double>(*grid_n_);
      if (std::abs(scaled - std::round(scaled)) > 1e-9)
        throw ValidationError("tau value is off the declared grid");
    }
  }
}

TreeFunction TreeFunction::constant_half(std::size_t dim) {
  return TreeFunction(TreePartition(dim), {0.5});
}

std::size_t snap_to_grid(double value, std::size_t n) {
  const double clamped = std::clamp(value, 0.0, 1.0);
  return static_cast<std::size_t>(std::llround(clamped * static_cast<double>(n)));
}

Classifier::Classifier(Variant v) : v_(std::move(v)) {
  if (auto* s = std::get_if<SourceCalibrated>(&v_)) {
    if (!(s->sigma > 0)) throw ValidationError("sigma must be positive");
    if (!s->reference || s->reference->empty()) throw ValidationError("empty reference data");
    if (s->tree.partition().dim() != s->reference->dim())
      throw ValidationError("tree dimension does not match reference data");
  } else if (auto* t = std::get_if<TargetKnn>(&v_)) {
    if (!(t->sigma > 0)) throw ValidationError("sigma must be positive");
    if (!t->reference || t->reference->empty()) throw ValidationError("empty reference data");
  } else if (auto* c = std::get_if<ConstantClassifier>(&v_)) {
    if (c->label != 0 && c->label != 1) throw ValidationError("constant label must be 0 or 1");
  } else if (auto* o = std::get_if<OracleClassifier>(&v_)) {
    if (!o->rule) throw ValidationError("oracle classifier needs a rule");
  }
}

Classifier Classifier::source_calibrated(double sigma, TreeFunction tree,
                                         std::shared_ptr<const Dataset> reference) {
  return Classifier(SourceCalibrated{sigma, std::move(tree), std::move(reference)});
}

Classifier Classifier::target_knn(double sigma, std::shared_ptr<const Dataset> reference) {
  return Classifier(TargetKnn{sigma, std::move(reference)});
}

Classifier Classifier::constant(Label label) { return Classifier(ConstantClassifier{label}); }

Classifier Classifier::oracle(std::string name, std::function<Label(std::span<const double>)> rule) {
  return Classifier(OracleClassifier{std::move(name), std::move(rule)});
}

Label Classifier::classify(std::span<const double> x) const {
  return std::visit(
      [&](const auto& c) -> Label {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SourceCalibrated>) {
          const auto order = neighbour_order(*c.reference, x);
          const auto res = source_residuals(*c.reference, order, c.tree);
          return prefix_mean(res, lepski_k(res, c.sigma)) >= 0.0 ? 1 : 0;
        } else if constexpr (std::is_same_v<T, TargetKnn>) {
          const auto order = neighbour_order(*c.reference, x);
          const auto res = target_residuals(*c.reference, order);
          return prefix_mean(res, lepski_k(res, c.sigma)) >= 0.0 ? 1 : 0;
        } else if constexpr (std::is_same_v<T, ConstantClassifier>) {
          return c.label;
        } else {
          return c.rule(x);
        }
      },
      v_);
}

std::vector<Label> Classifier::classify_all(const Dataset& points) const {
  std::vector<Label> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = classify(points.point(i));
  return out;
}

std::string Classifier::kind() const {
  switch (v_.index()) {
    case 0: return "SourceCalibrated";
    case 1: return "TargetKnn";
    case 2: return "Constant";
    default: return "Oracle";
  }
}

void ParameterVector::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("parameter vector: " + what); };
  if (!(delta >= 0.0 && delta < 1.0)) fail("Delta must lie in [0,1)");
  if (!(phi > 0.0 && phi <= 1.0)) fail("phi must lie in (0,1]");
  if (l_star < 1) fail("L* must be a positive integer");
  if (d < 1) fail("d must be a positive integer");
  const double dd = static_cast<double>(d);
  if (!(d_q >= 1.0 && d_q <= dd)) fail("d_Q must lie in [1,d]");
  if (!(gamma_q > 0.0)) fail("gamma_Q must be positive");
  if (!(d_p >= d_q && d_p <= dd)) fail("d_P must lie in [d_Q,d]");
  if (!(gamma_p > 0.0)) fail("gamma_P must be positive");
  if (!(c_pq > 1.0)) fail("C_PQ must exceed 1");
  if (!(alpha > 0.0)) fail("alpha must be positive");
  if (!(c_m >= 1.0)) fail("C_M must be at least 1");
  if (!(beta > 0.0 && beta <= 1.0)) fail("beta must lie in (0,1]");
  if (!(c_s >= 1.0)) fail("C_S must be at least 1");
}

}  // namespace atl
