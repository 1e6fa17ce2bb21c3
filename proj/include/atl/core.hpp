#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace atl {

using Label = int;

// Bad input (arguments, configuration, data shape). The CLI maps it to exit code 2.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class Origin { SourceP, TargetQ };

const char* origin_name(Origin origin);
Origin parse_origin(const std::string& name);

struct LabeledSample {
  std::vector<double> features;
  Label label = 0;
};

/// Ordered labelled sample. Index i is the identity of a sample: every
/// operation preserves order, and neighbour tie-breaking relies on it.
class Dataset {
public:
  Dataset(Origin origin, std::size_t dim);
  Dataset(Origin origin, std::size_t dim, std::vector<double> features, std::vector<Label> labels);

  void push_back(std::span<const double> x, Label y);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t dim() const { return dim_; }
  Origin origin() const { return origin_; }

  std::span<const double> point(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  Label label(std::size_t i) const { return labels_[i]; }
  LabeledSample sample(std::size_t i) const;

  const std::vector<double>& features() const { return features_; }
  const std::vector<Label>& labels() const { return labels_; }

  /// Rows [begin, end) in their original order.
  Dataset slice(std::size_t begin, std::size_t end) const;
  Dataset prefix(std::size_t n) const { return slice(0, n); }
  Dataset with_origin(Origin origin) const;

private:
  Origin origin_;
  std::size_t dim_;
  std::vector<double> features_;
  std::vector<Label> labels_;
};

/// `first` followed by `second`, tagged with `origin`.
Dataset concat(const Dataset& first, const Dataset& second, Origin origin);

// Leaf and axis indices are zero-based.
struct SplitStep {
  std::size_t leaf = 0;
  std::size_t axis = 0;
  double threshold = 0.0;

  bool operator==(const SplitStep&) const = default;
};

/// Decision-tree partition of R^d built by a sequence of axis-aligned splits.
///
/// Cell numbering: applying a step to cell `leaf` keeps {x in cell : x[axis] >= threshold}
/// under the same index and appends the complement as a new last cell. The empty step
/// list is the single-cell partition.
class TreePartition {
public:
  explicit TreePartition(std::size_t dim, std::vector<SplitStep> steps = {});

  std::size_t dim() const { return dim_; }
  std::size_t leaves() const { return steps_.size() + 1; }
  const std::vector<SplitStep>& steps() const { return steps_; }

  std::size_t leaf_of(std::span<const double> x) const;

  /// New partition with one more step appended.
  TreePartition refined(SplitStep step) const;

  bool operator==(const TreePartition&) const = default;

private:
  std::size_t dim_;
  std::vector<SplitStep> steps_;
};

/// Piecewise-constant map x -> taus[leaf_of(x)].
class TreeFunction {
public:
  TreeFunction(TreePartition partition, std::vector<double> taus,
               std::optional<std::size_t> grid_n = std::nullopt);

  /// The constant-1/2 function (empty partition).
  static TreeFunction constant_half(std::size_t dim);

  const TreePartition& partition() const { return partition_; }
  const std::vector<double>& taus() const { return taus_; }
  std::optional<std::size_t> grid_n() const { return grid_n_; }
  std::size_t leaves() const { return partition_.leaves(); }

  double operator()(std::span<const double> x) const { return taus_[partition_.leaf_of(x)]; }

  bool operator==(const TreeFunction&) const = default;

private:
  TreePartition partition_;
  std::vector<double> taus_;
  std::optional<std::size_t> grid_n_;
};

/// Snap a value in [0,1] to the nearest point of {0, 1/n, ..., 1}; returns the grid index.
std::size_t snap_to_grid(double value, std::size_t n);

// Classifier variants ---------------------------------------------------------

struct SourceCalibrated {
  double sigma;
  TreeFunction tree;
  std::shared_ptr<const Dataset> reference;
};

struct TargetKnn {
  double sigma;
  std::shared_ptr<const Dataset> reference;
};

struct ConstantClassifier {
  Label label;
};

// Analytic rule (Bayes classifier of a known distribution, test fixtures).
struct OracleClassifier {
  std::string name;
  std::function<Label(std::span<const double>)> rule;
};

class Classifier {
public:
  using Variant = std::variant<SourceCalibrated, TargetKnn, ConstantClassifier, OracleClassifier>;

  Classifier(Variant v);

  static Classifier source_calibrated(double sigma, TreeFunction tree,
                                      std::shared_ptr<const Dataset> reference);
  static Classifier target_knn(double sigma, std::shared_ptr<const Dataset> reference);
  static Classifier constant(Label label);
  static Classifier oracle(std::string name, std::function<Label(std::span<const double>)> rule);

  Label classify(std::span<const double> x) const;

  /// Labels for every row of `points`.
  std::vector<Label> classify_all(const Dataset& points) const;

  const Variant& variant() const { return v_; }
  std::string kind() const;

private:
  Variant v_;
};

// Parameters of the transfer, marginal, margin and smoothness assumptions.
struct ParameterVector {
  double delta = 0.0;
  double phi = 1.0;
  std::size_t l_star = 1;
  std::size_t d = 1;
  double d_q = 1.0;
  double gamma_q = 1.0;
  double d_p = 1.0;
  double gamma_p = 1.0;
  double c_pq = 2.0;
  double alpha = 1.0;
  double c_m = 1.0;
  double beta = 1.0;
  double c_s = 1.0;

  /// Throws ValidationError on any range violation.
  void validate() const;
};

}  // namespace atl
