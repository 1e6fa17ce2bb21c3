#pragma once

#include "atl/core.hpp"
#include "atl/neighbours.hpp"
#include "atl/tree_search.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace atl {

/// Robustness grid resolved against a sample size at fit time.
struct SigmaGridSpec {
  enum class Kind { Geometric, Exact };
  Kind kind = Kind::Geometric;
  std::size_t points = 32;  // geometric only

  RobustnessGrid resolve(std::size_t n) const;
};

struct AtlConfig {
  SigmaGridSpec sigma_p;
  SigmaGridSpec sigma_q;
  std::vector<std::size_t> l_values{0, 1, 2};  // 0 is the constant-1/2 tree
  TreeSearchStrategy strategy;
  std::uint64_t seed = 0;
  std::size_t max_family = 100000;

  void validate() const;
};

enum class Family { Source, Target };

struct CandidateInfo {
  Family family;
  std::size_t leaves;  // source family only
  double sigma;
  int holdout_errors;
};

struct AtlModel {
  Classifier chosen;
  std::size_t chosen_index;  // into candidates (source family first)
  std::vector<Classifier> family_p;
  std::vector<Classifier> family_q;
  std::vector<CandidateInfo> candidates;
  std::size_t split_index;  // calibration rows: floor(n_Q/2), plus n_P when pooled
  std::shared_ptr<const Dataset> source;
  std::shared_ptr<const Dataset> calibration;  // reference of the target family
};

/// First floor(n/2) rows and the rest, in order.
std::pair<Dataset, Dataset> split_target(const Dataset& target);

/// Both families are built from the source sample and the first half of the target
/// sample; the second half only selects among them. Family order: source candidates by
/// L in config order then sigma ascending, followed by target candidates by sigma.
AtlModel fit_atl(const Dataset& source, const Dataset& target, const AtlConfig& cfg);

/// Pooled baseline: every source row joins the target calibration half, so the target
/// family uses D_P followed by D_Q^0 as its reference; D_Q^1 still selects. The target
/// sigma grid is resolved on n_P + n_Q.
AtlModel fit_pooled(const Dataset& source, const Dataset& target, const AtlConfig& cfg);

}  // namespace atl
