#pragma once

#include "atl/atl.hpp"
#include "atl/distributions.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace atl {

enum class Method { Atl, Pooled, TargetOnly, BayesOracle };

const char* method_name(Method m);
Method parse_method(const std::string& name);

struct ExperimentConfig {
  PairSpec spec = setting1();
  int setting = 1;  // label used in output rows and seed paths
  std::vector<std::size_t> n_p_list{0, 100, 200, 500, 1000};
  std::size_t n_q = 100;
  std::size_t n_test = 1000;
  std::size_t repetitions = 50;
  AtlConfig atl;
  std::vector<Method> methods{Method::Atl, Method::Pooled};
  std::uint64_t master_seed = 0;

  void validate() const;
};

struct CellResult {
  int setting;
  Method method;
  std::size_t n_p;
  std::vector<double> errors;  // test error fraction per repetition
  double mean_pct;
  double std_error_pct;  // sample SD / sqrt(repetitions)
  bool degenerate;       // pooled with n_P = 0 (identical to target only)
};

struct ExperimentResult {
  std::vector<CellResult> cells;  // n_P in config order, methods in config order
  double runtime_seconds;
  std::uint64_t master_seed;
};

/// Seed paths below master_seed: target (setting, rep, 0), source (setting, rep, 1),
/// test (setting, rep, 2), fit (setting, rep, 3, n_P, method). The source draw is made
/// once per repetition at the largest n_P and every smaller n_P uses a prefix.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Mean and SE (in percent) of a list of error fractions.
std::pair<double, double> mean_and_se_pct(const std::vector<double>& errors);

/// Published mean (SE) values; nullopt for NA cells.
struct PublishedCell {
  std::optional<double> mean;
  std::optional<double> se;
};
std::optional<PublishedCell> published_table1(int setting, Method method, std::size_t n_p);

/// Default configuration of one Table 1 setting.
ExperimentConfig table1_config(int setting, std::uint64_t master_seed, std::size_t repetitions = 50);

/// setting,method,n_P,mean_error_pct,std_error_pct rows; degenerate cells are omitted.
std::string results_csv(const std::vector<ExperimentResult>& results);
/// Reproduced values next to the published ones.
std::string results_table(const std::vector<ExperimentResult>& results);

struct Table1Files {
  std::filesystem::path csv, table, runtime;
  std::vector<ExperimentResult> results;
};

/// Runs both settings and writes table1.csv, table1.txt and runtime.json into `out_dir`.
Table1Files reproduce_table1(const std::filesystem::path& out_dir, std::uint64_t master_seed,
                             std::size_t repetitions = 50);

}  // namespace atl
