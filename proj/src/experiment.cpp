#include "atl/experiment.hpp"

#include "atl/io.hpp"
#include "atl/kernels.hpp"
#include "atl/parallel.hpp"
#include "atl/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace atl {

const char* method_name(Method m) {
  switch (m) {
    case Method::Atl: return "ATL";
    case Method::Pooled: return "pooled";
    case Method::TargetOnly: return "target_only";
    case Method::BayesOracle: return "bayes_oracle";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::Atl, Method::Pooled, Method::TargetOnly, Method::BayesOracle})
    if (name == method_name(m)) return m;
  throw ValidationError("unknown method \"" + name + "\"");
}

void ExperimentConfig::validate() const {
  spec.validate();
  atl.validate();
  if (repetitions < 1) throw ValidationError("repetitions must be at least 1");
  if (n_test < 1) throw ValidationError("n_test must be at least 1");
  if (n_q < 2) throw ValidationError("n_Q must be at least 2");
  if (n_p_list.empty()) throw ValidationError("n_P list must be nonempty");
  if (methods.empty()) throw ValidationError("at least one method is required");
}

std::pair<double, double> mean_and_se_pct(const std::vector<double>& errors) {
  const double n = static_cast<double>(errors.size());
  if (errors.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double e : errors) sum += e;
  const double mean = sum / n;
  double ss = 0.0;
  for (double e : errors) ss += (e - mean) * (e - mean);
  const double sd = errors.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {100.0 * mean, 100.0 * sd / std::sqrt(n)};
}

namespace {

double test_error(const Classifier& f, const Dataset& test) {
  const auto pred = kernels::predict(f, test, kernels::Exec::Serial);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < test.size(); ++i) wrong += pred[i] != test.label(i);
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n_np = cfg.n_p_list.size();
  const std::size_t n_m = cfg.methods.size();
  const std::size_t max_np = *std::max_element(cfg.n_p_list.begin(), cfg.n_p_list.end());
  const auto setting = static_cast<std::uint64_t>(cfg.setting);

  // errors[rep][np][method]
  std::vector<double> errors(cfg.repetitions * n_np * n_m, 0.0);
  const auto reps = static_cast<std::ptrdiff_t>(cfg.repetitions);

  // Repetitions are independent; each writes only its own slots.
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_threads())
  for (std::ptrdiff_t rep = 0; rep < reps; ++rep) {
    const auto r = static_cast<std::uint64_t>(rep);
    const Dataset target = sample(cfg.spec, Which::Q, cfg.n_q, derive_seed(cfg.master_seed, {setting, r, 0}));
    const Dataset source_all = sample(cfg.spec, Which::P, max_np, derive_seed(cfg.master_seed, {setting, r, 1}));
    const Dataset test = sample(cfg.spec, Which::Q, cfg.n_test, derive_seed(cfg.master_seed, {setting, r, 2}));
    for (std::size_t a = 0; a < n_np; ++a) {
      const std::size_t np = cfg.n_p_list[a];
      const Dataset source = source_all.prefix(np);
      for (std::size_t b = 0; b < n_m; ++b) {
        const Method m = cfg.methods[b];
        AtlConfig ac = cfg.atl;
        ac.seed = derive_seed(cfg.master_seed, {setting, r, 3, np, static_cast<std::uint64_t>(m)});
        double e = 0.0;
        switch (m) {
          case Method::Atl: e = test_error(fit_atl(source, target, ac).chosen, test); break;
          case Method::Pooled: e = test_error(fit_pooled(source, target, ac).chosen, test); break;
          case Method::TargetOnly:
            e = test_error(fit_atl(Dataset(Origin::SourceP, target.dim()), target, ac).chosen, test);
            break;
          case Method::BayesOracle: e = test_error(bayes_classifier(cfg.spec), test); break;
        }
        errors[(static_cast<std::size_t>(rep) * n_np + a) * n_m + b] = e;
      }
    }
  }

  ExperimentResult out;
  out.master_seed = cfg.master_seed;
  for (std::size_t a = 0; a < n_np; ++a) {
    for (std::size_t b = 0; b < n_m; ++b) {
      CellResult cell{cfg.setting, cfg.methods[b], cfg.n_p_list[a], {}, 0.0, 0.0, false};
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep)
        cell.errors.push_back(errors[(rep * n_np + a) * n_m + b]);
      std::tie(cell.mean_pct, cell.std_error_pct) = mean_and_se_pct(cell.errors);
      cell.degenerate = cell.method == Method::Pooled && cell.n_p == 0;
      out.cells.push_back(std::move(cell));
    }
  }
  out.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::optional<PublishedCell> published_table1(int setting, Method method, std::size_t n_p) {
  struct Row {
    double atl, atl_se, pooled, pooled_se;
  };
  static const std::map<std::pair<int, std::size_t>, Row> table{
      {{1, 0}, {30.0, 0.6, NAN, NAN}},      {{1, 100}, {27.4, 0.5, 29.1, 0.4}},
      {{1, 200}, {25.6, 0.4, 27.5, 0.5}},   {{1, 500}, {23.4, 0.5, 25.8, 0.4}},
      {{1, 1000}, {22.4, 0.4, 24.0, 0.3}},  {{2, 0}, {30.3, 0.5, NAN, NAN}},
      {{2, 100}, {28.5, 0.5, 29.4, 0.5}},   {{2, 200}, {26.7, 0.5, 29.0, 0.5}},
      {{2, 500}, {24.7, 0.4, 29.0, 0.5}},   {{2, 1000}, {24.2, 0.4, 27.6, 0.4}},
  };
  if (method != Method::Atl && method != Method::Pooled) return std::nullopt;
  const auto it = table.find({setting, n_p});
  if (it == table.end()) return std::nullopt;
  const Row& r = it->second;
  const double mean = method == Method::Atl ? r.atl : r.pooled;
  const double se = method == Method::Atl ? r.atl_se : r.pooled_se;
  if (std::isnan(mean)) return PublishedCell{};
  return PublishedCell{mean, se};
}

ExperimentConfig table1_config(int setting, std::uint64_t master_seed, std::size_t repetitions) {
  ExperimentConfig cfg;
  cfg.spec = setting_by_index(setting);
  cfg.setting = setting;
  cfg.repetitions = repetitions;
  cfg.master_seed = master_seed;
  cfg.atl.l_values = {0, 1, 2};
  cfg.atl.strategy = TreeSearchStrategy{MonteCarloSplits{100}, TauLeafMeanLocal{}};
  return cfg;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string results_csv(const std::vector<ExperimentResult>& results) {
  std::ostringstream os;
  os << "setting,method,n_P,mean_error_pct,std_error_pct\n";
  for (const auto& r : results)
    for (const auto& c : r.cells) {
      if (c.degenerate) continue;
      os << c.setting << ',' << method_name(c.method) << ',' << c.n_p << ',' << fixed(c.mean_pct, 4) << ','
         << fixed(c.std_error_pct, 4) << '\n';
    }
  return os.str();
}

std::string results_table(const std::vector<ExperimentResult>& results) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-9s %-8s %6s  %-14s %-14s\n", "setting", "method", "n_P", "reproduced",
                "published");
  os << line;
  auto cell_text = [](std::optional<double> m, std::optional<double> s) {
    if (!m || !s) return std::string("NA (NA)");
    return fixed(*m, 1) + " (" + fixed(*s, 1) + ")";
  };
  for (const auto& r : results)
    for (const auto& c : r.cells) {
      const std::string ours = c.degenerate ? "NA (NA)" : cell_text(c.mean_pct, c.std_error_pct);
      const auto pub = published_table1(c.setting, c.method, c.n_p);
      const std::string theirs = pub ? cell_text(pub->mean, pub->se) : "-";
      std::snprintf(line, sizeof line, "%-9d %-8s %6zu  %-14s %-14s\n", c.setting, method_name(c.method), c.n_p,
                    ours.c_str(), theirs.c_str());
      os << line;
    }
  return os.str();
}

Table1Files reproduce_table1(const std::filesystem::path& out_dir, std::uint64_t master_seed,
                             std::size_t repetitions) {
  Table1Files files;
  for (int s : {1, 2}) files.results.push_back(run_experiment(table1_config(s, master_seed, repetitions)));
  files.csv = out_dir / "table1.csv";
  files.table = out_dir / "table1.txt";
  files.runtime = out_dir / "runtime.json";
  write_text(results_csv(files.results), files.csv);
  write_text(results_table(files.results), files.table);
  Json rt{{"master_seed", master_seed}, {"repetitions", repetitions}, {"threads", worker_threads()}};
  for (const auto& r : files.results)
    rt["settings"].push_back({{"setting", r.cells.front().setting}, {"seconds", r.runtime_seconds}});
  write_json(rt, files.runtime);
  return files;
}

}  // namespace atl
