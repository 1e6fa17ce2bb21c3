// Acceptance driver: one PASS/FAIL line per criterion.
//   atl_acceptance --cli PATH --workdir DIR [--seed S] [--reps R] [--determinism-reps R]

#include "atl/diagnostics.hpp"
#include "atl/distributions.hpp"
#include "atl/experiment.hpp"
#include "atl/neighbours.hpp"
#include "atl/rng.hpp"
#include "atl/tree_search.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

using namespace atl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failures; the first few are kept for the report line.
class Tally {
public:
  void check(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string& summary) const {
    std::string d = summary + " (" + std::to_string(checks_ - failures_) + "/" + std::to_string(checks_) + " checks)";
    if (failures_ > 0) d += " failures: " + notes_;
    return {failures_ == 0, d};
  }

private:
  std::size_t checks_ = 0, failures_ = 0;
  std::string notes_;
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_table(const std::string& cli, const fs::path& out, std::uint64_t seed, std::size_t reps, int threads) {
  std::string cmd;
  if (threads > 0) cmd = "ATL_THREADS=" + std::to_string(threads) + " ";
  cmd += "\"" + cli + "\" reproduce-table1 --out \"" + out.string() + "\" --seed " + std::to_string(seed) +
         " --reps " + std::to_string(reps) + " > \"" + (out.string() + ".log") + "\" 2>&1";
  fs::create_directories(out.parent_path());
  return std::system(cmd.c_str());
}

struct Row {
  double mean, se;
};
using Table = std::map<std::tuple<int, std::string, std::size_t>, Row>;

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string setting, method, np, mean, se;
    std::getline(ls, setting, ',');
    std::getline(ls, method, ',');
    std::getline(ls, np, ',');
    std::getline(ls, mean, ',');
    std::getline(ls, se, ',');
    t[{std::stoi(setting), method, std::stoul(np)}] = {std::stod(mean), std::stod(se)};
  }
  return t;
}

const std::vector<std::size_t> kNp{0, 100, 200, 500, 1000};

Outcome criterion1(const Table& t) {
  Tally tally;
  double worst = 0.0;
  for (int s : {1, 2})
    for (Method m : {Method::Atl, Method::Pooled})
      for (std::size_t np : kNp) {
        const auto pub = published_table1(s, m, np);
        if (!pub || !pub->mean) continue;  // NA cell
        const auto it = t.find({s, method_name(m), np});
        const std::string cell = "S" + std::to_string(s) + " " + method_name(m) + " n_P=" + std::to_string(np);
        if (it == t.end()) {
          tally.check(false, cell + " missing");
          continue;
        }
        const double tol = std::max(1.5, 3.0 * std::hypot(it->second.se, *pub->se));
        const double gap = std::abs(it->second.mean - *pub->mean);
        worst = std::max(worst, gap / tol);
        tally.check(gap <= tol, cell + ": " + fmt(it->second.mean, 2) + " vs " + fmt(*pub->mean, 1) +
                                    " (tol " + fmt(tol, 2) + ")");
      }
  return tally.outcome("worst gap/tolerance " + fmt(worst, 2));
}

Outcome criterion2() {
  const PairSpec s1 = setting1();
  const auto r = risk(bayes_classifier(s1), s1, QuadratureRisk{});
  const double exact = 0.5 - 1.0 / std::numbers::pi;
  const double err = std::abs(r.test_error - exact);
  return {err < 1e-4, "quadrature Bayes risk " + fmt(r.test_error, 6) + ", |diff| " + std::to_string(err)};
}

Outcome criterion3(const Table& t) {
  Tally tally;
  for (int s : {1, 2}) {
    for (std::size_t i = 1; i < kNp.size(); ++i) {
      const auto a = t.find({s, "ATL", kNp[i - 1]}), b = t.find({s, "ATL", kNp[i]});
      if (a == t.end() || b == t.end()) {
        tally.check(false, "missing ATL cell");
        continue;
      }
      const double slack = 3.0 * std::hypot(a->second.se, b->second.se);
      tally.check(b->second.mean < a->second.mean + slack,
                  "S" + std::to_string(s) + " ATL n_P " + std::to_string(kNp[i]) + " not below " +
                      std::to_string(kNp[i - 1]));
    }
    for (std::size_t np : kNp) {
      if (np < 100) continue;
      const auto a = t.find({s, "ATL", np}), p = t.find({s, "pooled", np});
      if (a == t.end() || p == t.end()) {
        tally.check(false, "missing cell");
        continue;
      }
      const double slack = 3.0 * std::hypot(a->second.se, p->second.se);
      tally.check(a->second.mean <= p->second.mean + slack,
                  "S" + std::to_string(s) + " n_P=" + std::to_string(np) + " ATL above pooled");
    }
  }
  return tally.outcome("ATL decreasing in n_P and ATL <= pooled");
}

Outcome criterion4() {
  Tally tally;
  std::mt19937_64 rng(2024);
  const auto start = std::chrono::steady_clock::now();
  std::size_t max_count = 0;
  for (std::size_t n = 1; n <= 6; ++n)
    for (std::size_t d = 1; d <= 2; ++d)
      for (std::size_t leaves = 1; leaves <= 3; ++leaves) {
        Dataset pts(Origin::SourceP, d);
        std::vector<double> x(d);
        for (std::size_t i = 0; i < n; ++i) {
          for (auto& v : x) v = uniform01(rng);
          pts.push_back(x, 0);
        }
        const auto trees = enumerate_restricted_trees(pts, leaves, n);
        const std::size_t count = count_distinct_restrictions(trees, pts);
        max_count = std::max(max_count, count);
        tally.check(static_cast<double>(count) <= restriction_count_bound(leaves, d, n),
                    "n=" + std::to_string(n) + " d=" + std::to_string(d) + " L=" + std::to_string(leaves));
      }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return tally.outcome("largest count " + std::to_string(max_count) + ", " + fmt(secs, 2) + " s");
}

Outcome criterion5() {
  Tally tally;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<double> res(n);
    for (auto& r : res) r = static_cast<double>(rng() & 1U) - uniform01(rng);
    std::size_t prev = 0;
    for (int g = -8; g <= 8; ++g) {
      const std::size_t k = lepski_k(res, std::pow(2.0, g));
      tally.check(k >= prev && k >= 1 && k <= n, "monotonicity");
      prev = k;
    }
    tally.check(lepski_k(res, static_cast<double>(n)) == n, "k = n at sigma = n");
  }
  const std::vector<double> halves(10, 0.5);
  tally.check(lepski_k(halves, 0.1) == 1, "empty admissible set");
  const Dataset ones(Origin::SourceP, 1, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, std::vector<Label>(10, 1));
  const auto order = neighbour_order(ones, std::vector<double>{0.0});
  const std::size_t k = lepski_k_source(ones, order, TreeFunction::constant_half(1), 1.0);
  tally.check(k == 5, "all-ones example gave " + std::to_string(k));
  return tally.outcome("all-ones, sigma=1, n=10 gives " + std::to_string(k));
}

Outcome criterion6() {
  Tally tally;
  std::mt19937_64 rng(6);
  auto random_data = [&](std::size_t n, std::size_t d, Origin o) {
    Dataset data(o, d);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : x) v = uniform01(rng);
      data.push_back(x, static_cast<Label>(rng() & 1U));
    }
    return data;
  };
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset hold = random_data(40, 2, Origin::TargetQ);
    auto ref = std::make_shared<const Dataset>(random_data(20, 2, Origin::TargetQ));
    std::vector<Classifier> fam;
    for (int c = 0; c < 6; ++c) {
      switch (rng() % 3) {
        case 0: fam.push_back(Classifier::constant(static_cast<Label>(rng() & 1U))); break;
        case 1: fam.push_back(Classifier::target_knn(0.1 + 0.3 * static_cast<double>(rng() % 10), ref)); break;
        default: {
          const double t = static_cast<double>(rng() % 20) / 20.0;
          fam.push_back(Classifier::oracle("t", [t](std::span<const double> x) { return x[0] >= t ? 1 : 0; }));
        }
      }
    }
    if (trial % 10 == 0) fam.push_back(fam.front());  // a guaranteed tie
    std::size_t best = 0;
    int best_e = 1 << 30;
    std::vector<int> errs;
    for (std::size_t c = 0; c < fam.size(); ++c) {
      int e = 0;
      for (std::size_t i = 0; i < hold.size(); ++i) e += fam[c].classify(hold.point(i)) != hold.label(i);
      errs.push_back(e);
      if (e < best_e) best_e = e, best = c;
    }
    const auto sel = erm_select_classifier(fam, hold);
    tally.check(sel.index == best, "brute-force index");
    for (int e : errs) tally.check(sel.errors <= e, "not minimal");
    for (std::size_t c = 0; c < sel.index; ++c) tally.check(errs[c] > sel.errors, "tie not to lowest index");
  }
  return tally.outcome("100 random families");
}

Outcome criterion7() {
  Tally tally;
  // Total mass and atom count.
  for (std::size_t q : {2, 3, 5})
    for (double r : {0.3, 0.8})
      for (std::size_t dq : {1, 2})
        for (std::size_t dp : {dq, dq + 1}) {
          const LatticeGeometry g(q, r, dq, dp, dp);
          const double lev = std::min(std::ceil(static_cast<double>(q) / (r * g.kappa_p)), static_cast<double>(q));
          const double expect = std::pow(static_cast<double>(q), static_cast<double>(dq)) *
                                std::pow(lev, static_cast<double>(dp - dq));
          tally.check(static_cast<double>(g.atoms(dp)) == expect, "atom count");
          for (double w : {0.0, 0.25, 0.5}) {
            const LatticeMixture m{q, r, w, dp, dq, dp, dp};
            const std::vector<double> origin(dp, 0.0);
            tally.check(std::abs(ball_mass(m, origin, 10.0) - 1.0) < 1e-12, "total mass");
          }
        }

  // Sampler frequencies at n = 1e5.
  {
    const LatticeMixture m{3, 0.5, 0.4, 1, 1, 1, 1};
    const LatticeGeometry g(3, 0.5, 1, 1, 1);
    const std::size_t n = 100000, atoms = g.atoms(1);
    std::mt19937_64 rng(7);
    std::vector<std::size_t> counts(atoms + 1, 0);
    std::vector<double> x(1);
    for (std::size_t i = 0; i < n; ++i) {
      draw_point(m, rng, x);
      if (g.in_cube(x)) ++counts[atoms];
      else if (auto t = g.atom_index(x, 1)) ++counts[*t];
    }
    auto within = [&](std::size_t c, double p) {
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
      return std::abs(static_cast<double>(c) / static_cast<double>(n) - p) <= 3.0 * se;
    };
    tally.check(within(counts[atoms], 0.6), "cube frequency");
    for (std::size_t t = 0; t < atoms; ++t) tally.check(within(counts[t], 0.4 / static_cast<double>(atoms)), "atom frequency");
  }

  // Lower-density bounds at every grid radius.
  for (std::size_t dq : {1, 2}) {
    const std::size_t q = 3, dp = 2, d = 2;
    for (double r : {0.4, 0.9}) {
      const LatticeGeometry g(q, r, dq, dp, d);
      for (std::size_t d0 : {dq, dp})
        for (double w : {0.1, 0.3, 0.5}) {
          const LatticeMixture m{q, r, w, d0, dq, dp, d};
          const double dd0 = static_cast<double>(d0);
          std::mt19937_64 rng(11);
          for (int i = 0; i < 20; ++i) {
            std::vector<double> x(d, 0.0);
            for (std::size_t j = 0; j < dq; ++j) x[j] = g.cube_lo() + (g.cube_hi() - g.cube_lo()) * uniform01(rng);
            for (double v : lower_density_profile(m, x, dd0, 256).ratios) tally.check(v >= 1.0 - w - 1e-9, "cube bound");
          }
          const double bound =
              std::pow(2.0, -3.0 * dd0) *
              std::min(1.0, w * std::pow(static_cast<double>(q), dd0) /
                                (static_cast<double>(g.atoms(d0)) * std::pow(r, dd0)));
          for (std::size_t t = 0; t < g.base_atoms; ++t)
            for (double v : lower_density_profile(m, g.atom(t, dq), dd0, 256).ratios)
              tally.check(v >= bound - 1e-12, "lattice bound");
        }
    }
  }

  // 1-Hoelder regression function on sampled support pairs.
  for (std::size_t dq : {1, 2}) {
    AssouadParams p;
    p.q = 3;
    p.r = 0.8;
    p.dq = dq;
    p.dp = 2;
    p.d = 2;
    p.w_p = p.w_q = 0.5;
    const LatticeGeometry g(p.q, p.r, p.dq, p.dp, p.d);
    p.eps_q = std::min(0.125, g.spacing / 6.0);
    const AssouadFamily fam(p);
    for (std::size_t idx : {std::size_t{0}, fam.size() - 1, fam.size() / 3}) {
      const auto rep = check_smoothness(fam.member(idx), Which::Q, 1.0, 1.0, 1000, 13 + idx);
      tally.check(rep.pass, "Hoelder ratio " + fmt(rep.max_ratio));
    }
  }

  // Transfer map slope.
  for (double e : {0.0, 0.01, 0.05, 0.1, 0.125}) {
    const auto rep = check_transfer(LowerBoundH{e}, 1.0 - 4.0 * e, 1000);
    tally.check(rep.pass, "LowerBoundH slope " + fmt(rep.min_slope));
  }
  return tally.outcome("mass identity, sampler, lower density, Hoelder, slope");
}

Outcome criterion8() {
  Tally tally;
  std::string notes;
  for (double gamma : {0.5, 1.0, 2.0}) {
    TailOptions opt;
    opt.gamma_p = opt.gamma_q = gamma;
    opt.c_pq = std::max(2.0 / std::pow(gamma, gamma), std::pow(2.0, gamma));
    opt.xi_grid = {0.05, 0.1, 0.2, 0.4};
    opt.mc_n = 20000;
    opt.seed = 31;
    const auto rep = check_tail_assumption(GammaFamily{gamma}, GammaFamily{gamma}, opt);
    for (const auto& c : rep.target)
      tally.check(c.pass, "gamma=" + fmt(gamma, 1) + " xi=" + fmt(c.level, 2) + ": " + fmt(c.estimate, 4) +
                              " > " + fmt(c.bound, 4));
  }
  const auto m = check_margin_assumption(setting1(), 1.0, 1.0, {0.25}, 100000, 37);
  const auto& c = m.checks.front();
  tally.check(std::abs(c.estimate - 1.0 / 3.0) <= 3.0 * c.standard_error, "margin mass " + fmt(c.estimate, 4));
  return tally.outcome("gamma-family tails; margin mass at 0.25 = " + fmt(c.estimate, 4) + " (SE " +
                       fmt(c.standard_error, 4) + ")");
}

Outcome criterion9(const std::string& cli, const fs::path& work, std::uint64_t seed, std::size_t reps) {
  Tally tally;
  std::vector<std::string> csvs;
  for (int threads : {1, 2, 8}) {
    const fs::path out = work / ("determinism_t" + std::to_string(threads));
    const int rc = run_table(cli, out, seed, reps, threads);
    tally.check(rc == 0, "CLI exit status " + std::to_string(rc) + " at " + std::to_string(threads) + " threads");
    csvs.push_back(read_file(out / "table1.csv"));
  }
  tally.check(!csvs[0].empty(), "empty CSV");
  tally.check(csvs[0] == csvs[1], "1 vs 2 threads differ");
  tally.check(csvs[0] == csvs[2], "1 vs 8 threads differ");
  return tally.outcome(std::to_string(reps) + " repetitions per cell, threads 1/2/8");
}

Outcome criterion10() {
  Tally tally;
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
  ParameterVector t;
  t.d = 2;
  t.d_p = t.d_q = 2.0;
  t.gamma_p = t.gamma_q = 1.0;
  t.alpha = t.beta = 1.0;
  t.delta = 0.0;
  t.phi = 1.0;
  t.l_star = 1;
  const double e = rate_exponent(1.0, 1.0, 1.0, 2.0);
  tally.check(close(e, 0.4), "exponent");
  const auto r = rate_bounds(t, 10000, 100);
  tally.check(close(r.a_lower.source, std::pow(1e-4, e)), "A^L source term");
  tally.check(close(r.B_lower, std::pow(1e-2, e)), "B^L");
  tally.check(r.a_lower.mismatch == 0.0, "Delta = 0 term");
  tally.check(r.a_lower.partition == 0.0, "phi = 1 term");
  tally.check(r.A_lower < r.B_lower, "A^L < B^L");
  tally.check(close(r.lower, r.A_lower), "lower = min");
  tally.check(close(r.a_upper.source, std::pow(std::log(1e4) / 1e4, e)), "A^U source term");
  tally.check(close(r.B_upper, std::pow(std::log(100.0) / 100.0, e)), "B^U");

  t.phi = 0.5;
  t.delta = 0.2;
  const auto r2 = rate_bounds(t, 1000, 50);
  tally.check(close(r2.a_lower.mismatch, 0.16), "mismatch term");
  tally.check(close(r2.a_lower.partition, std::min(std::pow(1.0 / 50.0, 2.0 / 3.0), 0.25)), "partition term");
  tally.check(close(r2.a_lower.source, std::pow(1.0 / 250.0, e)), "phi-scaled source term");

  tally.check(close(rate_exponent(1.0, std::numeric_limits<double>::infinity(), 1.0, 2.0), 0.5), "gamma = inf");
  const auto hp = rate_bounds(t, 10000, 100, 0.05);
  tally.check(close(*hp.D_delta, std::pow(std::log(10100.0 / 0.05) / 100.0, 2.0 / 3.0)), "D_delta");
  tally.check(close(*hp.B_delta, std::pow(std::log(100.0 / 0.05) / 100.0, e)), "B_delta");
  return tally.outcome("exponent beta*gamma*(1+alpha)/(gamma*(2beta+d)+alpha*beta) = " + fmt(e, 4) +
                       " for gamma=1, d=2, alpha=beta=1");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ATL acceptance criteria"};
  std::string cli;
  std::string workdir = "acceptance_runs";
  std::uint64_t seed = 20240601;
  std::size_t reps = 50;
  std::size_t det_reps = 3;
  app.add_option("--cli", cli, "Path to the atl executable")->required();
  app.add_option("--workdir", workdir, "Scratch directory");
  app.add_option("--seed", seed, "Master seed for the table run");
  app.add_option("--reps", reps, "Repetitions for the table run");
  app.add_option("--determinism-reps", det_reps, "Repetitions for the thread-count comparison");
  CLI11_PARSE(app, argc, argv);

  const fs::path work(workdir);
  fs::create_directories(work);

  const fs::path full = work / "table1";
  const auto start = std::chrono::steady_clock::now();
  const int rc = run_table(cli, full, seed, reps, 0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const Table table = rc == 0 ? parse_csv(read_file(full / "table1.csv")) : Table{};
  std::cout << "table run: " << reps << " repetitions, " << fmt(secs, 1) << " s, exit " << rc << "\n";
  if (rc == 0) std::cout << read_file(full / "table1.txt");

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Table 1 reproduction", [&] { return criterion1(table); }},
      {"Bayes risk", criterion2},
      {"Ordering claims", [&] { return criterion3(table); }},
      {"Tree counting bound", criterion4},
      {"Lepski properties", criterion5},
      {"ERM properties", criterion6},
      {"Lower-bound construction", criterion7},
      {"Assumption checkers", criterion8},
      {"Determinism", [&] { return criterion9(cli, work, seed, det_reps); }},
      {"Rate calculator", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << "criterion " << (i + 1) << " [" << criteria[i].first << "]: " << (o.pass ? "PASS" : "FAIL") << " - "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
