#include "atl/atl.hpp"
#include "atl/diagnostics.hpp"
#include "atl/distributions.hpp"
#include "atl/experiment.hpp"
#include "atl/io.hpp"
#include "atl/parallel.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include "CLI11.hpp"

using namespace atl;
namespace fs = std::filesystem;

namespace {

// JSON has no infinity; write it as a string.
Json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

Json checks_json(const std::vector<BoundCheck>& checks) {
  Json out = Json::array();
  for (const auto& c : checks)
    out.push_back({{"level", c.level}, {"estimate", c.estimate}, {"standard_error", c.standard_error},
                   {"bound", num(c.bound)}, {"pass", c.pass}});
  return out;
}

Json aterms_json(const ATerms& a) {
  return {{"source", num(a.source)}, {"partition", num(a.partition)}, {"mismatch", num(a.mismatch)},
          {"total", num(a.total())}};
}

void print(const Json& j) { std::cout << j.dump(2) << '\n'; }

struct SimulateArgs {
  std::string spec, which = "Q", out;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  const PairSpec spec = spec_from_json(read_json(a.spec));
  if (a.which != "P" && a.which != "Q") throw ValidationError("--which must be P or Q");
  const Which w = a.which == "P" ? Which::P : Which::Q;
  write_dataset(sample(spec, w, a.n, a.seed), a.out);
  return 0;
}

struct FitArgs {
  std::string source, target, config, model_out;
  bool pooled = false;
  bool exact_sigma = false;
};

int cmd_fit(const FitArgs& a) {
  AtlConfig cfg = a.config.empty() ? AtlConfig{} : config_from_json(read_json(a.config));
  const Dataset target = read_dataset(a.target, Origin::TargetQ);
  const Dataset source = a.source.empty() ? Dataset(Origin::SourceP, target.dim())
                                          : read_dataset(a.source, Origin::SourceP);
  if (a.exact_sigma) {
    if (source.size() > 100 || target.size() > 100)
      throw ValidationError("--exact-sigma-grid is limited to samples of at most 100 points");
    cfg.sigma_p.kind = cfg.sigma_q.kind = SigmaGridSpec::Kind::Exact;
  }
  const AtlModel model = a.pooled ? fit_pooled(source, target, cfg) : fit_atl(source, target, cfg);
  const ModelData data{a.source.empty() ? "" : fs::absolute(a.source).string(),
                       fs::absolute(a.target).string(), a.pooled};
  Json j = model_to_json(model, data);
  j["config"] = config_to_json(cfg);
  write_json(j, a.model_out);
  return 0;
}

struct EvaluateArgs {
  std::string model, spec, mode = "quad";
  std::size_t n = 100000;
  std::size_t resolution = 4096;
  std::uint64_t seed = 0;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const Json m = read_json(a.model);
  const PairSpec spec = spec_from_json(read_json(a.spec));
  const Json& data = m.at("data");
  const std::string tpath = data.at("target").get<std::string>();
  const std::string spath = data.value("source", std::string{});
  const Dataset target = read_dataset(tpath, Origin::TargetQ);
  const Dataset source = spath.empty() ? Dataset(Origin::SourceP, target.dim())
                                       : read_dataset(spath, Origin::SourceP);
  const Classifier f = classifier_from_model_json(m, source, target);
  RiskMode mode;
  if (a.mode == "mc") mode = MonteCarloRisk{a.n, a.seed};
  else if (a.mode == "quad") mode = QuadratureRisk{a.resolution};
  else throw ValidationError("--mode must be mc or quad");
  const RiskReport r = risk(f, spec, mode);
  const RiskReport bayes = risk(bayes_classifier(spec), spec, mode);
  print({{"mode", r.mode},
         {"classifier", f.kind()},
         {"test_error", r.test_error},
         {"excess_error", r.excess_error},
         {"standard_error", r.standard_error},
         {"evaluations", r.evaluations},
         {"bayes_error", bayes.test_error}});
  return 0;
}

struct ReproduceArgs {
  std::string out;
  std::uint64_t seed = 0;
  std::size_t reps = 50;
};

int cmd_reproduce(const ReproduceArgs& a) {
  const auto files = reproduce_table1(a.out, a.seed, a.reps);
  std::cout << results_table(files.results);
  return 0;
}

struct CheckArgs {
  std::string spec, theta;
  std::size_t mc_n = 10000;
  std::uint64_t seed = 0;
  std::vector<double> zetas{0.05, 0.1, 0.25, 0.4};
};

int cmd_check(const CheckArgs& a) {
  const PairSpec spec = spec_from_json(read_json(a.spec));
  const ParameterVector theta = theta_from_json(read_json(a.theta));

  TailOptions topt;
  topt.d_p = theta.d_p;
  topt.d_q = theta.d_q;
  topt.gamma_p = theta.gamma_p;
  topt.gamma_q = theta.gamma_q;
  topt.c_pq = theta.c_pq;
  topt.mc_n = a.mc_n;
  topt.seed = a.seed;
  const TailReport tail = check_tail_assumption(spec.marginal_p, spec.marginal_q, topt);
  const MarginReport margin = check_margin_assumption(spec, theta.alpha, theta.c_m, a.zetas, a.mc_n, a.seed + 1);
  const SmoothnessReport smooth = check_smoothness(spec, Which::Q, theta.beta, theta.c_s, a.mc_n, a.seed + 2);

  Json transfers = Json::array();
  bool transfer_pass = true;
  for (std::size_t l = 0; l < spec.transfers.size(); ++l) {
    const TransferReport t = check_transfer(spec.transfers[l], theta.phi);
    transfer_pass = transfer_pass && t.pass;
    transfers.push_back({{"cell", l}, {"min_slope", num(t.min_slope)}, {"phi", t.phi}, {"pass", t.pass}});
  }

  print({{"spec", spec.name},
         {"theta", theta_to_json(theta)},
         {"tail", {{"target", checks_json(tail.target)}, {"source", checks_json(tail.source)},
                   {"mc_n", tail.mc_n}, {"pass", tail.pass}}},
         {"margin", {{"checks", checks_json(margin.checks)}, {"mc_n", margin.mc_n}, {"pass", margin.pass}}},
         {"smoothness", {{"max_ratio", num(smooth.max_ratio)}, {"beta", smooth.beta}, {"c_s", smooth.c_s},
                         {"pairs", smooth.pairs}, {"pass", smooth.pass}}},
         {"transfer", {{"cells", transfers}, {"pass", transfer_pass}}},
         {"pass", tail.pass && margin.pass && smooth.pass && transfer_pass}});
  return 0;
}

struct RatesArgs {
  std::string theta;
  std::size_t np = 0, nq = 0;
  std::optional<double> delta;
};

int cmd_rates(const RatesArgs& a) {
  const ParameterVector theta = theta_from_json(read_json(a.theta));
  const RateBounds r = rate_bounds(theta, a.np, a.nq, a.delta);
  Json j{{"theta", theta_to_json(theta)},
         {"n_p", a.np},
         {"n_q", a.nq},
         {"lower", {{"a_terms", aterms_json(r.a_lower)}, {"A", num(r.A_lower)}, {"B", num(r.B_lower)},
                    {"rate", num(r.lower)}}},
         {"upper", {{"a_terms", aterms_json(r.a_upper)}, {"A", num(r.A_upper)}, {"B", num(r.B_upper)},
                    {"rate", num(r.upper)}}}};
  if (r.delta_bound) {
    j["high_probability"] = {{"delta", *a.delta},
                             {"a_terms", aterms_json(*r.a_delta)},
                             {"A", num(*r.A_delta)},
                             {"B", num(*r.B_delta)},
                             {"D", num(*r.D_delta)},
                             {"bound", num(*r.delta_bound)}};
  }
  print(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive transfer learning classifier, simulations and diagnostics"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (overrides ATL_THREADS)");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Draw a labelled sample from a pair specification");
  s->add_option("--spec", sim.spec, "PairSpec JSON")->required();
  s->add_option("--which", sim.which, "P or Q")->required();
  s->add_option("--n", sim.n, "Sample size")->required();
  s->add_option("--seed", sim.seed, "Seed");
  s->add_option("--out", sim.out, "Output CSV")->required();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit the ATL classifier");
  f->add_option("--source", fit.source, "Source sample CSV");
  f->add_option("--target", fit.target, "Target sample CSV")->required();
  f->add_option("--config", fit.config, "AtlConfig JSON");
  f->add_option("--model-out", fit.model_out, "Output model JSON")->required();
  f->add_flag("--pooled", fit.pooled, "Pool source and target and fit without a source sample");
  f->add_flag("--exact-sigma-grid", fit.exact_sigma, "Use every sigma in [n^2]/n (n <= 100)");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Test and excess error of a fitted model");
  e->add_option("--model", ev.model, "Model JSON")->required();
  e->add_option("--spec", ev.spec, "PairSpec JSON")->required();
  e->add_option("--mode", ev.mode, "mc or quad");
  e->add_option("--n", ev.n, "Monte Carlo draws");
  e->add_option("--resolution", ev.resolution, "Quadrature midpoints per axis");
  e->add_option("--seed", ev.seed, "Monte Carlo seed");

  ReproduceArgs rep;
  auto* r = app.add_subcommand("reproduce-table1", "Run the two-setting simulation study");
  r->add_option("--out", rep.out, "Output directory")->required();
  r->add_option("--seed", rep.seed, "Master seed");
  r->add_option("--reps", rep.reps, "Repetitions per cell");

  CheckArgs chk;
  auto* c = app.add_subcommand("check-assumptions", "Monte Carlo checks of the distributional assumptions");
  c->add_option("--spec", chk.spec, "PairSpec JSON")->required();
  c->add_option("--theta", chk.theta, "Parameter JSON")->required();
  c->add_option("--mc-n", chk.mc_n, "Monte Carlo draws");
  c->add_option("--seed", chk.seed, "Seed");
  c->add_option("--zeta", chk.zetas, "Margin levels");

  RatesArgs rates;
  double delta = 0.0;
  auto* rt = app.add_subcommand("rates", "Minimax rate expressions");
  rt->add_option("--theta", rates.theta, "Parameter JSON")->required();
  rt->add_option("--np", rates.np, "Source sample size")->required();
  rt->add_option("--nq", rates.nq, "Target sample size")->required();
  auto* dopt = rt->add_option("--delta", delta, "Confidence level in (0,1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (threads > 0) set_worker_threads(threads);
    if (s->parsed()) return cmd_simulate(sim);
    if (f->parsed()) return cmd_fit(fit);
    if (e->parsed()) return cmd_evaluate(ev);
    if (r->parsed()) return cmd_reproduce(rep);
    if (c->parsed()) return cmd_check(chk);
    if (rt->parsed()) {
      if (dopt->count() > 0) {
        if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("--delta must lie in (0,1)");
        rates.delta = delta;
      }
      return cmd_rates(rates);
    }
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const Json::exception& err) {
    std::cerr << "error: malformed input: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 1;
}
