#include "atl/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace atl {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return {buf, end};
}

namespace {

double parse_double(std::string_view s, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("line " + std::to_string(line) + ": not a number: \"" + std::string(s) + "\"");
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trimmed(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

fs::path manifest_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

void write_dataset(const Dataset& data, const fs::path& csv) {
  std::ostringstream os;
  for (std::size_t a = 0; a < data.dim(); ++a) os << 'x' << a + 1 << ',';
  os << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.point(i)) os << format_double(v) << ',';
    os << data.label(i) << '\n';
  }
  write_text(os.str(), csv);
  write_json(Json{{"origin", origin_name(data.origin())}, {"d", data.dim()}, {"n", data.size()}},
             manifest_path(csv));
}

Dataset read_dataset(const fs::path& csv, Origin fallback) {
  std::ifstream in(csv);
  if (!in) throw std::runtime_error("cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(csv.string() + ": missing header");
  const auto header = split_commas(trimmed(line));
  if (header.size() < 2 || header.back() != "label")
    throw ValidationError(csv.string() + ": header must be x1,...,xd,label");
  const std::size_t d = header.size() - 1;
  for (std::size_t a = 0; a < d; ++a)
    if (header[a] != "x" + std::to_string(a + 1))
      throw ValidationError(csv.string() + ": header must be x1,...,xd,label");

  Origin origin = fallback;
  std::optional<std::size_t> expected_n;
  const fs::path manifest = manifest_path(csv);
  if (fs::exists(manifest)) {
    const Json m = read_json(manifest);
    origin = parse_origin(m.at("origin").get<std::string>());
    if (m.at("d").get<std::size_t>() != d)
      throw ValidationError(csv.string() + ": manifest dimension disagrees with the header");
    if (m.contains("n")) expected_n = m.at("n").get<std::size_t>();
  }

  Dataset data(origin, d);
  std::vector<double> x(d);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trimmed(line);
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != d + 1)
      throw ValidationError(csv.string() + ": line " + std::to_string(lineno) + " has " +
                            std::to_string(fields.size()) + " fields, expected " + std::to_string(d + 1));
    for (std::size_t a = 0; a < d; ++a) x[a] = parse_double(fields[a], lineno);
    const double y = parse_double(fields[d], lineno);
    if (y != 0.0 && y != 1.0)
      throw ValidationError(csv.string() + ": line " + std::to_string(lineno) + ": label must be 0 or 1");
    data.push_back(x, static_cast<Label>(y));
  }
  if (expected_n && *expected_n != data.size())
    throw ValidationError(csv.string() + ": manifest row count disagrees with the file");
  return data;
}

// Specifications ------------------------------------------------------------------

namespace {

double number_or_inf(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw ValidationError("expected a number or \"inf\", got \"" + s + "\"");
  }
  return j.get<double>();
}

Json inf_or_number(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

template <class T>
T value_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

Json marginal_to_json(const MarginalSpec& m) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformCube>) {
          return {{"type", "uniform_cube"}, {"d", v.d}};
        } else if constexpr (std::is_same_v<T, LatticeMixture>) {
          return {{"type", "lattice_mixture"}, {"q", v.q}, {"r", v.r}, {"w", v.w}, {"d0", v.d0},
                  {"dq", v.dq}, {"dp", v.dp}, {"d", v.d}};
        } else if constexpr (std::is_same_v<T, GammaFamily>) {
          return {{"type", "gamma_family"}, {"gamma", v.gamma}};
        } else {
          return {{"type", "gaussian"}, {"sigma", v.sigma}};
        }
      },
      m);
}

MarginalSpec marginal_from_json(const Json& j) {
  const auto type = j.at("type").get<std::string>();
  MarginalSpec m;
  if (type == "uniform_cube") {
    m = UniformCube{value_or<std::size_t>(j, "d", 2)};
  } else if (type == "lattice_mixture") {
    m = LatticeMixture{j.at("q").get<std::size_t>(), j.at("r").get<double>(), j.at("w").get<double>(),
                       j.at("d0").get<std::size_t>(), j.at("dq").get<std::size_t>(),
                       j.at("dp").get<std::size_t>(), j.at("d").get<std::size_t>()};
  } else if (type == "gamma_family") {
    m = GammaFamily{j.at("gamma").get<double>()};
  } else if (type == "gaussian") {
    m = GaussianScale{value_or<double>(j, "sigma", 1.0)};
  } else {
    throw ValidationError("unknown marginal type \"" + type + "\"");
  }
  validate_marginal(m);
  return m;
}

namespace {

Json regression_to_json(const RegressionSpec& r) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Sinusoid>) {
          return {{"type", "sinusoid"}};
        } else if constexpr (std::is_same_v<T, LatticeEta>) {
          return {{"type", "lattice_eta"}, {"eps", v.eps}, {"q", v.q}, {"r", v.r}, {"beta", v.beta},
                  {"dq", v.dq}, {"dp", v.dp}, {"d", v.d}, {"signs", v.signs}};
        } else {
          return {{"type", "constant"}, {"value", v.value}};
        }
      },
      r);
}

RegressionSpec regression_from_json(const Json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "sinusoid") return Sinusoid{};
  if (type == "constant") return ConstantEta{j.at("value").get<double>()};
  if (type == "lattice_eta")
    return LatticeEta{j.at("eps").get<double>(), j.at("q").get<std::size_t>(), j.at("r").get<double>(),
                      j.at("beta").get<double>(), j.at("dq").get<std::size_t>(),
                      j.at("dp").get<std::size_t>(), j.at("d").get<std::size_t>(),
                      j.at("signs").get<std::vector<int>>()};
  throw ValidationError("unknown regression function type \"" + type + "\"");
}

}  // namespace

Json transfer_to_json(const TransferMapSpec& g) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IdentityMap>) return {{"type", "identity"}};
        else if constexpr (std::is_same_v<T, AffineMap>) return {{"type", "affine"}, {"a", v.a}, {"b", v.b}};
        else if constexpr (std::is_same_v<T, ShiftDown>) return {{"type", "shift_down"}};
        else if constexpr (std::is_same_v<T, ShiftUp>) return {{"type", "shift_up"}};
        else if constexpr (std::is_same_v<T, LowerBoundH>) return {{"type", "lower_bound_h"}, {"eps", v.eps}};
        else return {{"type", "plateau_h"}, {"phi", v.phi}, {"delta", v.delta}};
      },
      g);
}

TransferMapSpec transfer_from_json(const Json& j) {
  const auto type = j.at("type").get<std::string>();
  TransferMapSpec g;
  if (type == "identity") g = IdentityMap{};
  else if (type == "affine") g = AffineMap{j.at("a").get<double>(), j.at("b").get<double>()};
  else if (type == "shift_down") g = ShiftDown{};
  else if (type == "shift_up") g = ShiftUp{};
  else if (type == "lower_bound_h") g = LowerBoundH{j.at("eps").get<double>()};
  else if (type == "plateau_h") g = PlateauH{j.at("phi").get<double>(), j.at("delta").get<double>()};
  else throw ValidationError("unknown transfer type \"" + type + "\"");
  validate_transfer(g);
  return g;
}

Json partition_to_json(const TreePartition& p) {
  Json steps = Json::array();
  for (const auto& s : p.steps()) steps.push_back({{"leaf", s.leaf}, {"axis", s.axis}, {"threshold", s.threshold}});
  return {{"d", p.dim()}, {"steps", steps}};
}

TreePartition partition_from_json(const Json& j) {
  std::vector<SplitStep> steps;
  if (j.contains("steps"))
    for (const auto& s : j.at("steps"))
      steps.push_back({s.at("leaf").get<std::size_t>(), s.at("axis").get<std::size_t>(),
                       s.at("threshold").get<double>()});
  return TreePartition(j.at("d").get<std::size_t>(), std::move(steps));
}

Json spec_to_json(const PairSpec& spec) {
  Json transfers = Json::array();
  for (const auto& g : spec.transfers) transfers.push_back(transfer_to_json(g));
  return {{"name", spec.name},
          {"marginal_p", marginal_to_json(spec.marginal_p)},
          {"marginal_q", marginal_to_json(spec.marginal_q)},
          {"eta_q", regression_to_json(spec.eta_q)},
          {"partition", partition_to_json(spec.partition)},
          {"transfers", transfers}};
}

PairSpec spec_from_json(const Json& j) {
  if (j.contains("preset")) {
    const auto name = j.at("preset").get<std::string>();
    if (name == "setting1") return setting1();
    if (name == "setting2") return setting2();
    throw ValidationError("unknown preset \"" + name + "\"");
  }
  std::vector<TransferMapSpec> transfers;
  for (const auto& g : j.at("transfers")) transfers.push_back(transfer_from_json(g));
  PairSpec spec{value_or<std::string>(j, "name", "custom"),
                marginal_from_json(j.at("marginal_p")),
                marginal_from_json(j.at("marginal_q")),
                regression_from_json(j.at("eta_q")),
                partition_from_json(j.at("partition")),
                std::move(transfers)};
  spec.validate();
  return spec;
}

Json theta_to_json(const ParameterVector& t) {
  return {{"delta", t.delta},   {"phi", t.phi},     {"l_star", t.l_star},
          {"d", t.d},           {"d_q", t.d_q},     {"gamma_q", inf_or_number(t.gamma_q)},
          {"d_p", t.d_p},       {"gamma_p", inf_or_number(t.gamma_p)},
          {"c_pq", t.c_pq},     {"alpha", t.alpha}, {"c_m", t.c_m},
          {"beta", t.beta},     {"c_s", t.c_s}};
}

ParameterVector theta_from_json(const Json& j) {
  ParameterVector t;
  if (j.contains("delta")) t.delta = j.at("delta").get<double>();
  if (j.contains("phi")) t.phi = j.at("phi").get<double>();
  if (j.contains("l_star")) t.l_star = j.at("l_star").get<std::size_t>();
  if (j.contains("d")) t.d = j.at("d").get<std::size_t>();
  if (j.contains("d_q")) t.d_q = j.at("d_q").get<double>();
  if (j.contains("gamma_q")) t.gamma_q = number_or_inf(j.at("gamma_q"));
  if (j.contains("d_p")) t.d_p = j.at("d_p").get<double>();
  if (j.contains("gamma_p")) t.gamma_p = number_or_inf(j.at("gamma_p"));
  if (j.contains("c_pq")) t.c_pq = j.at("c_pq").get<double>();
  if (j.contains("alpha")) t.alpha = j.at("alpha").get<double>();
  if (j.contains("c_m")) t.c_m = j.at("c_m").get<double>();
  if (j.contains("beta")) t.beta = j.at("beta").get<double>();
  if (j.contains("c_s")) t.c_s = j.at("c_s").get<double>();
  t.validate();
  return t;
}

namespace {

Json grid_to_json(const SigmaGridSpec& g) {
  if (g.kind == SigmaGridSpec::Kind::Exact) return {{"kind", "exact"}};
  return {{"kind", "geometric"}, {"points", g.points}};
}

SigmaGridSpec grid_from_json(const Json& j) {
  SigmaGridSpec g;
  const auto kind = value_or<std::string>(j, "kind", "geometric");
  if (kind == "exact") g.kind = SigmaGridSpec::Kind::Exact;
  else if (kind == "geometric") g.points = value_or<std::size_t>(j, "points", g.points);
  else throw ValidationError("sigma grid kind must be \"geometric\" or \"exact\"");
  return g;
}

}  // namespace

Json config_to_json(const AtlConfig& cfg) {
  Json mode = std::visit(
      [](const auto& m) -> Json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ExhaustiveRestricted>) return {{"mode", "exhaustive"}};
        else if constexpr (std::is_same_v<T, MonteCarloSplits>)
          return {{"mode", "monte_carlo"}, {"num_splits", m.num_splits}};
        else
          return {{"mode", "greedy"}, {"thresholds_per_axis", m.thresholds_per_axis}};
      },
      cfg.strategy.mode);
  mode["tau"] = std::visit(
      [](const auto& t) -> Json {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, TauGridSearch>) return {{"mode", "grid"}, {"grid_size", t.grid_size}};
        else return {{"mode", "leaf_mean_local"}, {"radius", t.radius}, {"grid_size", t.grid_size}};
      },
      cfg.strategy.tau);
  return {{"sigma_p", grid_to_json(cfg.sigma_p)},
          {"sigma_q", grid_to_json(cfg.sigma_q)},
          {"l_values", cfg.l_values},
          {"strategy", mode},
          {"seed", cfg.seed},
          {"max_family", cfg.max_family}};
}

AtlConfig config_from_json(const Json& j) {
  AtlConfig cfg;
  if (j.contains("sigma_p")) cfg.sigma_p = grid_from_json(j.at("sigma_p"));
  if (j.contains("sigma_q")) cfg.sigma_q = grid_from_json(j.at("sigma_q"));
  if (j.contains("l_values")) cfg.l_values = j.at("l_values").get<std::vector<std::size_t>>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("max_family")) cfg.max_family = j.at("max_family").get<std::size_t>();
  if (j.contains("strategy")) {
    const Json& s = j.at("strategy");
    const auto mode = value_or<std::string>(s, "mode", "monte_carlo");
    if (mode == "exhaustive") cfg.strategy.mode = ExhaustiveRestricted{};
    else if (mode == "monte_carlo") cfg.strategy.mode = MonteCarloSplits{value_or<std::size_t>(s, "num_splits", 100)};
    else if (mode == "greedy") cfg.strategy.mode = GreedyGrowth{2, value_or<std::size_t>(s, "thresholds_per_axis", 0)};
    else throw ValidationError("strategy mode must be exhaustive, monte_carlo or greedy");
    if (s.contains("tau")) {
      const Json& t = s.at("tau");
      const auto tmode = value_or<std::string>(t, "mode", "leaf_mean_local");
      if (tmode == "grid") cfg.strategy.tau = TauGridSearch{value_or<std::size_t>(t, "grid_size", 0)};
      else if (tmode == "leaf_mean_local")
        cfg.strategy.tau = TauLeafMeanLocal{value_or<double>(t, "radius", 0.1), value_or<std::size_t>(t, "grid_size", 5)};
      else throw ValidationError("tau mode must be grid or leaf_mean_local");
    }
  }
  cfg.validate();
  return cfg;
}

// Models ----------------------------------------------------------------------

Json tree_to_json(const TreeFunction& h) {
  Json j = partition_to_json(h.partition());
  j["taus"] = h.taus();
  if (h.grid_n()) j["grid_n"] = *h.grid_n();
  return j;
}

TreeFunction tree_from_json(const Json& j) {
  std::optional<std::size_t> grid_n;
  if (j.contains("grid_n")) grid_n = j.at("grid_n").get<std::size_t>();
  return TreeFunction(partition_from_json(j), j.at("taus").get<std::vector<double>>(), grid_n);
}

Json model_to_json(const AtlModel& model, const ModelData& data) {
  Json chosen = std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SourceCalibrated>)
          return {{"variant", "source_calibrated"}, {"sigma", v.sigma}, {"tree", tree_to_json(v.tree)},
                  {"reference", "source"}};
        else if constexpr (std::is_same_v<T, TargetKnn>)
          return {{"variant", "target_knn"}, {"sigma", v.sigma}, {"reference", "target_calibration"}};
        else if constexpr (std::is_same_v<T, ConstantClassifier>)
          return {{"variant", "constant"}, {"label", v.label}};
        else
          throw ValidationError("an oracle classifier cannot be exported");
      },
      model.chosen.variant());
  Json candidates = Json::array();
  for (const auto& c : model.candidates)
    candidates.push_back({{"family", c.family == Family::Source ? "P" : "Q"},
                          {"leaves", c.leaves},
                          {"sigma", c.sigma},
                          {"holdout_errors", c.holdout_errors}});
  return {{"format", "atl-model-1"},
          {"chosen", chosen},
          {"chosen_index", model.chosen_index},
          {"split_index", model.split_index},
          {"candidates", candidates},
          {"data", {{"source", data.source_path}, {"target", data.target_path}, {"pooled", data.pooled}}}};
}

Classifier classifier_from_model_json(const Json& j, const Dataset& source, const Dataset& target) {
  if (value_or<std::string>(j, "format", "") != "atl-model-1")
    throw ValidationError("not an atl-model-1 document");
  const Json& c = j.at("chosen");
  const auto variant = c.at("variant").get<std::string>();
  const std::size_t split = j.at("split_index").get<std::size_t>();
  const bool pooled = j.at("data").value("pooled", false);

  if (variant == "constant") return Classifier::constant(c.at("label").get<Label>());
  if (variant == "target_knn") {
    Dataset ref = pooled && !source.empty() ? concat(source, target, Origin::TargetQ)
                                            : target.with_origin(Origin::TargetQ);
    if (split > ref.size()) throw ValidationError("model split index exceeds the target sample size");
    return Classifier::target_knn(c.at("sigma").get<double>(),
                                  std::make_shared<const Dataset>(ref.prefix(split)));
  }
  if (variant == "source_calibrated") {
    if (source.empty()) throw ValidationError("the model needs its source sample");
    return Classifier::source_calibrated(c.at("sigma").get<double>(), tree_from_json(c.at("tree")),
                                         std::make_shared<const Dataset>(source.with_origin(Origin::SourceP)));
  }
  throw ValidationError("unknown classifier variant \"" + variant + "\"");
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json(const Json& j, const fs::path& path) { write_text(j.dump(2) + "\n", path); }

void write_text(const std::string& text, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace atl
