#pragma once

#include "atl/atl.hpp"
#include "atl/core.hpp"
#include "atl/distributions.hpp"

#include <filesystem>
#include <string>

#include "json.hpp"

namespace atl {

using Json = nlohmann::json;

// Datasets: CSV with header x1,...,xd,label plus a manifest {"origin","d","n"} stored
// next to it with the extension replaced by .json.

std::filesystem::path manifest_path(const std::filesystem::path& csv);
void write_dataset(const Dataset& data, const std::filesystem::path& csv);
/// Reads the manifest when present; otherwise the dimension comes from the header and
/// the origin from `fallback`.
Dataset read_dataset(const std::filesystem::path& csv, Origin fallback = Origin::TargetQ);

std::string format_double(double v);

// Specifications ------------------------------------------------------------------

Json marginal_to_json(const MarginalSpec& m);
MarginalSpec marginal_from_json(const Json& j);
Json transfer_to_json(const TransferMapSpec& g);
TransferMapSpec transfer_from_json(const Json& j);
Json partition_to_json(const TreePartition& p);
TreePartition partition_from_json(const Json& j);
Json spec_to_json(const PairSpec& spec);
/// Accepts a full description or {"preset": "setting1" | "setting2"}.
PairSpec spec_from_json(const Json& j);

Json theta_to_json(const ParameterVector& theta);
/// Infinite exponents may be written as the string "inf".
ParameterVector theta_from_json(const Json& j);

Json config_to_json(const AtlConfig& cfg);
AtlConfig config_from_json(const Json& j);

// Models ----------------------------------------------------------------------

/// Where the reference samples of a fitted model came from.
struct ModelData {
  std::string source_path;  // empty when fitted without source data
  std::string target_path;
  bool pooled = false;
};

Json tree_to_json(const TreeFunction& h);
TreeFunction tree_from_json(const Json& j);

Json model_to_json(const AtlModel& model, const ModelData& data);

/// Rebuilds the chosen classifier from its description and the referenced samples.
Classifier classifier_from_model_json(const Json& j, const Dataset& source, const Dataset& target);

Json read_json(const std::filesystem::path& path);
void write_json(const Json& j, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace atl
