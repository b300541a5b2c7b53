#pragma once

#include <string>

#include <json.hpp>

#include "dgd/harness.hpp"

/// JSON files for maps, scenarios, partitions, discrete plans and results.
/// Parse failures and schema mismatches throw IoError.
namespace dgd::io {

using nlohmann::json;

json read_json(const std::string& path);
void write_text(const std::string& path, const std::string& text);
void write_json(const std::string& path, const json& j);

json to_json(const geometry::Workspace& ws);
geometry::Workspace workspace_from_json(const json& j);

/// Robots and limits only; the workspace lives in its own file.
json to_json(const harness::Scenario& sc);
harness::Scenario scenario_from_json(const json& j, const geometry::Workspace& ws);

json to_json(const decomp::ConvexPartition& part);
decomp::ConvexPartition partition_from_json(const json& j);

json to_json(const harness::DiscreteStage& stage);
/// Embedded discrete waypoints of a plan file.
std::vector<Path> embedded_from_json(const json& j);

/// Trajectories, metrics and violation counts. Wall time is left out so
/// reruns compare byte for byte.
json to_json(const harness::RunResult& result);
std::vector<Path> trajectories_from_json(const json& j);

}  // namespace dgd::io
