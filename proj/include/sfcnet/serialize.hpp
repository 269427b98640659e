#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sfcnet/ensembles.hpp"
#include "sfcnet/ingest.hpp"
#include "sfcnet/metrics.hpp"
#include "sfcnet/solvers.hpp"
#include "sfcnet/system.hpp"

namespace sfcnet {

using Json = nlohmann::ordered_json;

Json to_json(const LayerModel& model);
LayerModel layer_model_from_json(const Json& j);

Json to_json(const FitnessSet& f);
FitnessSet fitness_set_from_json(const Json& j);

Json to_json(const AgentRegistry& r);
AgentRegistry registry_from_json(const Json& j);

Json to_json(const DegreeTargets& t);
DegreeTargets degree_targets_from_json(const Json& j, DegreeTargets defaults = {});

Json to_json(const SolverDiagnostics& d);

// Writes `text` to `path` and throws DataError naming the path on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

// origin,destination
void write_edge_list(const std::filesystem::path& path, const SampledLayer& layer);
SampledLayer read_edge_list(const std::filesystem::path& path, LayerKind kind, std::size_t origins,
                            std::size_t destinations);

// row,col,val / row,value / {"columns": [{layer, origin, destination}, ...]}
void write_triplets(const std::filesystem::path& path, const SparseMatrix& A);
void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v);
Json column_index_json(const ColumnIndex& index);

// column_id,layer,origin,destination,value
void write_solution(const std::filesystem::path& path, const ColumnIndex& index, const FlowSolution& solution);
Eigen::VectorXd read_solution(const std::filesystem::path& path, const ColumnIndex& index);

void write_budgets(const std::filesystem::path& path, const std::vector<BudgetRecord>& records);
void write_flow_degree(const std::filesystem::path& path, const std::vector<FlowDegreeRecord>& records);

}  // namespace sfcnet
