#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfcnet/ensembles.hpp"
#include "sfcnet/ingest.hpp"
#include "sfcnet/serialize.hpp"
#include "sfcnet/solvers.hpp"
#include "sfcnet/system.hpp"

namespace sfcnet {

struct SolverParams {
  NnlsOptions nnls;
  double lsq_tol = 1e-10;
  std::size_t lsq_max_iter = 0;
  double bayes_sigma = 1.0;
  double zero_eps = 1e-9;
};

struct RunConfig {
  std::size_t nb = 3;
  std::size_t nf = 100;
  std::size_t nh = 1000;
  double alpha0 = 1.0;
  TopologyModel model = TopologyModel::RandomFitness;
  DegreeTargets targets;
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  std::filesystem::path data;           // directory with the four CSV tables
  std::filesystem::path sector_config;  // empty: <data>/sectors.json if present, else NACE default
  std::filesystem::path bundle;         // empty: fit from `data`
  std::filesystem::path out = "out";
  Method solver = Method::Nnls;
  bool compare = false;
  bool write_system = false;
  std::size_t threads = 0;  // 0: hardware concurrency
  SolverParams params;

  // Throws ConfigError.
  void validate() const;
  // Settings that determine results; paths other than data and bundle,
  // and the thread count, are left out.
  Json to_json() const;
  // 16 hex digits of FNV-1a over to_json().dump().
  std::string hash() const;
  std::size_t thread_count() const;
};

// Overlays the keys of a config JSON object onto `config`. Unknown keys throw.
void apply_config_json(RunConfig& config, const Json& j);
RunConfig load_config(const std::filesystem::path& path);

// Everything needed to sample topologies: fitnesses, registry and the five
// fitted layer models.
struct ModelBundle {
  std::uint64_t seed = 0;
  TopologyModel model = TopologyModel::RandomFitness;
  DegreeTargets targets;
  std::vector<std::string> sectors;
  FitnessSet fitnesses;
  AgentRegistry registry;
  std::array<LayerModel, kLayerCount> layers;
};

Json to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const Json& j);

SectorConfig resolve_sector_config(const RunConfig& config);
ModelBundle fit_bundle(const RunConfig& config);
ModelBundle fit_bundle(const SectorDataset& data, const RunConfig& config);
// Loads config.bundle when set, else fits from config.data.
ModelBundle obtain_bundle(const RunConfig& config);

MultilayerTopology sample_topology(const ModelBundle& bundle, std::uint64_t seed, std::size_t trial);

struct MethodOutcome {
  Method method = Method::Nnls;
  std::optional<FlowSolution> solution;
  std::optional<SolverDiagnostics> diagnostics;
  std::string error;  // solver failure, empty on success

  bool ok() const { return solution.has_value() && solution->converged && error.empty(); }
};

struct TrialOutcome {
  std::size_t trial = 0;
  std::optional<MultilayerTopology> topology;
  std::optional<LinearSystem> system;  // augmented
  std::vector<MethodOutcome> methods;
  std::string error;  // sampling or assembly failure
};

// Samples, assembles, augments and solves one trial. dcGM always uses the
// trial's NNLS solution as reference; NNLS is solved for it when not listed.
TrialOutcome run_trial(const ModelBundle& bundle, const RunConfig& config, std::size_t trial,
                       const std::vector<Method>& methods);

// Runs trials 0..n-1 on `threads` workers and hands each outcome to `consume`
// on the calling thread in trial order.
void for_each_trial(const ModelBundle& bundle, const RunConfig& config, const std::vector<Method>& methods,
                    const std::function<void(TrialOutcome&&)>& consume);

struct MethodSummary {
  Method method = Method::Nnls;
  double mean_relative_error_pct = 0.0;
  double mean_negative_pct = 0.0;
  std::size_t ok_trials = 0;
  std::size_t failed_trials = 0;
};

struct TrialRow {
  std::size_t trial = 0;
  Method method = Method::Nnls;
  bool ok = false;
  std::optional<double> relative_error_pct;
  double negative_pct = 0.0;
  std::size_t nonzero_count = 0;
  std::size_t iterations = 0;
  std::string error;
};

struct ComparisonReport {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t trials = 0;
  std::vector<MethodSummary> methods;
  std::vector<TrialRow> rows;
};

inline const std::vector<Method> kComparedMethods = {Method::Nnls, Method::Bayes, Method::Dcgm};

// Per trial: NNLS, Bayes (mu = 0) and dcGM. Failed trials are excluded from
// the means and counted. `observe` sees every outcome before it is dropped.
ComparisonReport compare_methods(const RunConfig& config, const ModelBundle& bundle,
                                 const std::function<void(const TrialOutcome&)>& observe = {});

Json to_json(const ComparisonReport& report);
std::string comparison_csv(const ComparisonReport& report);

// Subcommands. Return the process exit code; errors escape as exceptions.
int cmd_fit(const RunConfig& config);
int cmd_run(const RunConfig& config);
int cmd_metrics(const RunConfig& config);

// 0 ok, 1 config error, 2 data error, 3 solver failure.
int exit_code_for(const std::exception& e);

}  // namespace sfcnet
