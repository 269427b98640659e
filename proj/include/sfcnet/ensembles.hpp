#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sfcnet/ingest.hpp"
#include "sfcnet/rng.hpp"

namespace sfcnet {

// Transaction layers, in the column order of the balance system.
//
// Edge orientation (origin -> destination) follows who is "i" in the
// edge-probability model:
//   Consumption      firm -> household   (household pays firm)
//   Investment       seller -> buyer     (buyer pays seller), no self-loops
//   Wages            firm -> household   (firm pays household)
//   LoanInterest     bank -> firm        (firm pays bank)
//   DepositInterest  bank -> household   (bank pays household)
enum class LayerKind : std::uint8_t {
  Consumption = 0,
  Investment = 1,
  Wages = 2,
  LoanInterest = 3,
  DepositInterest = 4,
};

inline constexpr std::size_t kLayerCount = 5;
inline constexpr std::array<LayerKind, kLayerCount> kAllLayers = {
    LayerKind::Consumption, LayerKind::Investment, LayerKind::Wages, LayerKind::LoanInterest,
    LayerKind::DepositInterest};

std::string_view to_string(LayerKind kind);
LayerKind layer_from_string(std::string_view name);

enum class AgentClass : std::uint8_t { Bank, Firm, Household };

AgentClass origin_class(LayerKind kind);
AgentClass destination_class(LayerKind kind);

enum class ModelType : std::uint8_t { FicmBlock, FicmRandomFitness, Birg, BirgSectored };

std::string_view to_string(ModelType type);
ModelType model_type_from_string(std::string_view name);

// Topology family for the whole multilayer network.
enum class TopologyModel : std::uint8_t { Block, RandomFitness };

std::string_view to_string(TopologyModel model);
TopologyModel topology_model_from_string(std::string_view name);

// Edge-probability model of one layer.
//
// The pair weight is g(i,j) = origin_weight[i] * destination_weight[j] *
// table(origin_group[i], destination_group[j]). FiCM layers map it to
// z g / (1 + z g); BiRG layers use g directly as the probability.
struct LayerModel {
  LayerKind kind = LayerKind::Consumption;
  ModelType type = ModelType::Birg;
  std::optional<double> z;
  double target_links = 0.0;

  std::size_t origins = 0;
  std::size_t destinations = 0;
  std::vector<std::uint32_t> origin_group;
  std::vector<std::uint32_t> destination_group;
  std::vector<double> origin_weight;
  std::vector<double> destination_weight;
  Eigen::MatrixXd table;
  bool no_self_loops = false;

  // Names of the fitness inputs the table and weights were built from.
  std::vector<std::string> fitness_refs;

  bool is_ficm() const { return type == ModelType::FicmBlock || type == ModelType::FicmRandomFitness; }
  bool admissible(std::size_t i, std::size_t j) const { return !(no_self_loops && i == j); }
  double pair_weight(std::size_t i, std::size_t j) const;
  double probability(std::size_t i, std::size_t j) const;
};

// Mean degrees that fix the expected link count of every layer.
struct DegreeTargets {
  double consumption = 20.0;  // suppliers per household
  double wages = 1.0;         // jobs per household
  double investment = 5.0;    // links per firm
  double loans = 1.0;         // lenders per firm
  double deposits = 2.9;      // deposit banks per household
};

// Pair weight together with how many admissible pairs share it.
struct WeightedFactor {
  double g = 0.0;
  double count = 0.0;
};

// Solves sum_k count_k z g_k / (1 + z g_k) = target for z > 0 by bracketing
// from [1e-12, 1] and bisection. Throws FitError for unattainable targets.
double fit_z(std::span<const WeightedFactor> factors, double target);

// Expected link count of a FiCM layer for a given z.
double expected_links(std::span<const WeightedFactor> factors, double z);

LayerModel build_layer(LayerKind kind, ModelType type, const FitnessSet& fitnesses,
                       const AgentRegistry& registry, const DegreeTargets& targets);

// The five layer models of one topology family, in kAllLayers order.
std::array<LayerModel, kLayerCount> build_layers(TopologyModel model, const FitnessSet& fitnesses,
                                                 const AgentRegistry& registry,
                                                 const DegreeTargets& targets);

// Distinct pair weights of a layer with their multiplicities.
std::vector<WeightedFactor> collect_factors(const LayerModel& model);

double expected_link_count(const LayerModel& model);

struct SampledLayer {
  LayerKind kind = LayerKind::Consumption;
  std::size_t origins = 0;
  std::size_t destinations = 0;
  // Sorted by origin, then destination.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

  std::vector<std::size_t> out_degrees() const;
  std::vector<std::size_t> in_degrees() const;
};

// Independent Bernoulli draw per admissible pair, origin-major order.
SampledLayer sample_layer(const LayerModel& model, RandomStream& rng);

}  // namespace sfcnet
