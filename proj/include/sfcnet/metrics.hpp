#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfcnet/ensembles.hpp"
#include "sfcnet/solvers.hpp"
#include "sfcnet/system.hpp"

namespace sfcnet {

// Degree moments of one side of a layer under independent Bernoulli edges.
struct SideDegrees {
  std::vector<double> expected;
  std::vector<double> variance;
  std::vector<std::vector<std::size_t>> sampled;  // one vector per sample
};

struct DegreeStats {
  SideDegrees out;  // origin side, k_out(i) = sum_j a_ij
  SideDegrees in;   // destination side, k_in(j) = sum_i a_ij
};

DegreeStats degree_stats(const LayerModel& model, std::span<const SampledLayer> samples = {});

// Average nearest-neighbour degrees
//   k_in^nn(i)  = sum_j a_ij k_in(j)  / k_out(i)   (origins)
//   k_out^nn(j) = sum_i a_ij k_out(i) / k_in(j)    (destinations)
// Entries with a zero denominator are empty.
struct Annd {
  std::vector<std::optional<double>> origin;
  std::vector<std::optional<double>> destination;
};

Annd annd(const SampledLayer& layer);
// Expectation with a -> p. The neighbour's degree is taken conditional on the
// focal edge: 1 + sum over the other nodes, so the focal node never counts
// its own probability twice.
Annd annd(const LayerModel& model);

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
double median(std::vector<double> values);

// Correlation between k_out(i) and k_in^nn(i) over origins with k_out > 0,
// pooled over all samples.
std::optional<double> degree_annd_correlation(std::span<const SampledLayer> samples);

struct BudgetRecord {
  AgentClass cls = AgentClass::Household;
  std::size_t id = 0;
  std::array<double, kLayerCount> inflow{};   // indexed by LayerKind
  std::array<double, kLayerCount> outflow{};

  double income(LayerKind k) const { return inflow[static_cast<std::size_t>(k)]; }
  double expense(LayerKind k) const { return outflow[static_cast<std::size_t>(k)]; }
  double total_inflow() const;
  double total_outflow() const;
  double balance() const { return total_inflow() - total_outflow(); }
};

// One record per bank, firm and household, in row order.
std::vector<BudgetRecord> budgets(const MultilayerTopology& topology, const FlowSolution& solution);

enum class Side : std::uint8_t { Origin, Destination };

struct FlowDegreeRecord {
  std::size_t node = 0;
  std::size_t degree = 0;
  double flow = 0.0;
  std::string sector;  // empty for banks
};

// Degree and summed flow of every node on one side of a layer, e.g.
// (Consumption, Origin) gives firm out-degree against Cs and
// (Consumption, Destination) household in-degree against Cd.
std::vector<FlowDegreeRecord> flow_vs_degree(const MultilayerTopology& topology,
                                             const FlowSolution& solution, LayerKind layer, Side side);

}  // namespace sfcnet
