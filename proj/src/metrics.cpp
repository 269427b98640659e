#include "sfcnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sfcnet/errors.hpp"

namespace sfcnet {

DegreeStats degree_stats(const LayerModel& model, std::span<const SampledLayer> samples) {
  DegreeStats s;
  s.out.expected.assign(model.origins, 0.0);
  s.out.variance.assign(model.origins, 0.0);
  s.in.expected.assign(model.destinations, 0.0);
  s.in.variance.assign(model.destinations, 0.0);
  for (std::size_t i = 0; i < model.origins; ++i)
    for (std::size_t j = 0; j < model.destinations; ++j) {
      const double p = model.probability(i, j);
      if (p == 0.0) continue;
      const double v = p * (1.0 - p);
      s.out.expected[i] += p;
      s.out.variance[i] += v;
      s.in.expected[j] += p;
      s.in.variance[j] += v;
    }
  for (const auto& layer : samples) {
    if (layer.origins != model.origins || layer.destinations != model.destinations)
      throw ConfigError("degree_stats: sample dimensions differ from the model");
    s.out.sampled.push_back(layer.out_degrees());
    s.in.sampled.push_back(layer.in_degrees());
  }
  return s;
}

Annd annd(const SampledLayer& layer) {
  const auto kout = layer.out_degrees();
  const auto kin = layer.in_degrees();
  std::vector<double> sum_o(layer.origins, 0.0), sum_d(layer.destinations, 0.0);
  for (const auto& [i, j] : layer.edges) {
    sum_o[i] += static_cast<double>(kin[j]);
    sum_d[j] += static_cast<double>(kout[i]);
  }
  Annd out;
  out.origin.resize(layer.origins);
  out.destination.resize(layer.destinations);
  for (std::size_t i = 0; i < layer.origins; ++i)
    if (kout[i] > 0) out.origin[i] = sum_o[i] / static_cast<double>(kout[i]);
  for (std::size_t j = 0; j < layer.destinations; ++j)
    if (kin[j] > 0) out.destination[j] = sum_d[j] / static_cast<double>(kin[j]);
  return out;
}

Annd annd(const LayerModel& model) {
  const auto n1 = model.origins, n2 = model.destinations;
  Eigen::MatrixXd p(n1, n2);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j) p(i, j) = model.probability(i, j);
  const Eigen::VectorXd kout = p.rowwise().sum();
  const Eigen::VectorXd kin = p.colwise().sum().transpose();

  Annd out;
  out.origin.resize(n1);
  out.destination.resize(n2);
  for (std::size_t i = 0; i < n1; ++i) {
    if (!(kout(i) > 0.0)) continue;
    double num = 0.0;
    for (std::size_t j = 0; j < n2; ++j) num += p(i, j) * (1.0 + kin(j) - p(i, j));
    out.origin[i] = num / kout(i);
  }
  for (std::size_t j = 0; j < n2; ++j) {
    if (!(kin(j) > 0.0)) continue;
    double num = 0.0;
    for (std::size_t i = 0; i < n1; ++i) num += p(i, j) * (1.0 + kout(i) - p(i, j));
    out.destination[j] = num / kin(j);
  }
  return out;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx, dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::optional<double> degree_annd_correlation(std::span<const SampledLayer> samples) {
  std::vector<double> k, knn;
  for (const auto& layer : samples) {
    const auto kout = layer.out_degrees();
    const auto a = annd(layer);
    for (std::size_t i = 0; i < layer.origins; ++i) {
      if (!a.origin[i]) continue;
      k.push_back(static_cast<double>(kout[i]));
      knn.push_back(*a.origin[i]);
    }
  }
  return pearson(k, knn);
}

double BudgetRecord::total_inflow() const { return std::accumulate(inflow.begin(), inflow.end(), 0.0); }
double BudgetRecord::total_outflow() const { return std::accumulate(outflow.begin(), outflow.end(), 0.0); }

std::vector<BudgetRecord> budgets(const MultilayerTopology& topology, const FlowSolution& solution) {
  const ColumnIndex index(topology);
  if (static_cast<std::size_t>(solution.xi.size()) != index.size())
    throw ConfigError("budgets: solution does not match the topology");
  const auto& reg = topology.registry;
  const RowLayout layout{reg.nb, reg.nf, reg.nh};

  std::vector<BudgetRecord> out(layout.base_rows());
  for (std::size_t b = 0; b < reg.nb; ++b) out[layout.row(AgentClass::Bank, b)] = {AgentClass::Bank, b, {}, {}};
  for (std::size_t f = 0; f < reg.nf; ++f) out[layout.row(AgentClass::Firm, f)] = {AgentClass::Firm, f, {}, {}};
  for (std::size_t h = 0; h < reg.nh; ++h)
    out[layout.row(AgentClass::Household, h)] = {AgentClass::Household, h, {}, {}};

  for (std::size_t c = 0; c < index.size(); ++c) {
    const auto& key = index.key(c);
    const auto pr = payer_receiver(key);
    const double v = solution.xi(static_cast<Eigen::Index>(c));
    const auto l = static_cast<std::size_t>(key.layer);
    out[layout.row(pr.receiver_class, pr.receiver)].inflow[l] += v;
    out[layout.row(pr.payer_class, pr.payer)].outflow[l] += v;
  }
  return out;
}

std::vector<FlowDegreeRecord> flow_vs_degree(const MultilayerTopology& topology,
                                             const FlowSolution& solution, LayerKind kind, Side side) {
  const ColumnIndex index(topology);
  if (static_cast<std::size_t>(solution.xi.size()) != index.size())
    throw ConfigError("flow_vs_degree: solution does not match the topology");
  const auto& layer = topology.layer(kind);
  const bool origin = side == Side::Origin;
  const std::size_t n = origin ? layer.origins : layer.destinations;
  const AgentClass cls = origin ? origin_class(kind) : destination_class(kind);
  const auto& reg = topology.registry;

  std::vector<FlowDegreeRecord> out(n);
  for (std::size_t v = 0; v < n; ++v) {
    out[v].node = v;
    if (cls == AgentClass::Firm) out[v].sector = reg.sectors[reg.firm_sector[v]];
    if (cls == AgentClass::Household) out[v].sector = reg.sectors[reg.household_sector[v]];
  }
  const auto [first, last] = index.layer_range(kind);
  for (std::size_t c = first; c < last; ++c) {
    const auto& key = index.key(c);
    auto& rec = out[origin ? key.origin : key.destination];
    ++rec.degree;
    rec.flow += solution.xi(static_cast<Eigen::Index>(c));
  }
  return out;
}

}  // namespace sfcnet
