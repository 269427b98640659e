#include "sfcnet/system.hpp"

#include <algorithm>
#include <numeric>

#include "sfcnet/errors.hpp"

namespace sfcnet {

std::size_t MultilayerTopology::edge_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.edges.size();
  return n;
}

void MultilayerTopology::validate() const {
  auto size_of = [&](AgentClass c) {
    return c == AgentClass::Bank ? registry.nb : c == AgentClass::Firm ? registry.nf : registry.nh;
  };
  for (auto kind : kAllLayers) {
    const auto& l = layer(kind);
    if (l.kind != kind) throw ConfigError("topology: layer slot holds the wrong kind");
    if (l.origins != size_of(origin_class(kind)) || l.destinations != size_of(destination_class(kind)))
      throw ConfigError("topology: layer " + std::string(to_string(kind)) +
                        " dims do not match the registry");
    for (std::size_t e = 0; e < l.edges.size(); ++e) {
      const auto& [o, d] = l.edges[e];
      if (o >= l.origins || d >= l.destinations)
        throw ConfigError("topology: edge endpoint out of range in " + std::string(to_string(kind)));
      if (kind == LayerKind::Investment && o == d)
        throw ConfigError("topology: investment self-loop on firm " + std::to_string(o));
      if (e > 0 && !(l.edges[e - 1] < l.edges[e]))
        throw ConfigError("topology: edges of " + std::string(to_string(kind)) +
                          " are not sorted or contain duplicates");
    }
  }
}

// ---- ColumnIndex -----------------------------------------------------------

ColumnIndex::ColumnIndex(const MultilayerTopology& topology) {
  keys_.reserve(topology.edge_count());
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    offsets_[l] = keys_.size();
    for (const auto& [o, d] : topology.layers[l].edges) keys_.push_back({kAllLayers[l], o, d});
  }
  offsets_[kLayerCount] = keys_.size();
}

std::pair<std::size_t, std::size_t> ColumnIndex::layer_range(LayerKind kind) const {
  const auto l = static_cast<std::size_t>(kind);
  return {offsets_[l], offsets_[l + 1]};
}

std::optional<std::size_t> ColumnIndex::column(const ColumnKey& key) const {
  auto [first, last] = layer_range(key.layer);
  auto begin = keys_.begin() + static_cast<std::ptrdiff_t>(first);
  auto end = keys_.begin() + static_cast<std::ptrdiff_t>(last);
  auto it = std::lower_bound(begin, end, key, [](const ColumnKey& a, const ColumnKey& b) {
    return std::pair(a.origin, a.destination) < std::pair(b.origin, b.destination);
  });
  if (it == end || !(*it == key)) return std::nullopt;
  return static_cast<std::size_t>(it - keys_.begin());
}

// ---- rows ------------------------------------------------------------------

std::size_t RowLayout::row(AgentClass cls, std::size_t id) const {
  switch (cls) {
    case AgentClass::Bank: return id;
    case AgentClass::Firm: return nb + id;
    case AgentClass::Household: return nb + nf + id;
  }
  return 0;
}

PayerReceiver payer_receiver(const ColumnKey& key) {
  const std::size_t o = key.origin;
  const std::size_t d = key.destination;
  switch (key.layer) {
    case LayerKind::Consumption: return {AgentClass::Household, d, AgentClass::Firm, o};
    case LayerKind::Investment: return {AgentClass::Firm, d, AgentClass::Firm, o};
    case LayerKind::Wages: return {AgentClass::Firm, o, AgentClass::Household, d};
    case LayerKind::LoanInterest: return {AgentClass::Firm, d, AgentClass::Bank, o};
    case LayerKind::DepositInterest: return {AgentClass::Bank, o, AgentClass::Household, d};
  }
  return {};
}

// ---- assembly --------------------------------------------------------------

LinearSystem assemble(const MultilayerTopology& topology) {
  topology.validate();
  if (topology.edge_count() == 0) throw InfeasibleError("empty topology: no edge to carry a flow");

  LinearSystem sys;
  sys.layout = {topology.registry.nb, topology.registry.nf, topology.registry.nh};
  sys.index = ColumnIndex(topology);

  const auto rows = static_cast<int>(sys.layout.base_rows());
  const auto cols = static_cast<int>(sys.index.size());
  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(2 * sys.index.size());
  for (std::size_t c = 0; c < sys.index.size(); ++c) {
    const auto pr = payer_receiver(sys.index.key(c));
    triplets.emplace_back(static_cast<int>(sys.layout.row(pr.payer_class, pr.payer)),
                          static_cast<int>(c), -1.0);
    triplets.emplace_back(static_cast<int>(sys.layout.row(pr.receiver_class, pr.receiver)),
                          static_cast<int>(c), 1.0);
  }
  sys.A.resize(rows, cols);
  sys.A.setFromTriplets(triplets.begin(), triplets.end());
  sys.A.makeCompressed();
  sys.b = Eigen::VectorXd::Zero(rows);
  return sys;
}

LinearSystem augment_alpha0(const LinearSystem& system, double alpha0) {
  if (!(alpha0 > 0.0)) throw ConfigError("alpha0 must be positive");
  if (system.augmented()) throw ConfigError("system is already augmented");

  const auto& layout = system.layout;
  const auto [first, last] = system.index.layer_range(LayerKind::Consumption);
  std::vector<bool> has_consumption(layout.nh, false);
  for (std::size_t c = first; c < last; ++c) has_consumption[system.index.key(c).destination] = true;
  for (std::size_t h = 0; h < layout.nh; ++h)
    if (!has_consumption[h])
      throw InfeasibleError("household " + std::to_string(h) +
                            " has no consumption edge; its consumption cannot equal alpha0");

  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(static_cast<std::size_t>(system.A.nonZeros()) + (last - first));
  for (int k = 0; k < system.A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(system.A, k); it; ++it)
      triplets.emplace_back(it.row(), it.col(), it.value());
  for (std::size_t c = first; c < last; ++c)
    triplets.emplace_back(static_cast<int>(layout.consumption_row(system.index.key(c).destination)),
                          static_cast<int>(c), 1.0);

  LinearSystem out;
  out.layout = layout;
  out.index = system.index;
  out.alpha0 = alpha0;
  const auto rows = static_cast<int>(layout.base_rows() + layout.nh);
  out.A.resize(rows, system.A.cols());
  out.A.setFromTriplets(triplets.begin(), triplets.end());
  out.A.makeCompressed();
  out.b = Eigen::VectorXd::Zero(rows);
  out.b.tail(static_cast<Eigen::Index>(layout.nh)).setConstant(alpha0);
  return out;
}

double density(const LinearSystem& system) {
  const double cells = static_cast<double>(system.rows()) * static_cast<double>(system.cols());
  return cells > 0.0 ? static_cast<double>(system.A.nonZeros()) / cells : 0.0;
}

std::size_t complete_column_count(std::size_t nb, std::size_t nf, std::size_t nh) {
  return 2 * nf * nh + nf * (nf - 1) + nb * (nf + nh);
}

std::vector<std::size_t> redundant_rows(const LinearSystem& system) {
  const std::size_t base = system.base_rows();
  std::vector<std::size_t> parent(base);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  std::vector<std::size_t> nnz(system.rows(), 0);
  for (int k = 0; k < system.A.outerSize(); ++k) {
    std::size_t first_base = base;
    for (SparseMatrix::InnerIterator it(system.A, k); it; ++it) {
      if (it.value() == 0.0) continue;
      const auto r = static_cast<std::size_t>(it.row());
      ++nnz[r];
      if (r >= base) continue;
      if (first_base == base) {
        first_base = r;
      } else {
        auto a = find(first_base), b = find(r);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }

  std::vector<std::size_t> out;
  std::vector<bool> dropped_component(base, false);
  for (std::size_t r = 0; r < system.rows(); ++r) {
    if (nnz[r] == 0) {
      out.push_back(r);
      continue;
    }
    if (r >= base) continue;
    const auto root = find(r);
    if (!dropped_component[root]) {
      dropped_component[root] = true;
      out.push_back(r);
    }
  }
  return out;
}

std::vector<std::size_t> households_without_income(const MultilayerTopology& topology) {
  std::vector<bool> income(topology.registry.nh, false);
  for (const auto& [f, h] : topology.layer(LayerKind::Wages).edges) income[h] = true;
  for (const auto& [b, h] : topology.layer(LayerKind::DepositInterest).edges) income[h] = true;
  std::vector<std::size_t> out;
  for (std::size_t h = 0; h < income.size(); ++h)
    if (!income[h]) out.push_back(h);
  return out;
}

}  // namespace sfcnet
