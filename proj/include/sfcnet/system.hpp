#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "sfcnet/ensembles.hpp"
#include "sfcnet/ingest.hpp"

namespace sfcnet {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct MultilayerTopology {
  AgentRegistry registry;
  std::array<SampledLayer, kLayerCount> layers;  // kAllLayers order

  const SampledLayer& layer(LayerKind kind) const { return layers[static_cast<std::size_t>(kind)]; }
  std::size_t edge_count() const;
  // Throws ConfigError when layer dims disagree with the registry or an
  // investment self-loop is present.
  void validate() const;
};

struct ColumnKey {
  LayerKind layer;
  std::uint32_t origin;
  std::uint32_t destination;
  bool operator==(const ColumnKey&) const = default;
};

// Bijection between sampled edges and system columns. Layers follow
// kAllLayers; inside a layer the counterparty index is the outer loop and
// the household (or paying firm) index runs fastest, e.g. consumption goes
// (f1,h1) (f1,h2) ... (f1,hn) (f2,h1) ...
class ColumnIndex {
 public:
  ColumnIndex() = default;
  explicit ColumnIndex(const MultilayerTopology& topology);

  std::size_t size() const { return keys_.size(); }
  const ColumnKey& key(std::size_t column) const { return keys_[column]; }
  std::optional<std::size_t> column(const ColumnKey& key) const;
  // Half-open column range of one layer.
  std::pair<std::size_t, std::size_t> layer_range(LayerKind kind) const;

  const std::vector<ColumnKey>& keys() const { return keys_; }

 private:
  std::vector<ColumnKey> keys_;
  std::array<std::size_t, kLayerCount + 1> offsets_{};
};

// Row layout: banks, then firms, then households; the optional consumption
// rows of the augmented system follow, one per household.
struct RowLayout {
  std::size_t nb = 0;
  std::size_t nf = 0;
  std::size_t nh = 0;

  std::size_t base_rows() const { return nb + nf + nh; }
  std::size_t row(AgentClass cls, std::size_t id) const;
  std::size_t consumption_row(std::size_t household) const { return base_rows() + household; }
};

struct PayerReceiver {
  AgentClass payer_class;
  std::size_t payer;
  AgentClass receiver_class;
  std::size_t receiver;
};

PayerReceiver payer_receiver(const ColumnKey& key);

// Budget-balance system A xi = b over the flows of the sampled edges.
struct LinearSystem {
  SparseMatrix A;
  Eigen::VectorXd b;
  RowLayout layout;
  ColumnIndex index;
  std::optional<double> alpha0;

  std::size_t rows() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(A.cols()); }
  std::size_t base_rows() const { return layout.base_rows(); }
  bool augmented() const { return alpha0.has_value(); }
};

// Homogeneous system: +1 in the receiver's row, -1 in the payer's row.
LinearSystem assemble(const MultilayerTopology& topology);

// Appends one row per household fixing its total consumption to alpha0.
// Throws InfeasibleError naming the first household without a consumption edge.
LinearSystem augment_alpha0(const LinearSystem& system, double alpha0);

double density(const LinearSystem& system);

// Column count of the topology in which every admissible pair is an edge.
std::size_t complete_column_count(std::size_t nb, std::size_t nf, std::size_t nh);

// Rows whose removal leaves the same solution set: empty rows and one base
// row per connected component of the payment graph (the base rows of a
// component sum to zero).
std::vector<std::size_t> redundant_rows(const LinearSystem& system);

// Households with neither a wage nor a deposit-interest edge. In the
// augmented system their budget row cannot balance.
std::vector<std::size_t> households_without_income(const MultilayerTopology& topology);

}  // namespace sfcnet
