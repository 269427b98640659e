#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfcnet/ingest.hpp"
#include "sfcnet/rng.hpp"
#include "sfcnet/system.hpp"

namespace testing {

inline std::filesystem::path source_dir() { return SFCNET_SOURCE_DIR; }
inline std::filesystem::path three_sector_dir() { return source_dir() / "data" / "three_sector"; }
inline std::filesystem::path synthetic_dir() { return source_dir() / "data" / "synthetic"; }

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sfcnet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Hand-built dataset over `sectors`, bypassing the CSV layer.
inline sfcnet::SectorDataset dataset(std::vector<std::string> sectors, Eigen::MatrixXd io,
                                     std::vector<std::uint64_t> firms, std::vector<std::uint64_t> employees) {
  sfcnet::SectorDataset d;
  const auto n = static_cast<Eigen::Index>(sectors.size());
  d.sectors = std::move(sectors);
  for (Eigen::Index s = 0; s < n; ++s) d.products.push_back("p" + std::to_string(s));
  d.supply = Eigen::MatrixXd::Identity(n, n);
  d.use_final = Eigen::VectorXd::Constant(n, 1.0);
  d.io = std::move(io);
  d.firm_count = std::move(firms);
  d.employee_count = std::move(employees);
  return d;
}

inline int uniform_int(sfcnet::RandomStream& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
}

inline double normal(sfcnet::RandomStream& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * rng.uniform());
}

inline sfcnet::SparseMatrix to_sparse(const Eigen::MatrixXd& m) { return m.sparseView(); }

// Dense Gaussian matrix.
inline Eigen::MatrixXd gaussian_matrix(sfcnet::RandomStream& rng, int m, int n) {
  Eigen::MatrixXd a(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  return a;
}

// Signed incidence matrix of random payer/receiver pairs over `agents` rows,
// with a few extra rows that sum selected columns (like the consumption rows).
inline Eigen::MatrixXd incidence_matrix(sfcnet::RandomStream& rng, int agents, int extra, int n) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(agents + extra, n);
  for (int j = 0; j < n; ++j) {
    const int p = uniform_int(rng, 0, agents - 1);
    int r = uniform_int(rng, 0, agents - 2);
    if (r >= p) ++r;
    a(p, j) = -1.0;
    a(r, j) = 1.0;
    if (extra > 0 && rng.uniform() < 0.5) a(agents + uniform_int(rng, 0, extra - 1), j) = 1.0;
  }
  return a;
}

// Minimum of ||A x - b||^2 over x >= 0 by enumerating supports of size
// <= rank bound. Some optimal point has linearly independent support
// columns, so supports larger than the row count need not be visited.
inline double nnls_oracle(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, Eigen::VectorXd* best_x = nullptr) {
  const int n = static_cast<int>(A.cols());
  const int kmax = std::min<int>(n, static_cast<int>(A.rows()));
  double best = b.squaredNorm();
  if (best_x) *best_x = Eigen::VectorXd::Zero(n);
  std::vector<int> idx;
  auto visit = [&](auto&& self, int start) -> void {
    if (!idx.empty()) {
      Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
      const Eigen::VectorXd z = sub.completeOrthogonalDecomposition().solve(b);
      if ((z.array() >= 0.0).all()) {
        const double obj = (sub * z - b).squaredNorm();
        if (obj < best) {
          best = obj;
          if (best_x) {
            *best_x = Eigen::VectorXd::Zero(n);
            for (std::size_t k = 0; k < idx.size(); ++k) (*best_x)(idx[k]) = z(static_cast<Eigen::Index>(k));
          }
        }
      }
    }
    if (static_cast<int>(idx.size()) == kmax) return;
    for (int j = start; j < n; ++j) {
      idx.push_back(j);
      self(self, j + 1);
      idx.pop_back();
    }
  };
  visit(visit, 0);
  return best;
}

// A^T (A A^T)^{-1} b for full row rank A.
inline Eigen::VectorXd dense_least_norm(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  return A.transpose() * (A * A.transpose()).ldlt().solve(b);
}

inline sfcnet::SampledLayer layer(sfcnet::LayerKind kind, std::size_t origins, std::size_t destinations,
                                  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges) {
  sfcnet::SampledLayer l;
  l.kind = kind;
  l.origins = origins;
  l.destinations = destinations;
  std::sort(edges.begin(), edges.end());
  l.edges = std::move(edges);
  return l;
}

inline sfcnet::AgentRegistry registry(std::size_t nb, std::size_t nf, std::size_t nh) {
  sfcnet::AgentRegistry r;
  r.nb = nb;
  r.nf = nf;
  r.nh = nh;
  r.sectors = {"S"};
  r.firm_sector.assign(nf, 0);
  r.household_sector.assign(nh, 0);
  return r;
}

// Disaggregated example with one bank, two firms and three households.
inline sfcnet::MultilayerTopology small_topology() {
  using sfcnet::LayerKind;
  sfcnet::MultilayerTopology t;
  t.registry = registry(1, 2, 3);
  t.layers[0] = layer(LayerKind::Consumption, 2, 3, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 2}});
  t.layers[1] = layer(LayerKind::Investment, 2, 2, {{0, 1}});
  t.layers[2] = layer(LayerKind::Wages, 2, 3, {{0, 0}, {1, 1}, {1, 2}});
  t.layers[3] = layer(LayerKind::LoanInterest, 1, 2, {{0, 1}});
  t.layers[4] = layer(LayerKind::DepositInterest, 1, 3, {{0, 0}, {0, 1}, {0, 2}});
  return t;
}

// Topology with every pair present independently with probability p.
// Each household gets one consumption edge so the augmented system exists.
inline sfcnet::MultilayerTopology random_topology(sfcnet::RandomStream& rng, std::size_t nb, std::size_t nf,
                                                  std::size_t nh, double p) {
  using sfcnet::LayerKind;
  sfcnet::MultilayerTopology t;
  t.registry = registry(nb, nf, nh);
  for (std::size_t l = 0; l < sfcnet::kLayerCount; ++l) {
    const auto kind = sfcnet::kAllLayers[l];
    const auto size = [&](sfcnet::AgentClass c) {
      return c == sfcnet::AgentClass::Bank ? nb : c == sfcnet::AgentClass::Firm ? nf : nh;
    };
    const auto n1 = size(sfcnet::origin_class(kind)), n2 = size(sfcnet::destination_class(kind));
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n2; ++j) {
        if (kind == LayerKind::Investment && i == j) continue;
        const bool forced = kind == LayerKind::Consumption && i == j % n1;
        if (forced || rng.uniform() < p)
          edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      }
    t.layers[l] = layer(kind, n1, n2, std::move(edges));
  }
  return t;
}

}  // namespace testing
