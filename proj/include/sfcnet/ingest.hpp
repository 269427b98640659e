#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sfcnet/rng.hpp"

namespace sfcnet {

// Maps raw sector codes (NACE sections or pre-aggregated labels) onto the
// aggregate sectors of the model. A raw code mapped to std::nullopt is
// dropped from every table. The aggregate axis is ordered by first
// appearance in the mapping.
class SectorConfig {
 public:
  using Entry = std::pair<std::string, std::optional<std::string>>;

  SectorConfig() = default;
  explicit SectorConfig(std::vector<Entry> mapping);

  // B-E, F, G-I, J, K, L, M-N, O-Q, R-S; agriculture (A) dropped unless asked.
  static SectorConfig nace_default(bool include_agriculture = false);
  static SectorConfig identity(std::span<const std::string> codes);
  // Parses a JSON object {raw_code: aggregate_code | null}, keeping key order.
  static SectorConfig from_json(const std::filesystem::path& path);

  // Aggregate index for `raw`, std::nullopt when dropped.
  // Throws DataError("unknown sector code ...") when `raw` is not mapped.
  std::optional<std::size_t> aggregate_of(const std::string& raw) const;

  const std::vector<std::string>& aggregates() const { return aggregates_; }
  const std::vector<Entry>& entries() const { return mapping_; }

 private:
  std::vector<Entry> mapping_;
  std::vector<std::string> aggregates_;
};

// National-accounts tables on a common, aggregated sector axis.
struct SectorDataset {
  std::vector<std::string> sectors;
  std::vector<std::string> products;
  Eigen::MatrixXd supply;     // product x sector, value produced
  Eigen::VectorXd use_final;  // product, household final consumption
  Eigen::MatrixXd io;         // sector x sector, row = selling sector
  std::vector<std::uint64_t> firm_count;
  std::vector<std::uint64_t> employee_count;

  std::size_t sector_count() const { return sectors.size(); }
  // Throws DataError on shape mismatch or negative entries.
  void validate() const;
};

struct DataPaths {
  std::filesystem::path supply;
  std::filesystem::path use_final;
  std::filesystem::path io;
  std::filesystem::path demography;

  // supply.csv, use_final.csv, io.csv and demography.csv inside `dir`.
  static DataPaths in_directory(const std::filesystem::path& dir);
};

SectorDataset load_dataset(const DataPaths& paths, const SectorConfig& config);

// Sector and firm propensities. d sums to one over all entries, x_cons and
// x_wage sum to one over sectors, a holds one uniform [0,1] draw per firm.
struct FitnessSet {
  Eigen::MatrixXd d;
  Eigen::VectorXd x_cons;
  Eigen::VectorXd x_wage;
  std::vector<double> a;
};

FitnessSet compute_fitnesses(const SectorDataset& data, std::size_t nf, RandomStream& rng);

// Agents of the downscaled economy. Firms are laid out sector by sector;
// households carry an independently drawn sector. Banks have no sector.
struct AgentRegistry {
  std::size_t nb = 0;
  std::size_t nf = 0;
  std::size_t nh = 0;
  std::vector<std::string> sectors;
  std::vector<std::uint32_t> firm_sector;
  std::vector<std::uint32_t> household_sector;

  std::vector<std::size_t> firms_per_sector() const;
  std::vector<std::size_t> households_per_sector() const;
};

// Splits `total` proportionally to `weights` with the largest-remainder rule.
// Leftover units go to the largest fractional parts, ties to the lowest index.
// The result always sums to `total`.
std::vector<std::size_t> apportion(std::span<const std::uint64_t> weights, std::size_t total);

AgentRegistry build_registry(const SectorDataset& data, std::size_t nb, std::size_t nf,
                             std::size_t nh, RandomStream& rng);

}  // namespace sfcnet
