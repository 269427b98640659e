#include "sfcnet/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "sfcnet/csv.hpp"
#include "sfcnet/errors.hpp"

namespace sfcnet {

// ---- SectorConfig ----------------------------------------------------------

SectorConfig::SectorConfig(std::vector<Entry> mapping) : mapping_(std::move(mapping)) {
  std::set<std::string> seen;
  for (const auto& [raw, agg] : mapping_) {
    if (!seen.insert(raw).second)
      throw ConfigError("sector config: duplicate raw code '" + raw + "'");
    if (agg && std::find(aggregates_.begin(), aggregates_.end(), *agg) == aggregates_.end())
      aggregates_.push_back(*agg);
  }
  if (aggregates_.empty()) throw ConfigError("sector config: no aggregate sector");
}

SectorConfig SectorConfig::nace_default(bool include_agriculture) {
  std::vector<Entry> m;
  auto group = [&m](const std::string& label, std::initializer_list<const char*> members) {
    m.emplace_back(label, label);
    for (const char* s : members)
      if (label != s) m.emplace_back(s, label);
  };
  if (include_agriculture) {
    group("A", {"A"});
  } else {
    m.emplace_back("A", std::nullopt);
  }
  group("B-E", {"B", "C", "D", "E"});
  group("F", {"F"});
  group("G-I", {"G", "H", "I"});
  group("J", {"J"});
  group("K", {"K"});
  group("L", {"L"});
  group("M-N", {"M", "N"});
  group("O-Q", {"O", "P", "Q"});
  group("R-S", {"R", "S"});
  m.emplace_back("T", std::nullopt);
  m.emplace_back("U", std::nullopt);
  return SectorConfig(std::move(m));
}

SectorConfig SectorConfig::identity(std::span<const std::string> codes) {
  std::vector<Entry> m;
  for (const auto& c : codes) m.emplace_back(c, c);
  return SectorConfig(std::move(m));
}

SectorConfig SectorConfig::from_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sector config: " + path.string());
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": expected a JSON object");
  std::vector<Entry> m;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.value().is_null()) {
      m.emplace_back(it.key(), std::nullopt);
    } else if (it.value().is_string()) {
      m.emplace_back(it.key(), it.value().get<std::string>());
    } else {
      throw ConfigError(path.string() + ": value for '" + it.key() + "' must be a string or null");
    }
  }
  return SectorConfig(std::move(m));
}

std::optional<std::size_t> SectorConfig::aggregate_of(const std::string& raw) const {
  for (const auto& [code, agg] : mapping_) {
    if (code != raw) continue;
    if (!agg) return std::nullopt;
    auto it = std::find(aggregates_.begin(), aggregates_.end(), *agg);
    return static_cast<std::size_t>(it - aggregates_.begin());
  }
  throw DataError("unknown sector code '" + raw + "'");
}

// ---- SectorDataset ---------------------------------------------------------

void SectorDataset::validate() const {
  const auto ns = sectors.size();
  const auto np = products.size();
  if (ns == 0) throw DataError("dataset has no sector");
  if (supply.rows() != static_cast<Eigen::Index>(np) || supply.cols() != static_cast<Eigen::Index>(ns))
    throw DataError("shape mismatch: supply is not product x sector");
  if (use_final.size() != static_cast<Eigen::Index>(np))
    throw DataError("shape mismatch: use_final does not share the product axis");
  if (io.rows() != static_cast<Eigen::Index>(ns) || io.cols() != static_cast<Eigen::Index>(ns))
    throw DataError("shape mismatch: io is not sector x sector");
  if (firm_count.size() != ns || employee_count.size() != ns)
    throw DataError("shape mismatch: demography does not cover the sector axis");
  if ((supply.array() < 0).any() || (use_final.array() < 0).any() || (io.array() < 0).any())
    throw DataError("negative value in dataset");
  if (!supply.allFinite() || !use_final.allFinite() || !io.allFinite())
    throw DataError("non-finite value in dataset");
  std::set<std::string> unique(sectors.begin(), sectors.end());
  if (unique.size() != ns) throw DataError("duplicate sector code");
}

DataPaths DataPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "supply.csv", dir / "use_final.csv", dir / "io.csv", dir / "demography.csv"};
}

namespace {

// Rejects a table that mixes an aggregate label with one of its members,
// which would double count.
class OverlapGuard {
 public:
  OverlapGuard(const SectorConfig& config, std::string table)
      : config_(config), table_(std::move(table)) {}

  std::optional<std::size_t> map(const std::string& raw) {
    auto agg = config_.aggregate_of(raw);
    if (!agg) return agg;
    auto& members = seen_[*agg];
    members.insert(raw);
    const std::string& label = config_.aggregates()[*agg];
    if (members.size() > 1 && members.count(label))
      throw DataError(table_ + ": sector codes overlap: aggregate '" + label +
                      "' appears together with one of its members");
    return agg;
  }

 private:
  const SectorConfig& config_;
  std::string table_;
  std::map<std::size_t, std::set<std::string>> seen_;
};

}  // namespace

SectorDataset load_dataset(const DataPaths& paths, const SectorConfig& config) {
  SectorDataset ds;
  ds.sectors = config.aggregates();
  const auto ns = ds.sectors.size();

  auto with_file = [](const csv::Table& t, auto&& fn) {
    try {
      fn();
    } catch (const DataError& e) {
      std::string msg = e.what();
      if (msg.find(t.path) == std::string::npos) msg = t.path + ": " + msg;
      throw DataError(msg);
    }
  };

  // Demography fixes the sector axis coverage.
  auto demo = csv::read(paths.demography, {"sector", "firm_count", "employee_count"});
  ds.firm_count.assign(ns, 0);
  ds.employee_count.assign(ns, 0);
  std::vector<bool> covered(ns, false);
  with_file(demo, [&] {
    OverlapGuard guard(config, demo.path);
    std::set<std::string> rows_seen;
    for (std::size_t r = 0; r < demo.rows.size(); ++r) {
      const auto& code = demo.rows[r][0];
      if (!rows_seen.insert(code).second) throw DataError("duplicate sector row '" + code + "'");
      auto s = guard.map(code);
      auto firms = csv::parse_count(demo, r, 1);
      auto employees = csv::parse_count(demo, r, 2);
      if (!s) continue;
      ds.firm_count[*s] += firms;
      ds.employee_count[*s] += employees;
      covered[*s] = true;
    }
  });
  for (std::size_t s = 0; s < ns; ++s)
    if (!covered[s])
      throw DataError(paths.demography.string() + ": shape mismatch: no demography for sector '" +
                      ds.sectors[s] + "'");

  auto sup = csv::read(paths.supply, {"product", "sector", "value"});
  std::map<std::string, std::size_t> product_index;
  std::vector<std::tuple<std::size_t, std::size_t, double>> entries;
  with_file(sup, [&] {
    OverlapGuard guard(config, sup.path);
    for (std::size_t r = 0; r < sup.rows.size(); ++r) {
      const auto& product = sup.rows[r][0];
      auto [it, inserted] = product_index.emplace(product, ds.products.size());
      if (inserted) ds.products.push_back(product);
      auto s = guard.map(sup.rows[r][1]);
      double v = csv::parse_real(sup, r, 2);
      if (s) entries.emplace_back(it->second, *s, v);
    }
  });
  const auto np = ds.products.size();
  if (np == 0) throw DataError(paths.supply.string() + ": no product");
  ds.supply = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(ns));
  for (auto [p, s, v] : entries) ds.supply(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(s)) += v;

  auto use = csv::read(paths.use_final, {"product", "value"});
  ds.use_final = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(np));
  with_file(use, [&] {
    std::vector<bool> seen(np, false);
    for (std::size_t r = 0; r < use.rows.size(); ++r) {
      const auto& product = use.rows[r][0];
      auto it = product_index.find(product);
      if (it == product_index.end())
        throw DataError("shape mismatch: product '" + product + "' is not in the supply table");
      if (seen[it->second]) throw DataError("duplicate product row '" + product + "'");
      seen[it->second] = true;
      ds.use_final(static_cast<Eigen::Index>(it->second)) = csv::parse_real(use, r, 1);
    }
    for (std::size_t p = 0; p < np; ++p)
      if (!seen[p])
        throw DataError("shape mismatch: product '" + ds.products[p] + "' has no final-use row");
  });

  auto io = csv::read(paths.io, {"seller_sector", "buyer_sector", "value"});
  ds.io = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(ns));
  with_file(io, [&] {
    OverlapGuard sellers(config, io.path);
    OverlapGuard buyers(config, io.path);
    for (std::size_t r = 0; r < io.rows.size(); ++r) {
      auto s = sellers.map(io.rows[r][0]);
      auto t = buyers.map(io.rows[r][1]);
      double v = csv::parse_real(io, r, 2);
      if (s && t) ds.io(static_cast<Eigen::Index>(*s), static_cast<Eigen::Index>(*t)) += v;
    }
  });

  ds.validate();
  return ds;
}

// ---- fitnesses -------------------------------------------------------------

FitnessSet compute_fitnesses(const SectorDataset& data, std::size_t nf, RandomStream& rng) {
  data.validate();
  FitnessSet f;

  const double io_total = data.io.sum();
  if (!(io_total > 0.0)) throw DataError("io table is all zero; dyadic propensity undefined");
  f.d = data.io / io_total;

  Eigen::VectorXd overlap = data.supply.transpose() * data.use_final;
  const double overlap_total = overlap.sum();
  if (!(overlap_total > 0.0))
    throw DataError("supply profile has no overlap with household final use; consumption fitness undefined");
  f.x_cons = overlap / overlap_total;

  const auto ns = data.sector_count();
  const double employees = static_cast<double>(
      std::accumulate(data.employee_count.begin(), data.employee_count.end(), std::uint64_t{0}));
  if (!(employees > 0.0)) throw DataError("employee counts are all zero; wage fitness undefined");
  f.x_wage.resize(static_cast<Eigen::Index>(ns));
  for (std::size_t s = 0; s < ns; ++s)
    f.x_wage(static_cast<Eigen::Index>(s)) = static_cast<double>(data.employee_count[s]) / employees;

  f.a.resize(nf);
  for (auto& ai : f.a) ai = rng.uniform();
  return f;
}

// ---- registry --------------------------------------------------------------

std::vector<std::size_t> AgentRegistry::firms_per_sector() const {
  std::vector<std::size_t> n(sectors.size(), 0);
  for (auto s : firm_sector) ++n[s];
  return n;
}

std::vector<std::size_t> AgentRegistry::households_per_sector() const {
  std::vector<std::size_t> n(sectors.size(), 0);
  for (auto s : household_sector) ++n[s];
  return n;
}

std::vector<std::size_t> apportion(std::span<const std::uint64_t> weights, std::size_t total) {
  using u128 = unsigned __int128;
  u128 sum = 0;
  for (auto w : weights) sum += w;
  if (sum == 0) throw DataError("apportionment: all weights are zero");

  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n);
  std::vector<u128> remainder(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    u128 q = static_cast<u128>(total) * weights[i];
    out[i] = static_cast<std::size_t>(q / sum);
    remainder[i] = q % sum;
    assigned += out[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k]];
  return out;
}

AgentRegistry build_registry(const SectorDataset& data, std::size_t nb, std::size_t nf,
                             std::size_t nh, RandomStream& rng) {
  if (nb == 0 || nf == 0 || nh == 0)
    throw ConfigError("agent counts nb, nf, nh must all be at least 1");
  data.validate();

  AgentRegistry reg;
  reg.nb = nb;
  reg.nf = nf;
  reg.nh = nh;
  reg.sectors = data.sectors;

  auto firms = apportion(data.firm_count, nf);
  reg.firm_sector.reserve(nf);
  for (std::size_t s = 0; s < firms.size(); ++s)
    reg.firm_sector.insert(reg.firm_sector.end(), firms[s], static_cast<std::uint32_t>(s));

  const double employees = static_cast<double>(
      std::accumulate(data.employee_count.begin(), data.employee_count.end(), std::uint64_t{0}));
  if (!(employees > 0.0)) throw DataError("employee counts are all zero; households cannot be placed");
  std::vector<double> cumulative;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t s = 0; s < data.employee_count.size(); ++s) {
    acc += static_cast<double>(data.employee_count[s]) / employees;
    cumulative.push_back(acc);
    if (data.employee_count[s] > 0) last_positive = s;
  }
  reg.household_sector.resize(nh);
  for (auto& hs : reg.household_sector) {
    double u = rng.uniform();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t s = static_cast<std::size_t>(it - cumulative.begin());
    // Rounding can leave the last cumulative share just below 1.
    if (s >= cumulative.size()) s = last_positive;
    hs = static_cast<std::uint32_t>(s);
  }
  return reg;
}

}  // namespace sfcnet
