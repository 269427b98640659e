#include "sfcnet/ensembles.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sfcnet/errors.hpp"

namespace sfcnet {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Consumption: return "consumption";
    case LayerKind::Investment: return "investment";
    case LayerKind::Wages: return "wages";
    case LayerKind::LoanInterest: return "loan_interest";
    case LayerKind::DepositInterest: return "deposit_interest";
  }
  return "?";
}

LayerKind layer_from_string(std::string_view name) {
  for (auto k : kAllLayers)
    if (to_string(k) == name) return k;
  throw ConfigError("unknown layer '" + std::string(name) + "'");
}

AgentClass origin_class(LayerKind kind) {
  switch (kind) {
    case LayerKind::Consumption:
    case LayerKind::Investment:
    case LayerKind::Wages: return AgentClass::Firm;
    case LayerKind::LoanInterest:
    case LayerKind::DepositInterest: return AgentClass::Bank;
  }
  return AgentClass::Firm;
}

AgentClass destination_class(LayerKind kind) {
  switch (kind) {
    case LayerKind::Investment:
    case LayerKind::LoanInterest: return AgentClass::Firm;
    case LayerKind::Consumption:
    case LayerKind::Wages:
    case LayerKind::DepositInterest: return AgentClass::Household;
  }
  return AgentClass::Household;
}

std::string_view to_string(ModelType type) {
  switch (type) {
    case ModelType::FicmBlock: return "FiCM-block";
    case ModelType::FicmRandomFitness: return "FiCM-random-fitness";
    case ModelType::Birg: return "BiRG";
    case ModelType::BirgSectored: return "BiRG-sectored";
  }
  return "?";
}

ModelType model_type_from_string(std::string_view name) {
  for (auto t : {ModelType::FicmBlock, ModelType::FicmRandomFitness, ModelType::Birg,
                 ModelType::BirgSectored})
    if (to_string(t) == name) return t;
  throw ConfigError("unknown model type '" + std::string(name) + "'");
}

std::string_view to_string(TopologyModel model) {
  return model == TopologyModel::Block ? "block" : "rfitness";
}

TopologyModel topology_model_from_string(std::string_view name) {
  if (name == "block") return TopologyModel::Block;
  if (name == "rfitness") return TopologyModel::RandomFitness;
  throw ConfigError("unknown topology model '" + std::string(name) + "' (expected block|rfitness)");
}

// ---- LayerModel ------------------------------------------------------------

double LayerModel::pair_weight(std::size_t i, std::size_t j) const {
  if (!admissible(i, j)) return 0.0;
  double g = table(origin_group[i], destination_group[j]);
  if (!origin_weight.empty()) g *= origin_weight[i];
  if (!destination_weight.empty()) g *= destination_weight[j];
  return g;
}

double LayerModel::probability(std::size_t i, std::size_t j) const {
  const double g = pair_weight(i, j);
  if (!is_ficm()) return g;
  const double zg = *z * g;
  return zg / (1.0 + zg);
}

// ---- fitting ---------------------------------------------------------------

double expected_links(std::span<const WeightedFactor> factors, double z) {
  double sum = 0.0;
  for (const auto& f : factors) {
    const double zg = z * f.g;
    sum += f.count * (zg / (1.0 + zg));
  }
  return sum;
}

double fit_z(std::span<const WeightedFactor> factors, double target) {
  if (!(target > 0.0)) throw FitError("link target must be positive");
  double positive_pairs = 0.0;
  for (const auto& f : factors) {
    if (f.g < 0.0 || !std::isfinite(f.g)) throw FitError("pair factors must be finite and nonnegative");
    if (f.g > 0.0) positive_pairs += f.count;
  }
  if (positive_pairs == 0.0) throw FitError("no positive pair factor");
  if (target >= positive_pairs) {
    std::ostringstream os;
    os << "unattainable target: " << target << " links requested, only " << positive_pairs
       << " admissible pairs";
    throw FitError(os.str());
  }

  double lo = 1e-12;
  double hi = 1.0;
  while (expected_links(factors, lo) > target) {
    hi = lo;
    lo *= 0.5;
    if (lo == 0.0) throw FitError("link target too small to bracket");
  }
  while (expected_links(factors, hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw FitError("could not bracket z");
  }

  double z = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    z = 0.5 * (lo + hi);
    const double f = expected_links(factors, z) - target;
    if (std::abs(f) <= 1e-13 * target) break;
    if (f < 0.0) lo = z; else hi = z;
    if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
  }
  const double residual = std::abs(expected_links(factors, z) - target);
  if (residual > 1e-8 * target) {
    std::ostringstream os;
    os << "z fit did not reach the link target (residual " << residual << ")";
    throw FitError(os.str());
  }
  return z;
}

std::vector<WeightedFactor> collect_factors(const LayerModel& m) {
  std::vector<WeightedFactor> out;
  if (m.destination_weight.empty()) {
    // Destinations only differ through their group.
    const auto groups = static_cast<std::size_t>(m.table.cols());
    std::vector<double> per_group(groups, 0.0);
    for (auto g : m.destination_group) per_group[g] += 1.0;
    out.reserve(m.origins * groups);
    for (std::size_t i = 0; i < m.origins; ++i) {
      const double wi = m.origin_weight.empty() ? 1.0 : m.origin_weight[i];
      for (std::size_t c = 0; c < groups; ++c) {
        double count = per_group[c];
        if (m.no_self_loops && i < m.destinations && m.destination_group[i] == c) count -= 1.0;
        if (count <= 0.0) continue;
        out.push_back({wi * m.table(m.origin_group[i], static_cast<Eigen::Index>(c)), count});
      }
    }
  } else {
    out.reserve(m.origins * m.destinations);
    for (std::size_t i = 0; i < m.origins; ++i)
      for (std::size_t j = 0; j < m.destinations; ++j)
        if (m.admissible(i, j)) out.push_back({m.pair_weight(i, j), 1.0});
  }
  return out;
}

double expected_link_count(const LayerModel& m) {
  auto factors = collect_factors(m);
  if (m.is_ficm()) return expected_links(factors, *m.z);
  double sum = 0.0;
  for (const auto& f : factors) sum += f.count * f.g;
  return sum;
}

namespace {

std::vector<std::uint32_t> zeros(std::size_t n) { return std::vector<std::uint32_t>(n, 0); }

Eigen::MatrixXd column(const Eigen::VectorXd& v) { return v; }

void fit(LayerModel& m) {
  auto factors = collect_factors(m);
  m.z = fit_z(factors, m.target_links);
}

void uniform_birg(LayerModel& m, double mean_degree, std::size_t constrained_side) {
  m.target_links = mean_degree * static_cast<double>(constrained_side);
  const double pairs = static_cast<double>(m.origins) * static_cast<double>(m.destinations);
  const double p = m.target_links / pairs;
  if (p > 1.0) {
    std::ostringstream os;
    os << to_string(m.kind) << ": BiRG probability " << p << " > 1 (mean degree " << mean_degree
       << " too large)";
    throw FitError(os.str());
  }
  m.origin_group = zeros(m.origins);
  m.destination_group = zeros(m.destinations);
  m.table = Eigen::MatrixXd::Constant(1, 1, p);
}

}  // namespace

LayerModel build_layer(LayerKind kind, ModelType type, const FitnessSet& fit_in,
                       const AgentRegistry& reg, const DegreeTargets& targets) {
  if (fit_in.a.size() != reg.nf) throw ConfigError("firm fitness count does not match nf");
  if (static_cast<std::size_t>(fit_in.d.rows()) != reg.sectors.size())
    throw ConfigError("fitness sector axis does not match the registry");

  LayerModel m;
  m.kind = kind;
  m.type = type;
  const auto size_of = [&](AgentClass c) {
    return c == AgentClass::Bank ? reg.nb : c == AgentClass::Firm ? reg.nf : reg.nh;
  };
  m.origins = size_of(origin_class(kind));
  m.destinations = size_of(destination_class(kind));

  auto unsupported = [&] {
    throw ConfigError(std::string(to_string(type)) + " is not available for layer " +
                      std::string(to_string(kind)));
  };

  switch (kind) {
    case LayerKind::Investment:
      m.no_self_loops = true;
      if (type == ModelType::Birg) {
        m.target_links = targets.investment * static_cast<double>(reg.nf);
        const double pairs = static_cast<double>(reg.nf) * static_cast<double>(reg.nf - 1);
        if (pairs <= 0.0 || m.target_links > pairs)
          throw FitError("investment: BiRG probability > 1");
        m.origin_group = zeros(reg.nf);
        m.destination_group = zeros(reg.nf);
        m.table = Eigen::MatrixXd::Constant(1, 1, m.target_links / pairs);
        m.fitness_refs = {};
        return m;
      }
      if (type != ModelType::FicmBlock && type != ModelType::FicmRandomFitness) unsupported();
      m.origin_group = reg.firm_sector;
      m.destination_group = reg.firm_sector;
      m.table = fit_in.d;
      m.fitness_refs = {"d"};
      if (type == ModelType::FicmRandomFitness) {
        m.origin_weight = fit_in.a;
        m.destination_weight = fit_in.a;
        m.fitness_refs.push_back("a");
      }
      m.target_links = targets.investment * static_cast<double>(reg.nf);
      fit(m);
      return m;

    case LayerKind::Consumption:
      if (type == ModelType::Birg) {
        uniform_birg(m, targets.consumption, reg.nh);
        return m;
      }
      if (type != ModelType::FicmBlock) unsupported();
      m.origin_group = reg.firm_sector;
      m.destination_group = zeros(reg.nh);
      m.table = column(fit_in.x_cons);
      m.fitness_refs = {"x_cons"};
      m.target_links = targets.consumption * static_cast<double>(reg.nh);
      fit(m);
      return m;

    case LayerKind::Wages:
      if (type == ModelType::Birg) {
        uniform_birg(m, targets.wages, reg.nh);
        return m;
      }
      if (type == ModelType::BirgSectored) {
        const auto firms = reg.firms_per_sector();
        const auto households = reg.households_per_sector();
        const auto ns = reg.sectors.size();
        m.origin_group = reg.firm_sector;
        m.destination_group = reg.household_sector;
        m.table = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(ns));
        for (std::size_t s = 0; s < ns; ++s) {
          if (households[s] == 0) continue;
          if (firms[s] == 0)
            throw FitError("wages: sector '" + reg.sectors[s] +
                           "' has households but no firm (BiRG probability > 1)");
          const double p = targets.wages / static_cast<double>(firms[s]);
          if (p > 1.0)
            throw FitError("wages: BiRG probability > 1 in sector '" + reg.sectors[s] + "'");
          m.table(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = p;
        }
        m.target_links = targets.wages * static_cast<double>(reg.nh);
        return m;
      }
      if (type != ModelType::FicmRandomFitness) unsupported();
      m.origin_group = reg.firm_sector;
      m.destination_group = zeros(reg.nh);
      m.origin_weight = fit_in.a;
      m.table = column(fit_in.x_wage);
      m.fitness_refs = {"x_wage", "a"};
      m.target_links = targets.wages * static_cast<double>(reg.nh);
      fit(m);
      return m;

    case LayerKind::LoanInterest:
      if (type != ModelType::Birg) unsupported();
      uniform_birg(m, targets.loans, reg.nf);
      return m;

    case LayerKind::DepositInterest:
      if (type != ModelType::Birg) unsupported();
      uniform_birg(m, targets.deposits, reg.nh);
      return m;
  }
  return m;
}

std::array<LayerModel, kLayerCount> build_layers(TopologyModel model, const FitnessSet& fitnesses,
                                                 const AgentRegistry& registry,
                                                 const DegreeTargets& targets) {
  const bool rf = model == TopologyModel::RandomFitness;
  return {
      build_layer(LayerKind::Consumption, ModelType::FicmBlock, fitnesses, registry, targets),
      build_layer(LayerKind::Investment, rf ? ModelType::FicmRandomFitness : ModelType::FicmBlock,
                  fitnesses, registry, targets),
      build_layer(LayerKind::Wages, rf ? ModelType::FicmRandomFitness : ModelType::BirgSectored,
                  fitnesses, registry, targets),
      build_layer(LayerKind::LoanInterest, ModelType::Birg, fitnesses, registry, targets),
      build_layer(LayerKind::DepositInterest, ModelType::Birg, fitnesses, registry, targets),
  };
}

// ---- sampling --------------------------------------------------------------

SampledLayer sample_layer(const LayerModel& model, RandomStream& rng) {
  SampledLayer out;
  out.kind = model.kind;
  out.origins = model.origins;
  out.destinations = model.destinations;
  for (std::size_t i = 0; i < model.origins; ++i) {
    for (std::size_t j = 0; j < model.destinations; ++j) {
      const double p = model.probability(i, j);
      if (p <= 0.0) continue;
      if (rng.uniform() < p)
        out.edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    }
  }
  return out;
}

std::vector<std::size_t> SampledLayer::out_degrees() const {
  std::vector<std::size_t> k(origins, 0);
  for (const auto& e : edges) ++k[e.first];
  return k;
}

std::vector<std::size_t> SampledLayer::in_degrees() const {
  std::vector<std::size_t> k(destinations, 0);
  for (const auto& e : edges) ++k[e.second];
  return k;
}

}  // namespace sfcnet
