#include "sfcnet/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <tuple>

#include "sfcnet/csv.hpp"
#include "sfcnet/errors.hpp"

namespace sfcnet {

namespace {

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto r = static_cast<Eigen::Index>(j.size());
  const auto c = r > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != c) throw DataError("ragged matrix in JSON");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

}  // namespace

Json to_json(const LayerModel& m) {
  Json j;
  j["kind"] = to_string(m.kind);
  j["model_type"] = to_string(m.type);
  j["z"] = m.z ? Json(*m.z) : Json(nullptr);
  j["target_links"] = m.target_links;
  j["fitness_refs"] = m.fitness_refs;
  j["origins"] = m.origins;
  j["destinations"] = m.destinations;
  j["no_self_loops"] = m.no_self_loops;
  j["table"] = matrix_json(m.table);
  j["origin_group"] = m.origin_group;
  j["destination_group"] = m.destination_group;
  j["origin_weight"] = m.origin_weight;
  j["destination_weight"] = m.destination_weight;
  return j;
}

LayerModel layer_model_from_json(const Json& j) {
  try {
    LayerModel m;
    m.kind = layer_from_string(j.at("kind").get<std::string>());
    m.type = model_type_from_string(j.at("model_type").get<std::string>());
    if (!j.at("z").is_null()) m.z = j.at("z").get<double>();
    m.target_links = j.at("target_links").get<double>();
    m.fitness_refs = j.at("fitness_refs").get<std::vector<std::string>>();
    m.origins = j.at("origins").get<std::size_t>();
    m.destinations = j.at("destinations").get<std::size_t>();
    m.no_self_loops = j.at("no_self_loops").get<bool>();
    m.table = matrix_from_json(j.at("table"));
    m.origin_group = j.at("origin_group").get<std::vector<std::uint32_t>>();
    m.destination_group = j.at("destination_group").get<std::vector<std::uint32_t>>();
    m.origin_weight = j.at("origin_weight").get<std::vector<double>>();
    m.destination_weight = j.at("destination_weight").get<std::vector<double>>();
    if (m.is_ficm() && !m.z) throw DataError("FiCM layer without z");
    if (m.origin_group.size() != m.origins || m.destination_group.size() != m.destinations)
      throw DataError("group vectors do not match the layer dimensions");
    for (auto g : m.origin_group)
      if (g >= m.table.rows()) throw DataError("origin group outside the table");
    for (auto g : m.destination_group)
      if (g >= m.table.cols()) throw DataError("destination group outside the table");
    if (!m.origin_weight.empty() && m.origin_weight.size() != m.origins)
      throw DataError("origin weights do not match the layer dimensions");
    if (!m.destination_weight.empty() && m.destination_weight.size() != m.destinations)
      throw DataError("destination weights do not match the layer dimensions");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("layer model: ") + e.what());
  }
}

Json to_json(const FitnessSet& f) {
  Json j;
  j["d"] = matrix_json(f.d);
  j["x_cons"] = vector_json(f.x_cons);
  j["x_wage"] = vector_json(f.x_wage);
  j["a"] = f.a;
  return j;
}

FitnessSet fitness_set_from_json(const Json& j) {
  try {
    FitnessSet f;
    f.d = matrix_from_json(j.at("d"));
    f.x_cons = vector_from_json(j.at("x_cons"));
    f.x_wage = vector_from_json(j.at("x_wage"));
    f.a = j.at("a").get<std::vector<double>>();
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("fitnesses: ") + e.what());
  }
}

Json to_json(const AgentRegistry& r) {
  Json j;
  j["nb"] = r.nb;
  j["nf"] = r.nf;
  j["nh"] = r.nh;
  j["sectors"] = r.sectors;
  j["firm_sector"] = r.firm_sector;
  j["household_sector"] = r.household_sector;
  return j;
}

AgentRegistry registry_from_json(const Json& j) {
  try {
    AgentRegistry r;
    r.nb = j.at("nb").get<std::size_t>();
    r.nf = j.at("nf").get<std::size_t>();
    r.nh = j.at("nh").get<std::size_t>();
    r.sectors = j.at("sectors").get<std::vector<std::string>>();
    r.firm_sector = j.at("firm_sector").get<std::vector<std::uint32_t>>();
    r.household_sector = j.at("household_sector").get<std::vector<std::uint32_t>>();
    if (r.firm_sector.size() != r.nf || r.household_sector.size() != r.nh)
      throw DataError("registry: sector vectors do not match nf/nh");
    for (auto s : r.firm_sector)
      if (s >= r.sectors.size()) throw DataError("registry: firm sector out of range");
    for (auto s : r.household_sector)
      if (s >= r.sectors.size()) throw DataError("registry: household sector out of range");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("registry: ") + e.what());
  }
}

Json to_json(const DegreeTargets& t) {
  Json j;
  j["consumption"] = t.consumption;
  j["investment"] = t.investment;
  j["wages"] = t.wages;
  j["loans"] = t.loans;
  j["deposits"] = t.deposits;
  return j;
}

DegreeTargets degree_targets_from_json(const Json& j, DegreeTargets t) {
  if (!j.is_object()) throw ConfigError("degree targets must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw ConfigError("degree target '" + key + "' must be a number");
    const double v = value.get<double>();
    if (key == "consumption") t.consumption = v;
    else if (key == "investment") t.investment = v;
    else if (key == "wages") t.wages = v;
    else if (key == "loans") t.loans = v;
    else if (key == "deposits") t.deposits = v;
    else throw ConfigError("unknown degree target '" + key + "'");
  }
  return t;
}

Json to_json(const SolverDiagnostics& d) {
  Json j;
  j["relative_error_pct"] = d.relative_error_pct ? Json(*d.relative_error_pct) : Json(nullptr);
  j["negative_pct"] = d.negative_pct;
  j["nonzero_count"] = d.nonzero_count;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  close_out(out, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("'" + path.string() + "': " + e.what());
  }
}

void write_edge_list(const std::filesystem::path& path, const SampledLayer& layer) {
  std::string s = "origin,destination\n";
  for (const auto& [o, d] : layer.edges) s += std::to_string(o) + "," + std::to_string(d) + "\n";
  write_text(path, s);
}

SampledLayer read_edge_list(const std::filesystem::path& path, LayerKind kind, std::size_t origins,
                            std::size_t destinations) {
  const auto t = csv::read(path, {"origin", "destination"});
  SampledLayer layer{kind, origins, destinations, {}};
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto o = csv::parse_count(t, r, 0);
    const auto d = csv::parse_count(t, r, 1);
    if (o >= origins || d >= destinations)
      throw DataError(path.string() + ":" + std::to_string(t.line[r]) + ": endpoint out of range");
    layer.edges.emplace_back(static_cast<std::uint32_t>(o), static_cast<std::uint32_t>(d));
  }
  if (!std::is_sorted(layer.edges.begin(), layer.edges.end()) ||
      std::adjacent_find(layer.edges.begin(), layer.edges.end()) != layer.edges.end())
    throw DataError(path.string() + ": edges must be sorted and unique");
  return layer;
}

void write_triplets(const std::filesystem::path& path, const SparseMatrix& A) {
  std::vector<std::tuple<int, int, double>> t;
  t.reserve(static_cast<std::size_t>(A.nonZeros()));
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  std::sort(t.begin(), t.end());
  std::string s = "row,col,val\n";
  for (const auto& [r, c, v] : t) s += std::to_string(r) + "," + std::to_string(c) + "," + csv::format(v) + "\n";
  write_text(path, s);
}

void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v) {
  std::string s = "row,value\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::to_string(i) + "," + csv::format(v(i)) + "\n";
  write_text(path, s);
}

Json column_index_json(const ColumnIndex& index) {
  Json cols = Json::array();
  for (const auto& k : index.keys())
    cols.push_back(Json{{"layer", to_string(k.layer)}, {"origin", k.origin}, {"destination", k.destination}});
  return Json{{"columns", std::move(cols)}};
}

void write_solution(const std::filesystem::path& path, const ColumnIndex& index, const FlowSolution& solution) {
  if (static_cast<std::size_t>(solution.xi.size()) != index.size())
    throw SolverError("solution does not match the column index");
  std::string s = "column_id,layer,origin,destination,value\n";
  for (std::size_t c = 0; c < index.size(); ++c) {
    const auto& k = index.key(c);
    s += std::to_string(c) + "," + std::string(to_string(k.layer)) + "," + std::to_string(k.origin) + "," +
         std::to_string(k.destination) + "," + csv::format(solution.xi(static_cast<Eigen::Index>(c))) + "\n";
  }
  write_text(path, s);
}

Eigen::VectorXd read_solution(const std::filesystem::path& path, const ColumnIndex& index) {
  const auto t = csv::read(path, {"column_id", "layer", "origin", "destination", "value"});
  if (t.rows.size() != index.size())
    throw DataError(path.string() + ": expected " + std::to_string(index.size()) + " rows");
  Eigen::VectorXd xi(static_cast<Eigen::Index>(index.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto c = csv::parse_count(t, r, 0);
    const ColumnKey key{layer_from_string(t.rows[r][1]), static_cast<std::uint32_t>(csv::parse_count(t, r, 2)),
                        static_cast<std::uint32_t>(csv::parse_count(t, r, 3))};
    if (c != r || !(index.key(c) == key))
      throw DataError(path.string() + ":" + std::to_string(t.line[r]) + ": row does not match the column index");
    // Flows may be negative (least-norm), so parse without the nonnegativity guard.
    double v = 0.0;
    const auto& cell = t.rows[r][4];
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
      throw DataError(path.string() + ":" + std::to_string(t.line[r]) + ": bad value '" + cell + "'");
    xi(static_cast<Eigen::Index>(c)) = v;
  }
  return xi;
}

void write_budgets(const std::filesystem::path& path, const std::vector<BudgetRecord>& records) {
  std::string s = "class,id";
  for (auto k : kAllLayers) s += ",in_" + std::string(to_string(k));
  for (auto k : kAllLayers) s += ",out_" + std::string(to_string(k));
  s += ",balance\n";
  for (const auto& r : records) {
    s += std::string(r.cls == AgentClass::Bank ? "bank" : r.cls == AgentClass::Firm ? "firm" : "household");
    s += "," + std::to_string(r.id);
    for (double v : r.inflow) s += "," + csv::format(v);
    for (double v : r.outflow) s += "," + csv::format(v);
    s += "," + csv::format(r.balance()) + "\n";
  }
  write_text(path, s);
}

void write_flow_degree(const std::filesystem::path& path, const std::vector<FlowDegreeRecord>& records) {
  std::string s = "node,degree,flow,sector\n";
  for (const auto& r : records)
    s += std::to_string(r.node) + "," + std::to_string(r.degree) + "," + csv::format(r.flow) + "," + r.sector + "\n";
  write_text(path, s);
}

}  // namespace sfcnet
