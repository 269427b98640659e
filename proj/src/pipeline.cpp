#include "sfcnet/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <thread>

#include "sfcnet/csv.hpp"
#include "sfcnet/errors.hpp"
#include "sfcnet/metrics.hpp"

namespace sfcnet {

// ---- config ----------------------------------------------------------------

void RunConfig::validate() const {
  if (nb < 1 || nf < 1 || nh < 1) throw ConfigError("agent counts must be >= 1 (nb, nf, nh)");
  if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) throw ConfigError("alpha0 must be a positive number");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  const double t[] = {targets.consumption, targets.investment, targets.wages, targets.loans, targets.deposits};
  for (double v : t)
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("degree targets must be positive numbers");
  if (targets.loans > static_cast<double>(nb) || targets.deposits > static_cast<double>(nb))
    throw ConfigError("loan and deposit degree targets cannot exceed nb");
  if (bundle.empty() && data.empty()) throw ConfigError("no data directory (--data) or bundle (--bundle) given");
  if (!(params.lsq_tol > 0.0)) throw ConfigError("lsq tolerance must be positive");
  if (!(params.bayes_sigma > 0.0)) throw ConfigError("bayes sigma must be positive");
  if (params.zero_eps < 0.0) throw ConfigError("zero_eps must be nonnegative");
}

Json RunConfig::to_json() const {
  Json j;
  j["nb"] = nb;
  j["nf"] = nf;
  j["nh"] = nh;
  j["alpha0"] = alpha0;
  j["model"] = sfcnet::to_string(model);
  j["targets"] = sfcnet::to_json(targets);
  j["trials"] = trials;
  j["seed"] = seed;
  j["data"] = data.generic_string();
  j["sector_config"] = sector_config.generic_string();
  j["bundle"] = bundle.generic_string();
  j["solver"] = sfcnet::to_string(solver);
  j["compare"] = compare;
  j["nnls_tol"] = params.nnls.tol;
  j["nnls_max_iter"] = params.nnls.max_iter;
  j["lsq_tol"] = params.lsq_tol;
  j["lsq_max_iter"] = params.lsq_max_iter;
  j["bayes_sigma"] = params.bayes_sigma;
  j["zero_eps"] = params.zero_eps;
  return j;
}

std::string RunConfig::hash() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t RunConfig::thread_count() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

void apply_config_json(RunConfig& c, const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "nb") c.nb = v.get<std::size_t>();
      else if (key == "nf") c.nf = v.get<std::size_t>();
      else if (key == "nh") c.nh = v.get<std::size_t>();
      else if (key == "alpha0") c.alpha0 = v.get<double>();
      else if (key == "model") c.model = topology_model_from_string(v.get<std::string>());
      else if (key == "targets") c.targets = degree_targets_from_json(v, c.targets);
      else if (key == "trials") c.trials = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "data") c.data = v.get<std::string>();
      else if (key == "sector_config") c.sector_config = v.get<std::string>();
      else if (key == "bundle") c.bundle = v.get<std::string>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "solver") c.solver = method_from_string(v.get<std::string>());
      else if (key == "compare") c.compare = v.get<bool>();
      else if (key == "write_system") c.write_system = v.get<bool>();
      else if (key == "threads") c.threads = v.get<std::size_t>();
      else if (key == "nnls_tol") c.params.nnls.tol = v.get<double>();
      else if (key == "nnls_max_iter") c.params.nnls.max_iter = v.get<std::size_t>();
      else if (key == "lsq_tol") c.params.lsq_tol = v.get<double>();
      else if (key == "lsq_max_iter") c.params.lsq_max_iter = v.get<std::size_t>();
      else if (key == "bayes_sigma") c.params.bayes_sigma = v.get<double>();
      else if (key == "zero_eps") c.params.zero_eps = v.get<double>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  RunConfig c;
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  apply_config_json(c, j);
  return c;
}

// ---- bundle ----------------------------------------------------------------

Json to_json(const ModelBundle& b) {
  Json j;
  j["seed"] = b.seed;
  j["model"] = to_string(b.model);
  j["targets"] = to_json(b.targets);
  j["sectors"] = b.sectors;
  j["fitnesses"] = to_json(b.fitnesses);
  j["registry"] = to_json(b.registry);
  Json layers = Json::array();
  for (const auto& l : b.layers) layers.push_back(to_json(l));
  j["layers"] = std::move(layers);
  return j;
}

ModelBundle bundle_from_json(const Json& j) {
  try {
    ModelBundle b;
    b.seed = j.at("seed").get<std::uint64_t>();
    b.model = topology_model_from_string(j.at("model").get<std::string>());
    b.targets = degree_targets_from_json(j.at("targets"));
    b.sectors = j.at("sectors").get<std::vector<std::string>>();
    b.fitnesses = fitness_set_from_json(j.at("fitnesses"));
    b.registry = registry_from_json(j.at("registry"));
    const auto& layers = j.at("layers");
    if (layers.size() != kLayerCount) throw DataError("bundle must hold five layer models");
    for (std::size_t l = 0; l < kLayerCount; ++l) {
      b.layers[l] = layer_model_from_json(layers.at(l));
      if (b.layers[l].kind != kAllLayers[l]) throw DataError("bundle layers out of order");
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bundle: ") + e.what());
  }
}

SectorConfig resolve_sector_config(const RunConfig& config) {
  if (!config.sector_config.empty()) return SectorConfig::from_json(config.sector_config);
  const auto local = config.data / "sectors.json";
  if (std::filesystem::exists(local)) return SectorConfig::from_json(local);
  return SectorConfig::nace_default();
}

ModelBundle fit_bundle(const SectorDataset& data, const RunConfig& config) {
  ModelBundle b;
  b.seed = config.seed;
  b.model = config.model;
  b.targets = config.targets;
  b.sectors = data.sectors;
  auto frng = RandomStream::derive(config.seed, StreamPurpose::Fitness);
  b.fitnesses = compute_fitnesses(data, config.nf, frng);
  auto rrng = RandomStream::derive(config.seed, StreamPurpose::Registry);
  b.registry = build_registry(data, config.nb, config.nf, config.nh, rrng);
  b.layers = build_layers(config.model, b.fitnesses, b.registry, config.targets);
  return b;
}

ModelBundle fit_bundle(const RunConfig& config) {
  if (config.data.empty()) throw ConfigError("no data directory given (--data)");
  if (!std::filesystem::is_directory(config.data))
    throw DataError("data directory '" + config.data.string() + "' does not exist");
  const auto data = load_dataset(DataPaths::in_directory(config.data), resolve_sector_config(config));
  return fit_bundle(data, config);
}

ModelBundle obtain_bundle(const RunConfig& config) {
  if (config.bundle.empty()) return fit_bundle(config);
  auto b = bundle_from_json(read_json(config.bundle));
  const auto& r = b.registry;
  if (r.nb != config.nb || r.nf != config.nf || r.nh != config.nh)
    throw ConfigError("bundle '" + config.bundle.string() + "' was fitted for nb=" + std::to_string(r.nb) +
                      " nf=" + std::to_string(r.nf) + " nh=" + std::to_string(r.nh));
  return b;
}

// ---- trials ----------------------------------------------------------------

MultilayerTopology sample_topology(const ModelBundle& bundle, std::uint64_t seed, std::size_t trial) {
  MultilayerTopology t;
  t.registry = bundle.registry;
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    auto rng = RandomStream::derive(seed, StreamPurpose::Topology, trial, l);
    t.layers[l] = sample_layer(bundle.layers[l], rng);
  }
  return t;
}

namespace {

FlowSolution solve_with(Method m, const LinearSystem& sys, const RunConfig& config,
                        const FlowSolution* reference, const ModelBundle& bundle) {
  switch (m) {
    case Method::Nnls: return solve_nnls(sys, config.params.nnls);
    case Method::LeastNorm: return solve_least_norm(sys, config.params.lsq_tol, config.params.lsq_max_iter);
    case Method::Bayes: return solve_bayes(sys, config.params.bayes_sigma);
    case Method::Dcgm: return dcgm_weights(sys, *reference, bundle.layers);
  }
  throw SolverError("unknown method");
}

}  // namespace

TrialOutcome run_trial(const ModelBundle& bundle, const RunConfig& config, std::size_t trial,
                       const std::vector<Method>& methods) {
  TrialOutcome out;
  out.trial = trial;
  try {
    out.topology = sample_topology(bundle, config.seed, trial);
    out.system = augment_alpha0(assemble(*out.topology), config.alpha0);
  } catch (const std::exception& e) {
    out.error = e.what();
    return out;
  }
  const auto& sys = *out.system;

  std::optional<FlowSolution> nnls;
  std::string nnls_error;
  const bool need_nnls = std::find(methods.begin(), methods.end(), Method::Dcgm) != methods.end() ||
                         std::find(methods.begin(), methods.end(), Method::Nnls) != methods.end();
  if (need_nnls) {
    try {
      nnls = solve_with(Method::Nnls, sys, config, nullptr, bundle);
    } catch (const std::exception& e) {
      nnls_error = e.what();
    }
  }

  for (Method m : methods) {
    MethodOutcome mo;
    mo.method = m;
    try {
      if (m == Method::Nnls) {
        if (!nnls) throw SolverError(nnls_error);
        mo.solution = *nnls;
      } else if (m == Method::Dcgm) {
        if (!nnls) throw SolverError("dcgm: no NNLS reference: " + nnls_error);
        if (!nnls->converged) throw SolverError("dcgm: NNLS reference did not converge");
        mo.solution = solve_with(m, sys, config, &*nnls, bundle);
      } else {
        mo.solution = solve_with(m, sys, config, nullptr, bundle);
      }
      mo.diagnostics = diagnostics(sys, *mo.solution, config.params.zero_eps);
      if (!mo.solution->converged && mo.error.empty())
        mo.error = mo.solution->note.empty() ? "not converged" : mo.solution->note;
    } catch (const std::exception& e) {
      mo.error = e.what();
    }
    out.methods.push_back(std::move(mo));
  }
  return out;
}

void for_each_trial(const ModelBundle& bundle, const RunConfig& config, const std::vector<Method>& methods,
                    const std::function<void(TrialOutcome&&)>& consume) {
  const std::size_t n = config.trials;
  const std::size_t workers = std::min(config.thread_count(), n);
  if (workers <= 1) {
    for (std::size_t t = 0; t < n; ++t) consume(run_trial(bundle, config, t, methods));
    return;
  }

  std::vector<std::optional<TrialOutcome>> slots(n);
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t t; (t = next.fetch_add(1)) < n;) {
        auto outcome = run_trial(bundle, config, t, methods);
        std::lock_guard lock(mu);
        slots[t] = std::move(outcome);
        ready.notify_all();
      }
    });

  for (std::size_t t = 0; t < n; ++t) {
    std::optional<TrialOutcome> item;
    {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return slots[t].has_value(); });
      item = std::move(slots[t]);
      slots[t].reset();
    }
    consume(std::move(*item));
  }
  for (auto& th : pool) th.join();
}

// ---- comparison ------------------------------------------------------------

ComparisonReport compare_methods(const RunConfig& config, const ModelBundle& bundle,
                                 const std::function<void(const TrialOutcome&)>& observe) {
  ComparisonReport report;
  report.seed = config.seed;
  report.config_hash = config.hash();
  report.trials = config.trials;
  for (Method m : kComparedMethods) report.methods.push_back({m, 0.0, 0.0, 0, 0});

  for_each_trial(bundle, config, kComparedMethods, [&](TrialOutcome&& outcome) {
    if (observe) observe(outcome);
    for (std::size_t k = 0; k < kComparedMethods.size(); ++k) {
      TrialRow row;
      row.trial = outcome.trial;
      row.method = kComparedMethods[k];
      if (!outcome.error.empty()) {
        row.error = outcome.error;
      } else {
        const auto& mo = outcome.methods[k];
        row.error = mo.error;
        row.ok = mo.ok() && mo.diagnostics && mo.diagnostics->relative_error_pct;
        if (mo.diagnostics) {
          row.relative_error_pct = mo.diagnostics->relative_error_pct;
          row.negative_pct = mo.diagnostics->negative_pct;
          row.nonzero_count = mo.diagnostics->nonzero_count;
        }
        if (mo.solution) row.iterations = mo.solution->iterations;
      }
      auto& s = report.methods[k];
      if (row.ok) {
        ++s.ok_trials;
        s.mean_relative_error_pct += *row.relative_error_pct;
        s.mean_negative_pct += row.negative_pct;
      } else {
        ++s.failed_trials;
      }
      report.rows.push_back(std::move(row));
    }
  });

  for (auto& s : report.methods)
    if (s.ok_trials > 0) {
      s.mean_relative_error_pct /= static_cast<double>(s.ok_trials);
      s.mean_negative_pct /= static_cast<double>(s.ok_trials);
    }
  return report;
}

Json to_json(const ComparisonReport& r) {
  Json j;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["trials"] = r.trials;
  Json methods = Json::array();
  for (const auto& s : r.methods)
    methods.push_back(Json{{"method", to_string(s.method)},
                           {"mean_relative_error_pct", s.mean_relative_error_pct},
                           {"mean_negative_pct", s.mean_negative_pct},
                           {"ok_trials", s.ok_trials},
                           {"failed_trials", s.failed_trials}});
  j["methods"] = std::move(methods);
  Json rows = Json::array();
  for (const auto& t : r.rows) {
    Json row;
    row["trial"] = t.trial;
    row["method"] = to_string(t.method);
    row["ok"] = t.ok;
    row["relative_error_pct"] = t.relative_error_pct ? Json(*t.relative_error_pct) : Json(nullptr);
    row["negative_pct"] = t.negative_pct;
    row["nonzero_count"] = t.nonzero_count;
    row["iterations"] = t.iterations;
    row["error"] = t.error;
    rows.push_back(std::move(row));
  }
  j["per_trial"] = std::move(rows);
  return j;
}

std::string comparison_csv(const ComparisonReport& r) {
  std::string s = "method,mean_relative_error_pct,mean_negative_pct,ok_trials,failed_trials,trials,seed\n";
  for (const auto& m : r.methods)
    s += std::string(to_string(m.method)) + "," + csv::format(m.mean_relative_error_pct) + "," +
         csv::format(m.mean_negative_pct) + "," + std::to_string(m.ok_trials) + "," +
         std::to_string(m.failed_trials) + "," + std::to_string(r.trials) + "," + std::to_string(r.seed) + "\n";
  return s;
}

// ---- subcommands -----------------------------------------------------------

namespace {

std::string trial_dir(std::size_t trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%04zu", trial);
  return buf;
}

std::string file_tag(const RunConfig& c) { return "s" + std::to_string(c.seed) + "_" + c.hash(); }

void write_trial(const std::filesystem::path& dir, const TrialOutcome& t, bool write_system) {
  const auto& top = *t.topology;
  for (const auto& layer : top.layers)
    write_edge_list(dir / ("edges_" + std::string(to_string(layer.kind)) + ".csv"), layer);
  if (!t.system) return;
  if (write_system) {
    write_triplets(dir / "A.csv", t.system->A);
    write_vector(dir / "b.csv", t.system->b);
    write_json(dir / "index.json", column_index_json(t.system->index));
  }
  Json diag = Json::object();
  for (const auto& mo : t.methods) {
    Json d = mo.diagnostics ? to_json(*mo.diagnostics) : Json::object();
    d["converged"] = mo.solution ? mo.solution->converged : false;
    d["iterations"] = mo.solution ? mo.solution->iterations : 0;
    d["residual_l2"] = mo.solution ? Json(mo.solution->residual_l2) : Json(nullptr);
    d["error"] = mo.error;
    diag[std::string(to_string(mo.method))] = std::move(d);
    if (mo.solution)
      write_solution(dir / ("solution_" + std::string(to_string(mo.method)) + ".csv"), t.system->index,
                     *mo.solution);
  }
  write_json(dir / "diagnostics.json", diag);
}

void log_failures(const TrialOutcome& t) {
  if (!t.error.empty()) std::cerr << "trial " << t.trial << ": " << t.error << "\n";
  for (const auto& mo : t.methods)
    if (!mo.error.empty()) std::cerr << "trial " << t.trial << ": " << to_string(mo.method) << ": " << mo.error << "\n";
}

}  // namespace

int cmd_fit(const RunConfig& config) {
  config.validate();
  const auto bundle = fit_bundle(config);
  const auto path = config.out / ("bundle_" + file_tag(config) + ".json");
  write_json(path, to_json(bundle));
  write_json(config.out / "bundle.json", to_json(bundle));
  std::cout << path.string() << "\n";
  return 0;
}

int cmd_run(const RunConfig& config) {
  config.validate();
  const auto bundle = obtain_bundle(config);
  write_json(config.out / "config.json", config.to_json());

  if (config.compare) {
    const auto report = compare_methods(config, bundle, [&](const TrialOutcome& t) {
      log_failures(t);
      if (t.topology) write_trial(config.out / trial_dir(t.trial), t, config.write_system);
    });
    const auto tag = file_tag(config);
    write_text(config.out / ("comparison_" + tag + ".csv"), comparison_csv(report));
    write_json(config.out / ("comparison_" + tag + ".json"), to_json(report));
    std::cout << comparison_csv(report);
    for (const auto& m : report.methods)
      if (m.failed_trials > 0) return 3;
    return 0;
  }

  std::vector<Method> methods{config.solver};
  std::size_t failures = 0;
  Json summary = Json::array();
  for_each_trial(bundle, config, methods, [&](TrialOutcome&& t) {
    log_failures(t);
    if (t.topology) write_trial(config.out / trial_dir(t.trial), t, config.write_system);
    Json row{{"trial", t.trial}};
    if (!t.error.empty() || !t.methods.front().ok()) ++failures;
    if (!t.error.empty()) {
      row["error"] = t.error;
    } else {
      const auto& mo = t.methods.front();
      row["diagnostics"] = mo.diagnostics ? to_json(*mo.diagnostics) : Json(nullptr);
      row["error"] = mo.error;
    }
    summary.push_back(std::move(row));
  });
  write_json(config.out / ("run_" + std::string(to_string(config.solver)) + "_" + file_tag(config) + ".json"),
             Json{{"seed", config.seed}, {"config_hash", config.hash()}, {"trials", summary}});
  return failures > 0 ? 3 : 0;
}

int cmd_metrics(const RunConfig& config) {
  config.validate();
  const auto bundle = obtain_bundle(config);
  const auto dir = config.out / "metrics";

  // Model-level degrees and ANND per layer, with the sampled degrees of every trial.
  std::vector<MultilayerTopology> topologies;
  for (std::size_t t = 0; t < config.trials; ++t) topologies.push_back(sample_topology(bundle, config.seed, t));

  for (std::size_t l = 0; l < kLayerCount; ++l) {
    const auto& model = bundle.layers[l];
    std::vector<SampledLayer> samples;
    for (const auto& top : topologies) samples.push_back(top.layers[l]);
    const auto stats = degree_stats(model, samples);
    const auto model_annd = annd(model);
    const std::string name(to_string(model.kind));

    std::string s = "side,node,expected_degree,degree_variance,expected_annd";
    for (std::size_t t = 0; t < samples.size(); ++t) s += ",degree_t" + std::to_string(t);
    s += "\n";
    auto emit = [&](const char* side, const SideDegrees& d, const std::vector<std::optional<double>>& a) {
      for (std::size_t v = 0; v < d.expected.size(); ++v) {
        s += std::string(side) + "," + std::to_string(v) + "," + csv::format(d.expected[v]) + "," +
             csv::format(d.variance[v]) + "," + (a[v] ? csv::format(*a[v]) : std::string());
        for (const auto& k : d.sampled) s += "," + std::to_string(k[v]);
        s += "\n";
      }
    };
    emit("origin", stats.out, model_annd.origin);
    emit("destination", stats.in, model_annd.destination);
    write_text(dir / ("degrees_" + name + ".csv"), s);

    std::string a = "trial,side,node,degree,annd\n";
    for (std::size_t t = 0; t < samples.size(); ++t) {
      const auto sa = annd(samples[t]);
      const auto kout = samples[t].out_degrees();
      const auto kin = samples[t].in_degrees();
      for (std::size_t v = 0; v < kout.size(); ++v)
        a += std::to_string(t) + ",origin," + std::to_string(v) + "," + std::to_string(kout[v]) + "," +
             (sa.origin[v] ? csv::format(*sa.origin[v]) : std::string()) + "\n";
      for (std::size_t v = 0; v < kin.size(); ++v)
        a += std::to_string(t) + ",destination," + std::to_string(v) + "," + std::to_string(kin[v]) + "," +
             (sa.destination[v] ? csv::format(*sa.destination[v]) : std::string()) + "\n";
    }
    write_text(dir / ("annd_" + name + ".csv"), a);
  }

  // Budgets and flow-degree tables from the NNLS solution of each trial. A
  // solution written by `run` is reused when present.
  int code = 0;
  for (std::size_t t = 0; t < config.trials; ++t) {
    const auto& top = topologies[t];
    FlowSolution sol;
    try {
      const auto sys = augment_alpha0(assemble(top), config.alpha0);
      const auto saved = config.out / trial_dir(t) / "solution_nnls.csv";
      if (std::filesystem::exists(saved)) {
        sol.xi = read_solution(saved, sys.index);
        sol.converged = true;
      } else {
        sol = solve_nnls(sys, config.params.nnls);
      }
    } catch (const std::exception& e) {
      if (exit_code_for(e) != 3) throw;
      std::cerr << "trial " << t << ": " << e.what() << "\n";
      code = 3;
      continue;
    }
    const auto tdir = dir / trial_dir(t);
    write_budgets(tdir / "budgets.csv", budgets(top, sol));
    for (auto kind : kAllLayers)
      for (auto side : {Side::Origin, Side::Destination})
        write_flow_degree(tdir / ("flow_degree_" + std::string(to_string(kind)) + "_" +
                                  (side == Side::Origin ? "origin" : "destination") + ".csv"),
                          flow_vs_degree(top, sol, kind, side));
  }
  return code;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const FitError*>(&e)) return 1;
  if (dynamic_cast<const DataError*>(&e)) return 2;
  if (dynamic_cast<const SolverError*>(&e) || dynamic_cast<const InfeasibleError*>(&e)) return 3;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return 2;
  return 3;
}

}  // namespace sfcnet
