// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
//
//   1 solver comparison     100 trials at nb=3, nf=100, nh=1000, random fitness
//   2 oracle equivalence    NNLS, least-norm and Bayes against dense oracles
//   3 ensemble constraints  link-count fits and sampled link counts
//   4 structural invariants columns, density, complete column count
//   5 flow properties       consumption, budgets, Is/Cs, wage/deposit sign
//   6 stylized facts        degree-ANND correlation of the investment layer
//   7 determinism           byte-identical outputs across runs and threads

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "sfcnet/metrics.hpp"
#include "sfcnet/pipeline.hpp"

using namespace sfcnet;
namespace fs = std::filesystem;

namespace {

// ---- pinned settings -------------------------------------------------------

constexpr std::uint64_t kSeed = 1;
constexpr std::size_t kComparisonTrials = 100;
constexpr double kNnlsMaxErrorPct = 1.0;
constexpr double kBayesMaxErrorPct = 1.0;
constexpr double kBayesNegLo = 5.0, kBayesNegHi = 40.0;
constexpr double kDcgmMinRatio = 10.0;
constexpr std::size_t kBayesMinOkTrials = 90;

constexpr int kOracleSystems = 60;
constexpr double kNnlsObjectiveTol = 1e-8;
constexpr double kLeastNormTol = 1e-8;
constexpr double kBayesTol = 1e-6;

constexpr double kFitTol = 1e-8;
constexpr int kEnsembleSamples = 1000;
constexpr double kSeBound = 3.0;

constexpr std::size_t kStructureTrials = 10;

constexpr double kBudgetFactor = 10.0;
constexpr std::size_t kFlowTrials = 10;
constexpr double kIsCsMax = 0.1;

constexpr std::size_t kAnndFirms = 300;
constexpr int kAnndSamples = 20;

constexpr std::size_t kDeterminismTrials = 3;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

RunConfig reference_config(TopologyModel model = TopologyModel::RandomFitness) {
  RunConfig c;
  c.nb = 3;
  c.nf = 100;
  c.nh = 1000;
  c.alpha0 = 1.0;
  c.model = model;
  c.seed = kSeed;
  c.data = testing::synthetic_dir();
  return c;
}

double nnls_tol(const LinearSystem& sys) { return 1e-8 * (sys.A.transpose() * sys.b).cwiseAbs().maxCoeff(); }

// ---- 5: accumulated from the criterion-1 trials ------------------------------

struct FlowEvidence {
  std::size_t checked = 0;
  std::size_t skipped_infeasible = 0;
  double worst_consumption = 0.0;
  double worst_balance = 0.0;
  double worst_bound = 0.0;
  bool within = true;
  std::vector<double> is, cs, wage, deposit;
};

void collect_flows(const TrialOutcome& t, FlowEvidence& ev) {
  if (!t.topology || !t.system) return;
  const auto& mo = t.methods.front();
  if (mo.method != Method::Nnls || !mo.ok()) return;
  // The budget identities only hold on systems that admit a solution.
  if (!households_without_income(*t.topology).empty()) {
    ++ev.skipped_infeasible;
    return;
  }
  ++ev.checked;
  const double bound = kBudgetFactor * nnls_tol(*t.system);
  ev.worst_bound = std::max(ev.worst_bound, bound);
  const auto rec = budgets(*t.topology, *mo.solution);
  for (const auto& r : rec) {
    ev.worst_balance = std::max(ev.worst_balance, std::abs(r.balance()));
    if (std::abs(r.balance()) > bound) ev.within = false;
    if (r.cls == AgentClass::Household) {
      const double dev = std::abs(r.expense(LayerKind::Consumption) - t.system->alpha0.value());
      ev.worst_consumption = std::max(ev.worst_consumption, dev);
      if (dev > bound) ev.within = false;
    }
  }
  if (t.trial < kFlowTrials) {
    for (const auto& f : flow_vs_degree(*t.topology, *mo.solution, LayerKind::Investment, Side::Origin))
      ev.is.push_back(f.flow);
    for (const auto& f : flow_vs_degree(*t.topology, *mo.solution, LayerKind::Consumption, Side::Origin))
      ev.cs.push_back(f.flow);
    for (const auto& r : rec)
      if (r.cls == AgentClass::Household) {
        ev.wage.push_back(r.income(LayerKind::Wages));
        ev.deposit.push_back(r.income(LayerKind::DepositInterest));
      }
  }
}

// ---- 1 ---------------------------------------------------------------------

Verdict solver_comparison(FlowEvidence& ev) {
  Verdict v;
  auto c = reference_config();
  c.trials = kComparisonTrials;
  const auto bundle = fit_bundle(c);
  const auto report = compare_methods(c, bundle, [&](const TrialOutcome& t) { collect_flows(t, ev); });

  std::map<Method, MethodSummary> m;
  for (const auto& s : report.methods) m[s.method] = s;
  const auto& nn = m[Method::Nnls];
  const auto& ba = m[Method::Bayes];
  const auto& dc = m[Method::Dcgm];
  bool every_nnls_zero = true;
  for (const auto& row : report.rows)
    if (row.method == Method::Nnls && row.ok && row.negative_pct != 0.0) every_nnls_zero = false;

  v.detail << "trials=" << report.trials << " nnls(err%=" << fmt(nn.mean_relative_error_pct)
           << ", neg%=" << fmt(nn.mean_negative_pct) << ", ok=" << nn.ok_trials << ")"
           << " bayes(err%=" << fmt(ba.mean_relative_error_pct) << ", neg%=" << fmt(ba.mean_negative_pct)
           << ", ok=" << ba.ok_trials << ", failed=" << ba.failed_trials << ")"
           << " dcgm(err%=" << fmt(dc.mean_relative_error_pct) << ", neg%=" << fmt(dc.mean_negative_pct)
           << ", ok=" << dc.ok_trials << ")";
  v.require(report.trials == kComparisonTrials, "trial count");
  v.require(nn.failed_trials == 0 && nn.ok_trials == kComparisonTrials, "nnls converged in every trial");
  v.require(nn.mean_relative_error_pct <= kNnlsMaxErrorPct, "nnls error <= 1%");
  v.require(every_nnls_zero && nn.mean_negative_pct == 0.0, "nnls negative% == 0");
  v.require(ba.ok_trials >= kBayesMinOkTrials, "bayes ok trials >= 90");
  v.require(ba.mean_relative_error_pct <= kBayesMaxErrorPct, "bayes error <= 1%");
  v.require(ba.mean_negative_pct >= kBayesNegLo && ba.mean_negative_pct <= kBayesNegHi, "bayes negative% in [5,40]");
  v.require(dc.failed_trials == 0, "dcgm in every trial");
  v.require(dc.mean_relative_error_pct >= kDcgmMinRatio * nn.mean_relative_error_pct, "dcgm error >= 10x nnls");
  v.require(dc.mean_negative_pct == 0.0, "dcgm negative% == 0");
  return v;
}

// ---- 2 ---------------------------------------------------------------------

double binomial_sum(int n, int kmax) {
  double total = 0.0, c = 1.0;
  for (int k = 1; k <= kmax; ++k) {
    c = c * (n - k + 1) / k;
    total += c;
  }
  return total;
}

Verdict oracle_equivalence() {
  Verdict v;
  auto rng = RandomStream::derive(kSeed, StreamPurpose::Topology, 900, 0);
  double worst_nnls = 0.0, worst_lsq = 0.0, worst_bayes = 0.0;
  int max_cols = 0;
  int nnls_done = 0;
  while (nnls_done < kOracleSystems) {
    const int n = testing::uniform_int(rng, 1, 30);
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    if (nnls_done % 2 == 0) {
      const int m = testing::uniform_int(rng, 1, 8);
      if (binomial_sum(n, std::min(n, m)) > 3e5) continue;
      A = testing::gaussian_matrix(rng, m, n);
      b.resize(m);
      for (int i = 0; i < m; ++i) b(i) = testing::normal(rng);
    } else {
      const int agents = testing::uniform_int(rng, 2, 5), extra = testing::uniform_int(rng, 1, 3);
      if (binomial_sum(n, std::min(n, agents + extra)) > 3e5) continue;
      A = testing::incidence_matrix(rng, agents, extra, n);
      b = Eigen::VectorXd::Zero(agents + extra);
      for (int i = 0; i < extra; ++i) b(agents + i) = 0.5 + rng.uniform();
    }
    const auto r = solve_nnls(testing::to_sparse(A), b);
    const double gap = std::abs((A * r.solution.xi - b).squaredNorm() - testing::nnls_oracle(A, b));
    worst_nnls = std::max(worst_nnls, gap);
    v.require(r.solution.converged && (r.solution.xi.array() >= 0.0).all(), "nnls feasible");
    max_cols = std::max(max_cols, n);
    ++nnls_done;
  }
  for (int rep = 0; rep < kOracleSystems; ++rep) {
    const int n = testing::uniform_int(rng, 2, 30);
    const int m = testing::uniform_int(rng, 1, std::min(n - 1, 12));
    const Eigen::MatrixXd A = testing::gaussian_matrix(rng, m, n);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) b(i) = testing::normal(rng);
    const auto S = testing::to_sparse(A);
    const auto lsq = solve_least_norm(S, b, 1e-14);
    const Eigen::VectorXd ref = testing::dense_least_norm(A, b);
    worst_lsq = std::max(worst_lsq, (lsq.solution.xi - ref).cwiseAbs().maxCoeff() /
                                        std::max(1.0, ref.cwiseAbs().maxCoeff()));
    const auto bayes = solve_bayes(S, b, Eigen::VectorXd::Zero(n), 1.0);
    worst_bayes = std::max(worst_bayes, (bayes.xi - lsq.solution.xi).norm() /
                                            std::max(1.0, lsq.solution.xi.norm()));
  }
  v.detail << "systems=" << kOracleSystems << "x3 max_cols=" << max_cols << " nnls_obj_gap=" << fmt(worst_nnls)
           << " lsq_dev=" << fmt(worst_lsq) << " bayes_vs_lsq=" << fmt(worst_bayes);
  v.require(worst_nnls <= kNnlsObjectiveTol, "nnls objective within 1e-8");
  v.require(worst_lsq <= kLeastNormTol, "least-norm within 1e-8");
  v.require(worst_bayes <= kBayesTol, "bayes within 1e-6 of least-norm");
  return v;
}

// ---- 3 ---------------------------------------------------------------------

Verdict ensemble_constraints() {
  Verdict v;
  double worst_fit = 0.0, worst_se = 0.0, wage_se = 0.0;
  for (auto model : {TopologyModel::RandomFitness, TopologyModel::Block}) {
    const auto bundle = fit_bundle(reference_config(model));
    std::array<std::vector<double>, kLayerCount> counts;
    std::vector<double> wage_degrees(bundle.registry.nh, 0.0);
    for (int s = 0; s < kEnsembleSamples; ++s) {
      for (std::size_t l = 0; l < kLayerCount; ++l) {
        auto rng = RandomStream::derive(kSeed, StreamPurpose::Topology, 10000 + static_cast<std::uint64_t>(s), l);
        const auto layer = sample_layer(bundle.layers[l], rng);
        counts[l].push_back(static_cast<double>(layer.edges.size()));
        if (bundle.layers[l].type == ModelType::BirgSectored)
          for (const auto& [i, j] : layer.edges) wage_degrees[j] += 1.0;
      }
    }
    for (std::size_t l = 0; l < kLayerCount; ++l) {
      const auto& m = bundle.layers[l];
      const double L = m.target_links;
      worst_fit = std::max(worst_fit, std::abs(expected_link_count(m) - L) / L);
      const auto st = degree_stats(m);
      double var = 0.0;
      for (double x : st.out.variance) var += x;
      double mean = 0.0;
      for (double x : counts[l]) mean += x;
      mean /= kEnsembleSamples;
      const double se = std::sqrt(var / kEnsembleSamples);
      worst_se = std::max(worst_se, std::abs(mean - L) / se);
      if (m.type == ModelType::BirgSectored) {
        double total = 0.0;
        for (double d : wage_degrees) total += d;
        const double hmean = total / (static_cast<double>(m.destinations) * kEnsembleSamples);
        double hv = 0.0;
        for (double x : st.in.variance) hv += x;
        const double hse = std::sqrt(hv / kEnsembleSamples) / static_cast<double>(m.destinations);
        wage_se = std::abs(hmean - bundle.targets.wages) / hse;
        v.detail << " wage_household_mean=" << fmt(hmean);
        v.require(wage_se <= kSeBound, "household wage degree within 3 SE of k_wage");
      }
    }
  }
  v.detail << " worst_fit_rel=" << fmt(worst_fit) << " worst_count_dev_se=" << fmt(worst_se)
           << " wage_dev_se=" << fmt(wage_se) << " samples=" << kEnsembleSamples;
  v.require(worst_fit <= kFitTol, "sum p within 1e-8 L*");
  v.require(worst_se <= kSeBound, "edge counts within 3 SE");
  return v;
}

// ---- 4 ---------------------------------------------------------------------

Verdict structural_invariants() {
  Verdict v;
  const auto c = reference_config();
  const auto bundle = fit_bundle(c);
  std::size_t columns = 0;
  bool balanced = true;
  double density_dev = 0.0, density = 0.0;
  for (std::size_t t = 0; t < kStructureTrials; ++t) {
    const auto top = sample_topology(bundle, kSeed, t);
    const auto sys = assemble(top);
    for (int k = 0; k < sys.A.outerSize(); ++k) {
      int nnz = 0;
      double sum = 0.0;
      for (SparseMatrix::InnerIterator it(sys.A, k); it; ++it) {
        ++nnz;
        sum += it.value();
      }
      if (nnz != 2 || sum != 0.0) balanced = false;
      ++columns;
    }
    density = sfcnet::density(sys);
    density_dev = std::max(density_dev, std::abs(density - 2.0 / static_cast<double>(sys.rows())));
  }
  const auto complete = complete_column_count(c.nb, c.nf, c.nh);
  v.detail << "columns_checked=" << columns << " density=" << fmt(density) << " (2/1103=" << fmt(2.0 / 1103.0)
           << ") complete_columns=" << complete;
  v.require(balanced, "two nonzeros summing to 0 per column");
  v.require(density_dev <= 1e-15, "density == 2/rows");
  v.require(complete == 213200, "complete column count 213200");
  return v;
}

// ---- 5 ---------------------------------------------------------------------

Verdict flow_properties(const FlowEvidence& ev) {
  Verdict v;
  const double ratio = median(ev.is) / median(ev.cs);
  const auto corr = pearson(ev.wage, ev.deposit);
  v.detail << "trials_checked=" << ev.checked << " skipped_without_income=" << ev.skipped_infeasible
           << " worst_consumption_dev=" << fmt(ev.worst_consumption) << " worst_balance=" << fmt(ev.worst_balance)
           << " bound=" << fmt(ev.worst_bound) << " median_Is/median_Cs=" << fmt(ratio)
           << " corr(wage,deposit)=" << (corr ? fmt(*corr) : std::string("undefined"));
  v.require(ev.checked > 0, "at least one feasible trial");
  v.require(ev.within, "consumption and budgets within 10x tol");
  v.require(ratio < kIsCsMax, "median Is / median Cs < 0.1");
  v.require(corr.has_value() && *corr < 0.0, "corr(wage, deposit) < 0");
  return v;
}

// ---- 6 ---------------------------------------------------------------------

std::optional<double> investment_correlation(const fs::path& data, TopologyModel model, std::size_t nf) {
  auto c = reference_config(model);
  c.data = data;
  c.nf = nf;
  const auto bundle = fit_bundle(c);
  const auto idx = static_cast<std::size_t>(LayerKind::Investment);
  std::vector<SampledLayer> samples;
  for (int s = 0; s < kAnndSamples; ++s) {
    auto rng = RandomStream::derive(kSeed, StreamPurpose::Topology, static_cast<std::uint64_t>(s), idx);
    samples.push_back(sample_layer(bundle.layers[idx], rng));
  }
  return degree_annd_correlation(samples);
}

Verdict stylized_facts() {
  Verdict v;
  const auto block = investment_correlation(testing::synthetic_dir(), TopologyModel::Block, kAnndFirms);
  const auto rfit = investment_correlation(testing::synthetic_dir(), TopologyModel::RandomFitness, kAnndFirms);
  const auto tab_block = investment_correlation(testing::three_sector_dir(), TopologyModel::Block, kAnndFirms);
  const auto tab_rfit = investment_correlation(testing::three_sector_dir(), TopologyModel::RandomFitness, kAnndFirms);
  auto show = [](const std::optional<double>& x) { return x ? fmt(*x) : std::string("undefined"); };
  v.detail << "synthetic nf=" << kAnndFirms << " samples=" << kAnndSamples << " block=" << show(block)
           << " rfitness=" << show(rfit) << " (info, 3-sector fixture: block=" << show(tab_block)
           << " rfitness=" << show(tab_rfit) << ")";
  v.require(block.has_value() && *block > 0.0, "block correlation > 0");
  v.require(rfit.has_value() && *rfit <= 0.0, "random-fitness correlation <= 0");
  return v;
}

// ---- 7 ---------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = testing::read_file(e.path());
  return out;
}

Verdict determinism() {
  Verdict v;
  auto c = reference_config();
  c.trials = kDeterminismTrials;
  c.compare = true;
  c.write_system = true;
  std::vector<std::map<std::string, std::string>> snaps;
  const std::size_t threads[] = {1, 3, 1};
  for (std::size_t k = 0; k < 3; ++k) {
    c.out = testing::scratch("acceptance_det_" + std::to_string(k));
    c.threads = threads[k];
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    cmd_fit(c);
    cmd_run(c);
    cmd_metrics(c);
    std::cout.rdbuf(old);
    snaps.push_back(snapshot(c.out));
  }
  std::size_t bytes = 0;
  for (const auto& [name, text] : snaps[0]) bytes += text.size();
  v.detail << "files=" << snaps[0].size() << " bytes=" << bytes << " threads=1,3,1 trials=" << kDeterminismTrials;
  v.require(!snaps[0].empty(), "outputs written");
  v.require(snaps[0] == snaps[1], "threads 1 vs 3 identical");
  v.require(snaps[0] == snaps[2], "repeat run identical");
  return v;
}

}  // namespace

// Optional arguments select criteria by number; 5 needs 1.
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int k = 1; k < argc; ++k) only.push_back(std::atoi(argv[k]));
  bool all = true;
  auto report = [&](int id, const char* name, auto&& fn) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) return;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << v.detail.str()
              << " [" << fmt(secs) << " s]" << std::endl;
  };

  FlowEvidence ev;
  report(1, "solver comparison", [&] { return solver_comparison(ev); });
  report(2, "oracle equivalence", [] { return oracle_equivalence(); });
  report(3, "ensemble constraints", [] { return ensemble_constraints(); });
  report(4, "structural invariants", [] { return structural_invariants(); });
  report(5, "flow properties", [&] { return flow_properties(ev); });
  report(6, "topology stylized facts", [] { return stylized_facts(); });
  report(7, "determinism", [] { return determinism(); });
  return all ? 0 : 1;
}
