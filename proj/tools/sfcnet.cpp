// sfcnet: fit, sample and solve multilayer transaction networks.
//
//   sfcnet fit     --data DIR --out DIR [--seed N] [--nb/--nf/--nh N] [--model block|rfitness]
//   sfcnet run     --data DIR | --bundle FILE  --out DIR [--solver nnls|bayes|lsq|dcgm] [--trials N]
//   sfcnet compare (same as run --compare)
//   sfcnet metrics --data DIR | --bundle FILE  --out DIR [--trials N]
//
// Exit codes: 0 ok, 1 config error, 2 data error, 3 solver failure.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sfcnet/errors.hpp"
#include "sfcnet/pipeline.hpp"

namespace {

struct Overrides {
  std::string config, data, out, bundle, sectors, model, solver;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> nb, nf, nh, trials, threads;
  std::optional<double> alpha0, k_cons, k_inv, k_wage, k_loans, k_dep;
  bool compare = false;
  bool write_system = false;
};

void add_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON config file; flags override it");
  app->add_option("--data", o.data, "directory with supply.csv, use_final.csv, io.csv, demography.csv");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--bundle", o.bundle, "model bundle written by `fit`");
  app->add_option("--sectors", o.sectors, "sector aggregation JSON");
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--nb", o.nb, "banks");
  app->add_option("--nf", o.nf, "firms");
  app->add_option("--nh", o.nh, "households");
  app->add_option("--alpha0", o.alpha0, "household consumption");
  app->add_option("--model", o.model, "block|rfitness");
  app->add_option("--solver", o.solver, "nnls|bayes|lsq|dcgm");
  app->add_option("--trials", o.trials, "number of trials");
  app->add_option("--threads", o.threads, "worker threads (default: all cores)");
  app->add_option("--k-cons", o.k_cons, "suppliers per household");
  app->add_option("--k-inv", o.k_inv, "investment links per firm");
  app->add_option("--k-wage", o.k_wage, "jobs per household");
  app->add_option("--k-loans", o.k_loans, "lenders per firm");
  app->add_option("--k-dep", o.k_dep, "deposit banks per household");
  app->add_flag("--write-system", o.write_system, "also write A, b and the column index per trial");
}

sfcnet::RunConfig resolve(const Overrides& o) {
  sfcnet::RunConfig c = o.config.empty() ? sfcnet::RunConfig{} : sfcnet::load_config(o.config);
  if (!o.data.empty()) c.data = o.data;
  if (!o.out.empty()) c.out = o.out;
  if (!o.bundle.empty()) c.bundle = o.bundle;
  if (!o.sectors.empty()) c.sector_config = o.sectors;
  if (o.seed) c.seed = *o.seed;
  if (o.nb) c.nb = *o.nb;
  if (o.nf) c.nf = *o.nf;
  if (o.nh) c.nh = *o.nh;
  if (o.alpha0) c.alpha0 = *o.alpha0;
  if (!o.model.empty()) c.model = sfcnet::topology_model_from_string(o.model);
  if (!o.solver.empty()) c.solver = sfcnet::method_from_string(o.solver);
  if (o.trials) c.trials = *o.trials;
  if (o.threads) c.threads = *o.threads;
  if (o.k_cons) c.targets.consumption = *o.k_cons;
  if (o.k_inv) c.targets.investment = *o.k_inv;
  if (o.k_wage) c.targets.wages = *o.k_wage;
  if (o.k_loans) c.targets.loans = *o.k_loans;
  if (o.k_dep) c.targets.deposits = *o.k_dep;
  if (o.compare) c.compare = true;
  if (o.write_system) c.write_system = true;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruct multilayer transaction networks and their flows"};
  app.require_subcommand(1);

  Overrides fit_o, run_o, cmp_o, met_o;
  auto* fit = app.add_subcommand("fit", "fit the layer models and write a bundle");
  auto* run = app.add_subcommand("run", "sample topologies and solve for flows");
  auto* cmp = app.add_subcommand("compare", "run NNLS, Bayes and dcGM on every trial");
  auto* met = app.add_subcommand("metrics", "degree, ANND, budget and flow-degree tables");
  add_options(fit, fit_o);
  add_options(run, run_o);
  run->add_flag("--compare", run_o.compare, "compare the three methods");
  add_options(cmp, cmp_o);
  add_options(met, met_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fit) return sfcnet::cmd_fit(resolve(fit_o));
    if (*run) return sfcnet::cmd_run(resolve(run_o));
    if (*cmp) {
      cmp_o.compare = true;
      return sfcnet::cmd_run(resolve(cmp_o));
    }
    if (*met) return sfcnet::cmd_metrics(resolve(met_o));
  } catch (const std::exception& e) {
    std::cerr << "sfcnet: " << e.what() << "\n";
    return sfcnet::exit_code_for(e);
  }
  return 0;
}
