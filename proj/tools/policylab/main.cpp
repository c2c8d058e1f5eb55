// policylab: command-line front end for the policy-learning toolkit.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "policylab/cli.hpp"
#include "policylab/error.hpp"

using policylab::cli::Command;
using policylab::cli::RunConfig;

namespace {

struct Raw {
  std::string classes, policy_class, budgets, t_grid, n_grid;
};

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--out", c.out_path, "Output file (written atomically); stdout when omitted");
  sub->add_option("--seed", c.seed, "Base seed");
  sub->add_option("--threads", c.threads, "Worker threads; falls back to POLICYLAB_THREADS");
  sub->add_option("--C1", c.constants.C1, "Universal constant C1");
  sub->add_option("--C2", c.constants.C2, "Universal constant C2");
  sub->add_option("--C3", c.constants.C3, "Universal constant C3");
  sub->add_option("--C4", c.constants.C4, "Universal constant C4");
  sub->add_option("--C5", c.constants.C5, "Universal constant C5");
}

void add_sample(CLI::App* sub, RunConfig& c, bool proxy_option = true) {
  sub->add_option("--data", c.data_path, "Dataset CSV (id,y,d,e,x1..xd,m1..mk)")->required();
  sub->add_option("--k", c.overlap_k, "Overlap constant; default min over rows of min(e, 1-e)");
  sub->add_option("--M", c.outcome_bound_M, "Outcome range; default 2 max |y|");
  sub->add_option("--grid-quantiles", c.grid_quantiles, "Quantile grid resolution per axis");
  sub->add_option("--vc", c.vc_dimension, "VC dimension recorded for the class");
  if (proxy_option) sub->add_option("--t", c.proxy_t, "Measurements averaged into the proxy (0: all)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy learning with noisily measured latent heterogeneity"};
  app.require_subcommand(1);
  RunConfig c;
  Raw raw;

  auto* gen = app.add_subcommand("gen", "Draw a synthetic dataset from a DGP spec");
  gen->add_option("--spec", c.spec_path, "DGP spec JSON")->required();
  gen->add_option("--n", c.n, "Number of units")->required();
  add_common(gen, c);

  auto* ewm = app.add_subcommand("ewm", "Fit the welfare-maximizing threshold rule");
  add_sample(ewm, c);
  ewm->add_option("--class", raw.policy_class, "random, cb or augmented")->default_val("augmented");
  add_common(ewm, c);

  auto* eval = app.add_subcommand("eval", "Resampled out-of-sample welfare of rule classes");
  add_sample(eval, c);
  eval->add_option("--B", c.B, "Replications");
  eval->add_option("--est-frac", c.est_fraction, "Estimation share of each split");
  eval->add_option("--classes", raw.classes, "Comma list of classes")->default_val("random,cb,augmented");
  eval->add_option("--plot", c.plot_path, "Long-format welfare CDF data");
  add_common(eval, c);

  auto* design = app.add_subcommand("design", "Welfare frontier over budgets and measurement counts");
  add_sample(design, c, false);
  design->add_option("--budgets", raw.budgets, "lo:hi:step or comma list")->required();
  design->add_option("--t", raw.t_grid, "Measurement counts, e.g. 0..5")->default_val("0..5");
  design->add_option("--cn", c.cn, "Cost per policy-learning unit");
  design->add_option("--ct", c.ct, "Cost per measurement");
  design->add_option("--B", c.B, "Replications");
  design->add_option("--R", c.R, "Measurement draws per (split, t)");
  design->add_option("--est-frac", c.est_fraction, "Estimation share of each split");
  design->add_option("--plot", c.plot_path, "Long-format frontier data");
  add_common(design, c);

  auto* plan = app.add_subcommand("plan", "Minimax optimal budget split between units and measurements");
  plan->add_option("--problem", c.problem_path, "Design problem JSON")->required();
  add_common(plan, c);

  auto* bounds = app.add_subcommand("bounds", "Evaluate the regret bounds and the class comparison");
  bounds->add_option("--problem", c.problem_path, "Bound inputs JSON")->required();
  add_common(bounds, c);

  auto* rate = app.add_subcommand("rate", "Simulated regret against n on a synthetic DGP");
  rate->add_option("--spec", c.spec_path, "DGP spec JSON")->required();
  rate->add_option("--class", raw.policy_class, "cb or augmented")->default_val("augmented");
  rate->add_option("--n-grid", raw.n_grid, "Comma list of sample sizes")->default_val("250,1000,4000,16000");
  rate->add_option("--reps", c.reps, "Samples per n");
  rate->add_option("--grid-quantiles", c.grid_quantiles, "Quantile grid resolution per axis");
  rate->add_option("--vc", c.vc_dimension, "VC dimension recorded for the class");
  rate->add_option("--t", c.proxy_t, "Measurements averaged into the proxy (0: all)");
  add_common(rate, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << policylab::cli::error_json("usage_error", e.what(), policylab::cli::kUsage).dump() << "\n";
    return policylab::cli::kUsage;
  }

  try {
    c.command = policylab::cli::parse_command(app.get_subcommands().front()->get_name());
    if (!raw.policy_class.empty()) c.policy_class = policylab::cli::parse_class_list(raw.policy_class).at(0);
    if (!raw.classes.empty()) c.classes = policylab::cli::parse_class_list(raw.classes);
    if (!raw.budgets.empty()) c.budgets = policylab::cli::parse_budget_list(raw.budgets);
    if (c.command == Command::design) c.t_grid = policylab::cli::parse_int_range(raw.t_grid);
    if (!raw.n_grid.empty()) c.n_grid = policylab::cli::parse_size_list(raw.n_grid);
  } catch (const policylab::Error& e) {
    std::cerr << policylab::cli::error_json("usage_error", e.what(), policylab::cli::kUsage).dump() << "\n";
    return policylab::cli::kUsage;
  }
  return policylab::cli::dispatch(c, std::cerr);
}
