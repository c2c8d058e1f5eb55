#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "policylab/core.hpp"
#include "policylab/dgp.hpp"
#include "policylab/policy.hpp"

namespace policylab {

struct SplitPlan {
  double est_fraction = 0.6;
  std::size_t replications_B = 100;
  std::uint64_t base_seed = 0;
};

struct SampleSplit {
  std::vector<std::size_t> est;
  std::vector<std::size_t> test;
};

/// Seeded random split; the estimation part holds floor(est_fraction * n)
/// units. Throws ConfigError if either part would be empty.
SampleSplit split_sample(std::size_t n, double est_fraction, std::uint64_t seed);

/// Resampled out-of-sample welfare of each rule class.
struct ReplicationReport {
  std::vector<std::string> rules;
  /// welfare[b][r]: test welfare of rule r in replication b.
  std::vector<std::vector<double>> welfare;
  /// Treat-nobody test welfare per replication.
  std::vector<double> status_quo;
  std::vector<double> harm_rate;
  std::vector<double> mean_welfare;
  /// mean_gain[row][col] = mean over b of welfare[b][col] - welfare[b][row].
  std::vector<std::vector<double>> mean_gain;
  std::vector<double> gain_over_status_quo;
  double status_quo_mean = 0.0;
  std::size_t est_size = 0;
  std::size_t test_size = 0;

  std::size_t replications() const noexcept { return welfare.size(); }
};

/// For b = 1..B: split with seed base_seed + b, fit every non-random class by
/// EWM on the estimation part, score it by IPW on the test part. The random
/// benchmark scores the test mean outcome. Harm rates count replications
/// where a rule falls strictly below that replication's status quo.
ReplicationReport run_algorithm1(const Dataset& d, const SplitPlan& plan, std::span<const PolicyClassSpec> classes,
                                 unsigned threads = 1);

/// Welfare of augmented rules as the proxy uses more measurements, averaged
/// over splits and R random selections of t measurements per unit.
struct SweepRow {
  int t = 0;
  double mean_augmented = 0.0;
  double gain_vs_status_quo = 0.0;
  double gain_vs_random = 0.0;
  double gain_vs_cb = 0.0;
  double std_error_vs_cb = 0.0;
  std::size_t short_units = 0;
};

struct MeasurementSweep {
  std::vector<SweepRow> rows;
  double mean_cb = 0.0;
  double mean_random = 0.0;
  double mean_status_quo = 0.0;
};

/// Selection seed for (b, t, r) is base_seed + 100000 b + 1000 t + r.
MeasurementSweep run_measurement_sweep(const Dataset& d, const SplitPlan& plan, const PolicyClassSpec& cb_class,
                                       const PolicyClassSpec& augmented_class, std::span<const int> t_grid,
                                       std::size_t R, unsigned threads = 1);

/// Seed of draw r at measurement count t in split b.
std::uint64_t design_seed(std::uint64_t base_seed, std::size_t b, int t, std::size_t r) noexcept;

/// Seeded shuffle of an estimation pool. Budget-constrained subsamples are
/// prefixes of this order, so a larger budget's draw contains a smaller one's.
std::vector<std::size_t> subsample_order(std::span<const std::size_t> pool, std::uint64_t seed);

/// min(floor(B0 / (cn + ct t)), pool_cap).
std::size_t feasible_n(int t, double B0, double cn, double ct, std::size_t pool_cap);

struct DesignCosts {
  double cn = 0.75;
  double ct = 0.25;
};

struct DesignEvaluation {
  std::vector<double> budgets;
  std::vector<int> t_grid;
  DesignCosts costs;
  std::size_t R = 30;
  PolicyClassSpec cb_class{PolicyKind::covariate_based, {}, {}, 2, 10};
  PolicyClassSpec augmented_class{PolicyKind::augmented, {}, {}, 3, 10};
};

struct FrontierCell {
  double budget = 0.0;
  int t = 0;
  std::size_t n_feasible = 0;
  /// Mean test welfare of the design: the CB rule at t = 0, the augmented
  /// rule otherwise.
  double mean_welfare = 0.0;
  double std_error = 0.0;
  double mean_cb_welfare = 0.0;
  double mean_random_welfare = 0.0;
  bool is_optimal = false;
};

struct BudgetOptimum {
  double budget = 0.0;
  int t_star = 0;
  std::size_t n_star = 0;
  double welfare_star = 0.0;
  std::size_t cb_only_n = 0;
  double cb_only_welfare = 0.0;
  double gain = 0.0;
};

struct DesignFrontier {
  std::vector<FrontierCell> cells;  // budget-major, t-minor
  std::vector<BudgetOptimum> optima;
  /// Units with fewer measurements than the largest t; their proxies average
  /// every measurement they have.
  std::size_t short_units = 0;
  std::size_t est_size = 0;
  std::size_t test_size = 0;
};

/// Budget-constrained design frontier. For each split b (seed
/// base_seed + b), budget and t: draw n(t, B0) units from a seeded shuffle of
/// the estimation pool (a prefix, so larger budgets nest smaller ones), fit,
/// and score on the common test part. For t > 0 each of the R draws uses seed
/// base_seed + 100000 b + 1000 t + r for both the proxy and the subsample.
/// The pool for t > 0 excludes units without measurements; such test units
/// are never treated by augmented rules. Bit-identical for any `threads`.
DesignFrontier run_algorithm2(const Dataset& d, const DesignEvaluation& config, const SplitPlan& plan,
                              unsigned threads = 1);

struct RatePoint {
  std::size_t n = 0;
  double mean_regret = 0.0;
  double std_error = 0.0;
};

struct RateResult {
  std::vector<RatePoint> points;
  /// Least-squares fit of log(mean regret) on log(n).
  double slope = 0.0;
  double intercept = 0.0;
};

/// Regret of EWM against the first-best rule on fresh synthetic samples,
/// using closed-form population welfare for both. `proxy_t` = 0 averages all
/// measurements into the proxy.
RateResult regret_rate_experiment(const DgpSpec& spec, const PolicyClassSpec& policy_class,
                                  std::span<const std::size_t> n_grid, std::size_t reps, unsigned threads = 1,
                                  int proxy_t = 0);

}  // namespace policylab
