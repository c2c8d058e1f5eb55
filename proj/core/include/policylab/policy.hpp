#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "policylab/core.hpp"
#include "policylab/dgp.hpp"

namespace policylab {

/// Empirical welfare of a rule on a sample.
struct WelfareEstimate {
  double value = 0.0;
  std::size_t n_used = 0;
  /// Set when the assignment came from a threshold rule.
  std::optional<ThresholdRule> rule;
};

/// Inverse-propensity-weighted welfare
///   (1/n) sum_i [ y d / e * g + y (1 - d) / (1 - e) * (1 - g) ].
/// Throws OverlapError if a propensity is outside (0, 1).
WelfareEstimate ipw_welfare(const Dataset& d, const ThresholdRule& rule);
double ipw_welfare(const Dataset& d, std::span<const int> assignment);

/// Treat-nobody welfare: the untreated term alone.
WelfareEstimate status_quo_welfare(const Dataset& d);

/// IPW value of assigning treatment with probability e(X); equals the sample
/// mean outcome.
WelfareEstimate random_rule_welfare(const Dataset& d);

struct EwmResult {
  WelfareEstimate best;
  std::size_t grid_size = 0;
  /// Rules re-scored exactly after the cumulative-sum pass.
  std::size_t rescored = 0;
};

/// Exhaustive empirical welfare maximization over the class grid. The
/// returned welfare equals the maximum of ipw_welfare over every grid rule;
/// ties go to the lexicographically smallest threshold vector (kNoThreshold
/// first). Grids are materialized from `d` when the class carries only
/// `grid_quantiles`. Throws ConfigError on empty grids, random classes,
/// dimension mismatches, or augmented classes on data without a proxy.
EwmResult ewm_search(const Dataset& d, const PolicyClassSpec& policy_class);

/// First-best assignment 1{tau(x, a) >= 0} evaluated on latent values.
class OracleRule {
 public:
  explicit OracleRule(DgpSpec spec);

  int assign(std::span<const double> covariates, double latent) const;
  int assign(const SyntheticUnit& u) const { return assign(u.covariates, u.latent); }
  /// Throws ConfigError when the observation has no latent value.
  int assign(const Observation& o) const;

  const DgpSpec& spec() const noexcept { return spec_; }

 private:
  DgpSpec spec_;
};

OracleRule first_best_rule(const DgpSpec& spec);

}  // namespace policylab
