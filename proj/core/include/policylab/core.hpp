#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace policylab {

inline constexpr double kNoThreshold = -std::numeric_limits<double>::infinity();

/// One experimental unit.
struct Observation {
  double outcome = 0.0;
  bool treated = false;
  double propensity = 0.5;
  std::vector<double> covariates;
  /// Latent factor; only synthetic samples carry it.
  std::optional<double> latent;
  /// Repeated noisy readings of the latent factor, in collection order.
  /// Missing readings are not stored, so lengths may differ across units.
  std::vector<double> measurements;
  /// Proxy for the latent factor, derived from `measurements`.
  std::optional<double> proxy;
};

struct Dataset {
  std::vector<Observation> observations;
  /// Overlap constant: every propensity should lie in [k, 1-k].
  double overlap_k = 0.1;
  /// Outcomes should lie in [-M/2, M/2]. Infinity disables the check.
  double outcome_bound_M = std::numeric_limits<double>::infinity();

  std::size_t size() const noexcept { return observations.size(); }
  bool empty() const noexcept { return observations.empty(); }
  /// Covariate dimension of the first unit (0 for an empty sample).
  std::size_t dimension() const noexcept;
  bool has_proxy() const noexcept;
  /// Same constants, observations picked by index.
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Rectangular assignment rule: treat iff every covariate is >= its threshold
/// and, for augmented rules, the proxy is strictly above the proxy threshold.
struct ThresholdRule {
  std::vector<double> covariate_thresholds;
  std::optional<double> proxy_threshold;

  bool augmented() const noexcept { return proxy_threshold.has_value(); }
  /// Covariate thresholds followed by the proxy threshold, if any.
  std::vector<double> threshold_vector() const;

  friend bool operator==(const ThresholdRule&, const ThresholdRule&) = default;
};

/// Treat-nobody and treat-everybody rules of a given covariate dimension.
ThresholdRule treat_all_rule(std::size_t dimension, bool augmented = false);

/// {0,1} assignment of `rule` for one unit. Throws ConfigError when an
/// augmented rule meets a unit without a proxy.
int rule_assign(const ThresholdRule& rule, const Observation& o);

/// Assignment vector over a whole sample.
std::vector<int> assign_all(const ThresholdRule& rule, const Dataset& d);

enum class PolicyKind { random, covariate_based, augmented };

std::string_view to_string(PolicyKind kind) noexcept;
/// Accepts the canonical names plus the short forms "cb" and "rand".
PolicyKind parse_policy_kind(std::string_view name);

/// A class of rectangular rules given by a product grid of thresholds.
/// Each grid axis is sorted ascending without duplicates; kNoThreshold, when
/// present, is the first entry. When the grid is empty and `grid_quantiles`
/// is positive, the grid is materialized from the fitting sample.
struct PolicyClassSpec {
  PolicyKind kind = PolicyKind::covariate_based;
  std::vector<std::vector<double>> covariate_grid;
  std::vector<double> proxy_grid;
  int vc_dimension = 1;
  int grid_quantiles = 0;

  /// Number of thresholded axes (d, plus one for augmented classes).
  std::size_t active_dimensions() const noexcept;
  std::size_t grid_size() const noexcept;
  bool has_grid() const noexcept;
};

/// Candidate thresholds for one variable: kNoThreshold followed by the
/// k/q empirical quantiles (lower order statistic, k = 1..q-1), deduplicated.
std::vector<double> quantile_grid(std::span<const double> values, int quantiles);

/// Returns `spec` with its grid built from `d` when the grid is empty.
PolicyClassSpec materialize_grid(const PolicyClassSpec& spec, const Dataset& d);

/// Normalizes a user-supplied grid axis: sort ascending, drop duplicates.
std::vector<double> normalize_axis(std::vector<double> axis);

struct Violation {
  std::string assumption;  // "bounded_outcomes", "strict_overlap", ...
  /// Offending row; empty for dataset-level problems.
  std::optional<std::size_t> row;
  std::string message;
};

/// Numeric check of bounded outcomes and strict overlap plus the structural
/// invariants (shared covariate dimension, k in (0, 1/2]). Never throws.
std::vector<Violation> validate_dataset(const Dataset& d);

}  // namespace policylab
