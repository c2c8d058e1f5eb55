#include "policylab/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "policylab/error.hpp"
#include "policylab/parallel.hpp"

namespace policylab {

unsigned default_thread_count() {
  if (const char* env = std::getenv("POLICYLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::size_t Dataset::dimension() const noexcept {
  return observations.empty() ? 0 : observations.front().covariates.size();
}

bool Dataset::has_proxy() const noexcept {
  return !observations.empty() &&
         std::all_of(observations.begin(), observations.end(), [](const Observation& o) { return o.proxy.has_value(); });
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.overlap_k = overlap_k;
  out.outcome_bound_M = outcome_bound_M;
  out.observations.reserve(indices.size());
  for (auto i : indices) out.observations.push_back(observations.at(i));
  return out;
}

std::vector<double> ThresholdRule::threshold_vector() const {
  std::vector<double> v = covariate_thresholds;
  if (proxy_threshold) v.push_back(*proxy_threshold);
  return v;
}

ThresholdRule treat_all_rule(std::size_t dimension, bool augmented) {
  ThresholdRule rule;
  rule.covariate_thresholds.assign(dimension, kNoThreshold);
  if (augmented) rule.proxy_threshold = kNoThreshold;
  return rule;
}

int rule_assign(const ThresholdRule& rule, const Observation& o) {
  if (rule.covariate_thresholds.size() != o.covariates.size()) {
    throw ConfigError("rule has " + std::to_string(rule.covariate_thresholds.size()) +
                      " covariate thresholds but the observation has " + std::to_string(o.covariates.size()) +
                      " covariates");
  }
  if (rule.proxy_threshold && !o.proxy) {
    throw ConfigError("augmented rule applied to an observation without a proxy");
  }
  for (std::size_t j = 0; j < o.covariates.size(); ++j) {
    if (!(o.covariates[j] >= rule.covariate_thresholds[j])) return 0;
  }
  if (rule.proxy_threshold && !(*o.proxy > *rule.proxy_threshold)) return 0;
  return 1;
}

std::vector<int> assign_all(const ThresholdRule& rule, const Dataset& d) {
  std::vector<int> g(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) g[i] = rule_assign(rule, d.observations[i]);
  return g;
}

std::string_view to_string(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::random: return "random";
    case PolicyKind::covariate_based: return "covariate_based";
    case PolicyKind::augmented: return "augmented";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "random" || name == "rand") return PolicyKind::random;
  if (name == "covariate_based" || name == "cb") return PolicyKind::covariate_based;
  if (name == "augmented" || name == "ahat" || name == "a-cb") return PolicyKind::augmented;
  throw ConfigError("unknown policy class '" + std::string(name) + "'");
}

std::size_t PolicyClassSpec::active_dimensions() const noexcept {
  if (kind == PolicyKind::random) return 0;
  return covariate_grid.size() + (kind == PolicyKind::augmented ? 1 : 0);
}

std::size_t PolicyClassSpec::grid_size() const noexcept {
  if (kind == PolicyKind::random) return 0;
  std::size_t size = 1;
  for (const auto& axis : covariate_grid) size *= axis.size();
  if (kind == PolicyKind::augmented) size *= proxy_grid.size();
  return size;
}

bool PolicyClassSpec::has_grid() const noexcept {
  switch (kind) {
    case PolicyKind::random: return false;
    case PolicyKind::covariate_based: return !covariate_grid.empty();
    case PolicyKind::augmented: return !proxy_grid.empty();
  }
  return false;
}

std::vector<double> normalize_axis(std::vector<double> axis) {
  std::erase_if(axis, [](double v) { return std::isnan(v); });
  std::sort(axis.begin(), axis.end());
  axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
  return axis;
}

std::vector<double> quantile_grid(std::span<const double> values, int quantiles) {
  std::vector<double> sorted;
  sorted.reserve(values.size());
  for (double v : values) {
    if (std::isfinite(v)) sorted.push_back(v);
  }
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> axis{kNoThreshold};
  const std::size_t n = sorted.size();
  if (n > 0 && quantiles > 1) {
    const auto q = static_cast<std::size_t>(quantiles);
    for (std::size_t k = 1; k < q; ++k) {
      const std::size_t rank = (k * n + q - 1) / q;  // ceil(k n / q), 1-based
      axis.push_back(sorted[std::max<std::size_t>(rank, 1) - 1]);
    }
  }
  return normalize_axis(std::move(axis));
}

PolicyClassSpec materialize_grid(const PolicyClassSpec& spec, const Dataset& d) {
  if (spec.kind == PolicyKind::random || spec.has_grid()) return spec;
  if (spec.grid_quantiles <= 0) throw ConfigError("policy class has an empty grid and no grid_quantiles");
  PolicyClassSpec out = spec;
  const std::size_t dim = d.dimension();
  out.covariate_grid.assign(dim, {});
  std::vector<double> column(d.size());
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < d.size(); ++i) column[i] = d.observations[i].covariates[j];
    out.covariate_grid[j] = quantile_grid(column, spec.grid_quantiles);
  }
  if (spec.kind == PolicyKind::augmented) {
    if (!d.has_proxy()) throw ConfigError("augmented class requested on data without a proxy");
    for (std::size_t i = 0; i < d.size(); ++i) column[i] = *d.observations[i].proxy;
    out.proxy_grid = quantile_grid(column, spec.grid_quantiles);
  }
  return out;
}

std::vector<Violation> validate_dataset(const Dataset& d) {
  std::vector<Violation> report;
  const double k = d.overlap_k;
  if (!(k > 0.0 && k <= 0.5)) {
    std::ostringstream msg;
    msg << "overlap constant k = " << k << " is outside (0, 1/2]";
    report.push_back({"overlap_constant", std::nullopt, msg.str()});
  }
  if (!(d.outcome_bound_M > 0.0)) {
    report.push_back({"outcome_bound", std::nullopt, "outcome bound M must be positive"});
  }
  const std::size_t dim = d.dimension();
  const double half_bound = d.outcome_bound_M / 2.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& o = d.observations[i];
    if (o.covariates.size() != dim) {
      report.push_back({"covariate_dimension", i,
                        "expected " + std::to_string(dim) + " covariates, found " + std::to_string(o.covariates.size())});
    }
    if (!std::isfinite(o.outcome) || std::abs(o.outcome) > half_bound) {
      std::ostringstream msg;
      msg << "|outcome| = " << std::abs(o.outcome) << " exceeds M/2 = " << half_bound;
      report.push_back({"bounded_outcomes", i, msg.str()});
    }
    if (!(o.propensity >= k && o.propensity <= 1.0 - k)) {
      std::ostringstream msg;
      msg << "propensity " << o.propensity << " outside [" << k << ", " << 1.0 - k << "]";
      report.push_back({"strict_overlap", i, msg.str()});
    }
  }
  return report;
}

}  // namespace policylab
