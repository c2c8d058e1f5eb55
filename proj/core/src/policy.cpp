#include "policylab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "policylab/error.hpp"

namespace policylab {

namespace {

constexpr std::size_t kMaxGridCells = std::size_t{1} << 26;

void check_propensity(const Observation& o, std::size_t row) {
  if (!(o.propensity > 0.0 && o.propensity < 1.0)) {
    throw OverlapError("propensity " + std::to_string(o.propensity) + " at row " + std::to_string(row) +
                       " is outside (0, 1)");
  }
}

double ipw_term(const Observation& o, int assigned) {
  const double d = o.treated ? 1.0 : 0.0;
  const double g = assigned != 0 ? 1.0 : 0.0;
  return o.outcome * d / o.propensity * g + o.outcome * (1.0 - d) / (1.0 - o.propensity) * (1.0 - g);
}

// Index of the last grid value the unit clears, or -1 if it clears none.
std::ptrdiff_t covariate_cell(const std::vector<double>& axis, double x) {
  return std::upper_bound(axis.begin(), axis.end(), x) - axis.begin() - 1;  // x >= axis[k]
}

std::ptrdiff_t proxy_cell(const std::vector<double>& axis, double proxy) {
  return std::lower_bound(axis.begin(), axis.end(), proxy) - axis.begin() - 1;  // proxy > axis[k]
}

void check_axis(const std::vector<double>& axis, const char* what, std::size_t j) {
  if (axis.empty()) throw ConfigError(std::string("empty grid on ") + what + " axis " + std::to_string(j));
  for (std::size_t k = 0; k < axis.size(); ++k) {
    if (std::isnan(axis[k]) || (k > 0 && !(axis[k - 1] < axis[k]))) {
      throw ConfigError(std::string("grid on ") + what + " axis " + std::to_string(j) +
                        " must be strictly increasing and free of NaN");
    }
  }
}

}  // namespace

double ipw_welfare(const Dataset& d, std::span<const int> assignment) {
  if (d.empty()) throw ConfigError("welfare of an empty sample is undefined");
  if (assignment.size() != d.size()) throw ConfigError("assignment length does not match the sample");
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& o = d.observations[i];
    check_propensity(o, i);
    sum += ipw_term(o, assignment[i]);
  }
  return sum / static_cast<double>(d.size());
}

WelfareEstimate ipw_welfare(const Dataset& d, const ThresholdRule& rule) {
  const auto g = assign_all(rule, d);
  return {ipw_welfare(d, g), d.size(), rule};
}

WelfareEstimate status_quo_welfare(const Dataset& d) {
  const std::vector<int> nobody(d.size(), 0);
  return {ipw_welfare(d, nobody), d.size(), std::nullopt};
}

WelfareEstimate random_rule_welfare(const Dataset& d) {
  if (d.empty()) throw ConfigError("welfare of an empty sample is undefined");
  double sum = 0.0;
  for (const auto& o : d.observations) sum += o.outcome;
  return {sum / static_cast<double>(d.size()), d.size(), std::nullopt};
}

EwmResult ewm_search(const Dataset& data, const PolicyClassSpec& requested) {
  if (requested.kind == PolicyKind::random) throw ConfigError("the random benchmark has no grid to search");
  if (data.empty()) throw ConfigError("cannot fit a rule on an empty sample");
  const PolicyClassSpec spec = materialize_grid(requested, data);
  const bool augmented = spec.kind == PolicyKind::augmented;
  const std::size_t dim = data.dimension();
  if (spec.covariate_grid.size() != dim) {
    throw ConfigError("class grid has " + std::to_string(spec.covariate_grid.size()) + " covariate axes, data has " +
                      std::to_string(dim));
  }
  if (augmented && !data.has_proxy()) throw ConfigError("augmented class requested on data without a proxy");

  std::vector<const std::vector<double>*> axes;
  for (std::size_t j = 0; j < dim; ++j) {
    check_axis(spec.covariate_grid[j], "covariate", j);
    axes.push_back(&spec.covariate_grid[j]);
  }
  if (augmented) {
    check_axis(spec.proxy_grid, "proxy", 0);
    axes.push_back(&spec.proxy_grid);
  }
  if (axes.empty()) throw ConfigError("class has no thresholded axis");

  const std::size_t rank = axes.size();
  std::vector<std::size_t> extent(rank), stride(rank);
  std::size_t cells = 1;
  for (std::size_t a = rank; a-- > 0;) {
    extent[a] = axes[a]->size();
    stride[a] = cells;
    if (cells > kMaxGridCells / extent[a]) throw ConfigError("policy grid exceeds 2^26 rules");
    cells *= extent[a];
  }

  // Rule k treats unit i iff k <= cell(i) on every axis, so the treated gain of
  // rule k is a suffix sum of the per-cell gains.
  std::vector<double> gain(cells, 0.0);
  double magnitude = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& o = data.observations[i];
    check_propensity(o, i);
    const double treated_term = ipw_term(o, 1);
    const double untreated_term = ipw_term(o, 0);
    magnitude += std::abs(treated_term) + std::abs(untreated_term);
    std::size_t flat = 0;
    bool reachable = true;
    for (std::size_t a = 0; a < rank && reachable; ++a) {
      const std::ptrdiff_t c = (augmented && a + 1 == rank) ? proxy_cell(*axes[a], *o.proxy)
                                                            : covariate_cell(*axes[a], o.covariates[a]);
      if (c < 0) reachable = false;
      else flat += static_cast<std::size_t>(c) * stride[a];
    }
    if (reachable) gain[flat] += treated_term - untreated_term;
  }
  for (std::size_t a = 0; a < rank; ++a) {
    const std::size_t s = stride[a];
    const std::size_t block = s * extent[a];
    for (std::size_t base = 0; base < cells; base += block) {
      for (std::size_t k = extent[a] - 1; k-- > 0;) {
        for (std::size_t r = 0; r < s; ++r) gain[base + k * s + r] += gain[base + (k + 1) * s + r];
      }
    }
  }

  const double best_sum = *std::max_element(gain.begin(), gain.end());
  // Far above the rounding error of the cumulative sums, far below any
  // welfare difference that matters.
  const double slack = 1e-9 * (magnitude + 1.0);

  auto rule_at = [&](std::size_t flat) {
    ThresholdRule rule;
    rule.covariate_thresholds.resize(dim);
    for (std::size_t a = 0; a < rank; ++a) {
      const double v = (*axes[a])[(flat / stride[a]) % extent[a]];
      if (augmented && a + 1 == rank) rule.proxy_threshold = v;
      else rule.covariate_thresholds[a] = v;
    }
    return rule;
  };

  EwmResult result;
  result.grid_size = cells;
  std::vector<int> assignment(data.size());
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t flat = 0; flat < cells; ++flat) {
    if (gain[flat] < best_sum - slack) continue;
    ThresholdRule rule = rule_at(flat);
    for (std::size_t i = 0; i < data.size(); ++i) assignment[i] = rule_assign(rule, data.observations[i]);
    const double value = ipw_welfare(data, assignment);
    ++result.rescored;
    // Row-major order is lexicographic order, so strict > keeps the smallest.
    if (value > best_value) {
      best_value = value;
      result.best = {value, data.size(), std::move(rule)};
    }
  }
  return result;
}

OracleRule::OracleRule(DgpSpec spec) : spec_(std::move(spec)) { validate_spec(spec_); }

int OracleRule::assign(std::span<const double> covariates, double latent) const {
  switch (spec_.family()) {
    case DgpFamily::cb_lower: return latent > 0.0 ? 1 : 0;
    case DgpFamily::ha_lower: return latent >= 0.0 ? 1 : 0;
    case DgpFamily::latent_normal: {
      const auto& c = std::get<LatentNormalParams>(spec_.params).tau_coefficients;
      double tau = c[0] + c.back() * latent;
      for (std::size_t j = 0; j < covariates.size(); ++j) tau += c[j + 1] * covariates[j];
      return tau >= 0.0 ? 1 : 0;
    }
  }
  throw ConfigError("DGP family has no closed-form treatment effect");
}

int OracleRule::assign(const Observation& o) const {
  if (!o.latent) throw ConfigError("first-best rule needs the latent value");
  return assign(o.covariates, *o.latent);
}

OracleRule first_best_rule(const DgpSpec& spec) { return OracleRule(spec); }

}  // namespace policylab
