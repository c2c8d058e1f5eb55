#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "policylab/core.hpp"
#include "policylab/rng.hpp"

namespace policylab {

enum class DgpFamily { cb_lower, ha_lower, latent_normal };

std::string_view to_string(DgpFamily family) noexcept;
DgpFamily parse_dgp_family(std::string_view name);

/// Two-point latent construction: X ~ N(mu_x, sigma_x^2) i.i.d. per covariate,
/// A = +/- sigma0 with probability 1/2, Y(0) = 0, Y(1) = A. No covariate rule
/// can do better than zero welfare here.
struct CbLowerParams {
  double mu_x = 0.0;
  double sigma_x = 1.0;
  double sigma0 = 1.0;
  double p = 0.5;
  int d = 1;
  std::optional<double> k;  // default: min(p, 1-p) / 2
  std::optional<double> M;  // default: 2 sigma0
};

/// Uniform latent with a two-point proxy error: A ~ Unif[-1/kappa, 1/kappa],
/// proxy = A + eps with eps = +/- rho, Y(d) = (2d-1) (M/2) sign(A).
struct HaLowerParams {
  double mu_x = 0.0;
  double sigma_x = 1.0;
  double kappa = 1.0;
  double rho = 0.25;
  double M = 2.0;
  double p = 0.5;
  int d = 1;
  std::optional<double> k;
};

/// Gaussian latent with a linear effect tau(x, a) = c_0 + sum_j c_j x_j + c_a a,
/// X_j ~ N(0, 1), A ~ N(0, latent_sd^2), measurements A + N(0, sigma_u^2).
/// `tau_coefficients` holds (c_0, c_1..c_d, c_a).
struct LatentNormalParams {
  int d = 1;
  std::vector<double> tau_coefficients{0.0, 0.0, 1.0};
  double latent_sd = 1.0;
  double noise_sd_sigma_u = 1.0;
  double baseline_sd = 1.0;
  double baseline_mean = 0.0;
  double p = 0.5;
  int measurements = 5;
  std::optional<double> k;
  std::optional<double> M;  // default: unbounded
};

struct DgpSpec {
  std::variant<CbLowerParams, HaLowerParams, LatentNormalParams> params;
  std::uint64_t seed = 0;

  DgpFamily family() const noexcept;
  int dimension() const noexcept;
  double treatment_probability() const noexcept;
  double overlap_k() const noexcept;
  double outcome_bound() const noexcept;
  /// Measurements emitted per unit.
  int measurement_count() const noexcept;
};

/// Throws ParameterError naming the first violated constraint.
void validate_spec(const DgpSpec& spec);

/// One draw with both potential outcomes.
struct SyntheticUnit {
  std::vector<double> covariates;
  double latent = 0.0;
  std::vector<double> measurements;
  double y0 = 0.0;
  double y1 = 0.0;
  bool treated = false;

  double outcome() const noexcept { return treated ? y1 : y0; }
};

SyntheticUnit draw_unit(const DgpSpec& spec, Rng& rng);

/// Observation i is drawn from stream i of `spec.seed`, so the result does not
/// depend on `threads`.
Dataset generate(const DgpSpec& spec, std::size_t n, unsigned threads = 1);

enum class ProxySelection { first_t, random_t };
enum class RaggedPolicy { reject, use_available };

struct ProxyPlan {
  int t = 1;
  ProxySelection selection = ProxySelection::first_t;
  std::uint64_t selection_seed = 0;
  /// `use_available` averages whatever a short unit has; units without any
  /// measurement keep an empty proxy.
  RaggedPolicy ragged = RaggedPolicy::reject;
};

/// Proxy = mean of the t selected measurements. Random selection for unit i
/// uses stream i of `selection_seed`.
Dataset build_proxy(const Dataset& d, const ProxyPlan& plan);

/// Units with fewer than t measurements.
std::size_t count_short_units(const Dataset& d, int t);

/// Root mean squared error of proxy - latent over units carrying both.
double proxy_rmse(const Dataset& d);

struct WelfareValue {
  double value = 0.0;
  double std_error = 0.0;
  bool exact = false;
};

/// Population welfare of a rectangular rule. All three families have closed
/// forms. `proxy_t` is the number of measurements averaged into the proxy
/// (0 = every emitted measurement); only augmented rules use it.
WelfareValue true_welfare(const DgpSpec& spec, const ThresholdRule& rule, int proxy_t = 0);

/// Welfare of the first-best rule that observes the latent factor.
double oracle_welfare(const DgpSpec& spec);

using UnitAssignment = std::function<int(const SyntheticUnit&, std::optional<double> proxy)>;

/// Monte Carlo welfare over `mc_n` fresh draws, with the standard error of
/// the mean. Independent of the closed forms in true_welfare.
WelfareValue monte_carlo_welfare(const DgpSpec& spec, const UnitAssignment& assignment, std::size_t mc_n,
                                 std::uint64_t seed, int proxy_t = 0);
WelfareValue monte_carlo_welfare(const DgpSpec& spec, const ThresholdRule& rule, std::size_t mc_n,
                                 std::uint64_t seed, int proxy_t = 0);

/// Margin and Lipschitz constants of the proxy-threshold score a - t for the
/// family's latent law. Reported as diagnostics, never assumed.
struct ScoreConstants {
  double kappa = 0.0;
  double lipschitz = 1.0;
};
ScoreConstants score_constants(const DgpSpec& spec);

}  // namespace policylab
