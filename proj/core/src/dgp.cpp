#include "policylab/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "policylab/error.hpp"
#include "policylab/parallel.hpp"

namespace policylab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_density(double z) {
  if (!std::isfinite(z)) return 0.0;
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double sign_of(double a) { return a < 0.0 ? -1.0 : 1.0; }

[[noreturn]] void fail(const std::string& what) { throw ParameterError(what); }

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void check_probability(double p, double k) {
  if (!(k > 0.0 && k <= 0.5)) fail("overlap constant k = " + num(k) + " must lie in (0, 1/2]");
  if (!(p > k && p < 1.0 - k)) fail("treatment probability p = " + num(p) + " must lie in (k, 1-k) for k = " + num(k));
}

void check_rule_dimension(const DgpSpec& spec, const ThresholdRule& rule) {
  if (rule.covariate_thresholds.size() != static_cast<std::size_t>(spec.dimension())) {
    throw ConfigError("rule has " + std::to_string(rule.covariate_thresholds.size()) +
                      " covariate thresholds, the DGP has " + std::to_string(spec.dimension()) + " covariates");
  }
}

/// P(A in (lo, hi)) for A ~ Unif[-1/kappa, 1/kappa].
double uniform_mass(double lo, double hi, double kappa) {
  const double half = 1.0 / kappa;
  const double width = std::min(hi, half) - std::max(lo, -half);
  return width > 0.0 ? width * kappa / 2.0 : 0.0;
}

int effective_proxy_t(const DgpSpec& spec, int proxy_t) {
  const int available = spec.measurement_count();
  if (proxy_t <= 0) return available;
  return std::min(proxy_t, available);
}

std::optional<double> unit_proxy(const SyntheticUnit& u, int t) {
  if (t <= 0 || u.measurements.empty()) return std::nullopt;
  const auto used = std::min<std::size_t>(static_cast<std::size_t>(t), u.measurements.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < used; ++j) sum += u.measurements[j];
  return sum / static_cast<double>(used);
}

}  // namespace

std::string_view to_string(DgpFamily family) noexcept {
  switch (family) {
    case DgpFamily::cb_lower: return "cb_lower";
    case DgpFamily::ha_lower: return "ha_lower";
    case DgpFamily::latent_normal: return "latent_normal";
  }
  return "unknown";
}

DgpFamily parse_dgp_family(std::string_view name) {
  if (name == "cb_lower") return DgpFamily::cb_lower;
  if (name == "ha_lower") return DgpFamily::ha_lower;
  if (name == "latent_normal") return DgpFamily::latent_normal;
  throw ParameterError("unknown DGP family '" + std::string(name) + "'");
}

DgpFamily DgpSpec::family() const noexcept { return static_cast<DgpFamily>(params.index()); }

int DgpSpec::dimension() const noexcept {
  return std::visit([](const auto& p) { return p.d; }, params);
}

double DgpSpec::treatment_probability() const noexcept {
  return std::visit([](const auto& p) { return p.p; }, params);
}

double DgpSpec::overlap_k() const noexcept {
  return std::visit([](const auto& p) { return p.k.value_or(0.5 * std::min(p.p, 1.0 - p.p)); }, params);
}

double DgpSpec::outcome_bound() const noexcept {
  return std::visit(Overloaded{
                        [](const CbLowerParams& p) { return p.M.value_or(p.sigma0 > 0.0 ? 2.0 * p.sigma0 : 1.0); },
                        [](const HaLowerParams& p) { return p.M; },
                        [](const LatentNormalParams& p) { return p.M.value_or(kInf); },
                    },
                    params);
}

int DgpSpec::measurement_count() const noexcept {
  return std::visit(Overloaded{
                        [](const CbLowerParams&) { return 0; },
                        [](const HaLowerParams&) { return 1; },
                        [](const LatentNormalParams& p) { return p.measurements; },
                    },
                    params);
}

void validate_spec(const DgpSpec& spec) {
  if (spec.dimension() < 0) fail("covariate dimension d must be nonnegative");
  check_probability(spec.treatment_probability(), spec.overlap_k());
  std::visit(Overloaded{
                 [](const CbLowerParams& p) {
                   if (!(p.sigma_x > 0.0)) fail("sigma_x must be positive");
                   if (!(p.sigma0 >= 0.0)) fail("sigma0 must be nonnegative");
                   const double M = p.M.value_or(p.sigma0 > 0.0 ? 2.0 * p.sigma0 : 1.0);
                   if (!(p.sigma0 <= M / 2.0)) fail("sigma0 = " + num(p.sigma0) + " exceeds M/2 = " + num(M / 2.0));
                 },
                 [](const HaLowerParams& p) {
                   if (!(p.sigma_x > 0.0)) fail("sigma_x must be positive");
                   if (!(p.kappa > 0.0)) fail("kappa must be positive");
                   if (!(p.M > 0.0)) fail("M must be positive");
                   if (!(p.rho >= 0.0)) fail("rho must be nonnegative");
                   if (!(p.rho <= 1.0 / (2.0 * p.kappa))) {
                     fail("rho = " + num(p.rho) + " exceeds 1/(2 kappa) = " + num(1.0 / (2.0 * p.kappa)));
                   }
                 },
                 [](const LatentNormalParams& p) {
                   if (p.tau_coefficients.size() != static_cast<std::size_t>(p.d) + 2) {
                     fail("tau_coefficients must hold d + 2 = " + std::to_string(p.d + 2) + " entries, found " +
                          std::to_string(p.tau_coefficients.size()));
                   }
                   if (!(p.latent_sd >= 0.0)) fail("latent_sd must be nonnegative");
                   if (!(p.noise_sd_sigma_u >= 0.0)) fail("noise_sd_sigma_u must be nonnegative");
                   if (!(p.baseline_sd >= 0.0)) fail("baseline_sd must be nonnegative");
                   if (p.measurements < 0) fail("measurements must be nonnegative");
                   if (p.M && !(*p.M > 0.0)) fail("M must be positive");
                 },
             },
             spec.params);
}

SyntheticUnit draw_unit(const DgpSpec& spec, Rng& rng) {
  SyntheticUnit u;
  std::visit(Overloaded{
                 [&](const CbLowerParams& p) {
                   u.covariates.resize(static_cast<std::size_t>(p.d));
                   for (auto& x : u.covariates) x = p.mu_x + p.sigma_x * rng.normal();
                   u.latent = rng.bernoulli(0.5) ? p.sigma0 : -p.sigma0;
                   u.y0 = 0.0;
                   u.y1 = u.latent;
                   u.treated = rng.bernoulli(p.p);
                 },
                 [&](const HaLowerParams& p) {
                   u.covariates.resize(static_cast<std::size_t>(p.d));
                   for (auto& x : u.covariates) x = p.mu_x + p.sigma_x * rng.normal();
                   u.latent = rng.uniform(-1.0 / p.kappa, 1.0 / p.kappa);
                   const double eps = rng.bernoulli(0.5) ? p.rho : -p.rho;
                   u.measurements = {u.latent + eps};
                   const double s = sign_of(u.latent);
                   u.y0 = -0.5 * p.M * s;
                   u.y1 = 0.5 * p.M * s;
                   u.treated = rng.bernoulli(p.p);
                 },
                 [&](const LatentNormalParams& p) {
                   const auto& c = p.tau_coefficients;
                   u.covariates.resize(static_cast<std::size_t>(p.d));
                   double tau = c[0];
                   for (std::size_t j = 0; j < u.covariates.size(); ++j) {
                     u.covariates[j] = rng.normal();
                     tau += c[j + 1] * u.covariates[j];
                   }
                   u.latent = p.latent_sd * rng.normal();
                   tau += c.back() * u.latent;
                   u.measurements.resize(static_cast<std::size_t>(p.measurements));
                   for (auto& m : u.measurements) m = u.latent + p.noise_sd_sigma_u * rng.normal();
                   u.y0 = p.baseline_mean + p.baseline_sd * rng.normal();
                   u.y1 = u.y0 + tau;
                   u.treated = rng.bernoulli(p.p);
                 },
             },
             spec.params);
  return u;
}

Dataset generate(const DgpSpec& spec, std::size_t n, unsigned threads) {
  validate_spec(spec);
  Dataset d;
  d.overlap_k = spec.overlap_k();
  d.outcome_bound_M = spec.outcome_bound();
  d.observations.resize(n);
  const double p = spec.treatment_probability();
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng(spec.seed, i);
    SyntheticUnit u = draw_unit(spec, rng);
    Observation& o = d.observations[i];
    o.outcome = u.outcome();
    o.treated = u.treated;
    o.propensity = p;
    o.covariates = std::move(u.covariates);
    o.latent = u.latent;
    o.measurements = std::move(u.measurements);
  });
  return d;
}

Dataset build_proxy(const Dataset& d, const ProxyPlan& plan) {
  if (plan.t <= 0) {
    throw ConfigError("proxy with t = 0 measurements requested; a covariate-only design carries no proxy");
  }
  const auto t = static_cast<std::size_t>(plan.t);
  Dataset out = d;
  for (std::size_t i = 0; i < out.size(); ++i) {
    Observation& o = out.observations[i];
    const std::size_t available = o.measurements.size();
    if (available < t && plan.ragged == RaggedPolicy::reject) {
      throw ConfigError("observation " + std::to_string(i) + " has " + std::to_string(available) +
                        " measurements, proxy needs " + std::to_string(t));
    }
    const std::size_t used = std::min(available, t);
    if (used == 0) {
      o.proxy.reset();
      continue;
    }
    double sum = 0.0;
    if (plan.selection == ProxySelection::first_t || used == available) {
      for (std::size_t j = 0; j < used; ++j) sum += o.measurements[j];
    } else {
      Rng rng(plan.selection_seed, i);
      std::vector<std::size_t> idx(available);
      for (std::size_t j = 0; j < available; ++j) idx[j] = j;
      for (std::size_t j = 0; j < used; ++j) {
        const auto pick = j + static_cast<std::size_t>(rng.below(available - j));
        std::swap(idx[j], idx[pick]);
      }
      // Sum in index order so the result does not depend on draw order.
      std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(used));
      for (std::size_t j = 0; j < used; ++j) sum += o.measurements[idx[j]];
    }
    o.proxy = sum / static_cast<double>(used);
  }
  return out;
}

std::size_t count_short_units(const Dataset& d, int t) {
  if (t <= 0) return 0;
  return static_cast<std::size_t>(std::count_if(d.observations.begin(), d.observations.end(), [t](const Observation& o) {
    return o.measurements.size() < static_cast<std::size_t>(t);
  }));
}

double proxy_rmse(const Dataset& d) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& o : d.observations) {
    if (!o.proxy || !o.latent) continue;
    const double e = *o.proxy - *o.latent;
    sum += e * e;
    ++count;
  }
  if (count == 0) throw ConfigError("proxy_rmse needs units carrying both a proxy and a latent value");
  return std::sqrt(sum / static_cast<double>(count));
}

WelfareValue true_welfare(const DgpSpec& spec, const ThresholdRule& rule, int proxy_t) {
  validate_spec(spec);
  check_rule_dimension(spec, rule);
  if (rule.augmented() && spec.measurement_count() == 0) {
    throw ConfigError("augmented rule evaluated on a DGP that emits no measurements");
  }
  const double value = std::visit(
      Overloaded{
          [&](const CbLowerParams&) {
            // E[A | X] = 0, so every covariate rule has zero welfare.
            return 0.0;
          },
          [&](const HaLowerParams& p) {
            if (!rule.augmented()) return 0.0;
            double px = 1.0;
            for (double t : rule.covariate_thresholds) {
              if (t != kNoThreshold) px *= upper_tail((t - p.mu_x) / p.sigma_x);
            }
            const double tp = *rule.proxy_threshold;
            // proxy > tp  <=>  A > tp - eps, eps = +/- rho with probability 1/2.
            const double lo_plus = tp - p.rho;
            const double lo_minus = tp + p.rho;
            const double treated_negative =
                0.5 * (uniform_mass(lo_plus, 0.0, p.kappa) + uniform_mass(lo_minus, 0.0, p.kappa));
            const double treated_positive = 0.5 * (uniform_mass(std::max(lo_plus, 0.0), kInf, p.kappa) +
                                                   uniform_mass(std::max(lo_minus, 0.0), kInf, p.kappa));
            const double misclassified = px * treated_negative + (0.5 - px * treated_positive);
            return 0.5 * p.M * (1.0 - 2.0 * misclassified);
          },
          [&](const LatentNormalParams& p) {
            const auto& c = p.tau_coefficients;
            const auto& th = rule.covariate_thresholds;
            std::vector<double> tail(th.size());
            double px = 1.0;
            for (std::size_t j = 0; j < th.size(); ++j) {
              tail[j] = th[j] == kNoThreshold ? 1.0 : upper_tail(th[j]);
              px *= tail[j];
            }
            double p_proxy = 1.0;
            double latent_moment = 0.0;  // E[A 1{proxy > tp}]
            if (rule.augmented()) {
              const int t = effective_proxy_t(spec, proxy_t);
              const double s = std::sqrt(p.latent_sd * p.latent_sd +
                                         p.noise_sd_sigma_u * p.noise_sd_sigma_u / static_cast<double>(t));
              const double tp = *rule.proxy_threshold;
              if (tp != kNoThreshold) {
                if (s > 0.0) {
                  p_proxy = upper_tail(tp / s);
                  latent_moment = p.latent_sd * p.latent_sd / s * normal_density(tp / s);
                } else {
                  p_proxy = tp < 0.0 ? 1.0 : 0.0;
                }
              }
            }
            double effect = c[0] * px * p_proxy + c.back() * px * latent_moment;
            for (std::size_t j = 0; j < th.size(); ++j) {
              double others = p_proxy;
              for (std::size_t l = 0; l < th.size(); ++l) {
                if (l != j) others *= tail[l];
              }
              const double x_moment = th[j] == kNoThreshold ? 0.0 : normal_density(th[j]);  // E[X 1{X >= t}]
              effect += c[j + 1] * x_moment * others;
            }
            return p.baseline_mean + effect;
          },
      },
      spec.params);
  return {value, 0.0, true};
}

double oracle_welfare(const DgpSpec& spec) {
  validate_spec(spec);
  return std::visit(Overloaded{
                        [](const CbLowerParams& p) { return 0.5 * p.sigma0; },
                        [](const HaLowerParams& p) { return 0.5 * p.M; },
                        [](const LatentNormalParams& p) {
                          const auto& c = p.tau_coefficients;
                          double var = c.back() * c.back() * p.latent_sd * p.latent_sd;
                          for (int j = 1; j <= p.d; ++j) var += c[static_cast<std::size_t>(j)] * c[static_cast<std::size_t>(j)];
                          const double mean = c[0];
                          const double sd = std::sqrt(var);
                          // E[max(tau, 0)] for tau ~ N(mean, sd^2)
                          const double positive_part =
                              sd > 0.0 ? mean * (1.0 - upper_tail(mean / sd)) + sd * normal_density(mean / sd)
                                       : std::max(mean, 0.0);
                          return p.baseline_mean + positive_part;
                        },
                    },
                    spec.params);
}

WelfareValue monte_carlo_welfare(const DgpSpec& spec, const UnitAssignment& assignment, std::size_t mc_n,
                                 std::uint64_t seed, int proxy_t) {
  validate_spec(spec);
  if (mc_n < 2) throw ParameterError("Monte Carlo welfare needs at least 2 draws");
  const int t = effective_proxy_t(spec, proxy_t);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < mc_n; ++i) {
    Rng rng(seed, i);
    const SyntheticUnit u = draw_unit(spec, rng);
    const double v = assignment(u, unit_proxy(u, t)) != 0 ? u.y1 : u.y0;
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(mc_n - 1);
  return {mean, std::sqrt(var / static_cast<double>(mc_n)), false};
}

WelfareValue monte_carlo_welfare(const DgpSpec& spec, const ThresholdRule& rule, std::size_t mc_n,
                                 std::uint64_t seed, int proxy_t) {
  check_rule_dimension(spec, rule);
  return monte_carlo_welfare(
      spec,
      [&rule](const SyntheticUnit& u, std::optional<double> proxy) {
        Observation o;
        o.covariates = u.covariates;
        o.proxy = proxy;
        return rule_assign(rule, o);
      },
      mc_n, seed, proxy_t);
}

ScoreConstants score_constants(const DgpSpec& spec) {
  return std::visit(Overloaded{
                        [](const CbLowerParams&) { return ScoreConstants{kInf, 1.0}; },
                        [](const HaLowerParams& p) { return ScoreConstants{p.kappa, 1.0}; },
                        [](const LatentNormalParams& p) {
                          // sup_t P(|A - t| < u) <= 2 u f_max for A ~ N(0, sd^2)
                          const double kappa =
                              p.latent_sd > 0.0 ? std::sqrt(2.0 / std::numbers::pi) / p.latent_sd : kInf;
                          return ScoreConstants{kappa, 1.0};
                        },
                    },
                    spec.params);
}

}  // namespace policylab
