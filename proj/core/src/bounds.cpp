#include "policylab/bounds.hpp"

#include <cmath>
#include <string>

#include "policylab/error.hpp"

namespace policylab {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ParameterError(what);
}

}  // namespace

void validate(const BoundInputs& b) {
  require(b.M > 0.0, "M must be positive");
  require(b.k > 0.0 && b.k <= 0.5, "k must lie in (0, 1/2]");
  require(b.v >= 1, "VC dimension must be at least 1");
  require(b.kappa > 0.0, "kappa must be positive");
  require(b.lipschitz_Ls > 0.0, "L_s must be positive");
  require(b.rmse >= 0.0, "rmse must be nonnegative");
  require(b.sigma_bar >= 0.0, "sigma_bar must be nonnegative");
  require(b.delta_misspec >= 0.0, "delta_misspec must be nonnegative");
  const auto& c = b.constants;
  require(c.C1 > 0.0 && c.C2 > 0.0 && c.C3 > 0.0 && c.C4 > 0.0 && c.C5 > 0.0, "constants C1..C5 must be positive");
  if (b.n == 0) throw DomainError("regret bounds need n >= 1");
}

double statistical_term(double C, const BoundInputs& b) {
  validate(b);
  return C * (b.M / b.k) * std::sqrt(static_cast<double>(b.v) / static_cast<double>(b.n));
}

double cb_upper_bound(const BoundInputs& b) {
  return statistical_term(b.constants.C1, b) + b.sigma_bar + b.delta_misspec;
}

double cb_lower_bound(const BoundInputs& b, double sigma0) {
  require(sigma0 >= 0.0, "sigma0 must be nonnegative");
  return statistical_term(b.constants.C2, b) + b.constants.C3 * sigma0;
}

double ha_upper_bound(const BoundInputs& b) {
  return statistical_term(b.constants.C1, b) + b.M * b.kappa * b.lipschitz_Ls * b.rmse;
}

double ha_lower_bound(const BoundInputs& b, double rho) {
  validate(b);
  require(rho >= 0.0, "rho must be nonnegative");
  if (rho > 1.0 / (2.0 * b.kappa)) {
    throw DomainError("rho = " + std::to_string(rho) + " exceeds 1/(2 kappa) = " + std::to_string(1.0 / (2.0 * b.kappa)));
  }
  return statistical_term(b.constants.C4, b) + b.constants.C5 * b.M * b.kappa * rho;
}

std::string_view to_string(ClassPreference p) noexcept {
  return p == ClassPreference::prefer_augmented ? "prefer_augmented" : "prefer_cb";
}

double augmentation_threshold(const BoundInputs& b_cb, const BoundInputs& b_ha) {
  validate(b_cb);
  validate(b_ha);
  const double complexity = b_ha.constants.C1 * (b_ha.M / b_ha.k) *
                            (std::sqrt(static_cast<double>(b_ha.v)) - std::sqrt(static_cast<double>(b_cb.v))) /
                            std::sqrt(static_cast<double>(b_ha.n));
  return complexity + b_ha.M * b_ha.kappa * b_ha.lipschitz_Ls * b_ha.rmse;
}

ClassPreference compare_classes(const BoundInputs& b_cb, const BoundInputs& b_ha) {
  return b_cb.sigma_bar >= augmentation_threshold(b_cb, b_ha) ? ClassPreference::prefer_augmented
                                                              : ClassPreference::prefer_cb;
}

double repeated_measurement_rmse(double m0, double t) {
  require(m0 >= 0.0, "m0 must be nonnegative");
  if (!(t > 0.0)) throw DomainError("rMSE of a proxy needs t > 0 measurements");
  return m0 / std::sqrt(t);
}

DesignProblem DesignProblem::from_primitives(double budget, double cn, double ct, double m0, double sigma0, int v_x,
                                             int v_xa, double C1, double M, double k, double kappa, double Ls) {
  require(k > 0.0 && k <= 0.5, "k must lie in (0, 1/2]");
  DesignProblem p;
  p.budget_B0 = budget;
  p.cost_cn = cn;
  p.cost_ct = ct;
  p.m0 = m0;
  p.sigma0 = sigma0;
  p.v_x = v_x;
  p.v_xa = v_xa;
  p.A0 = C1 * M / k;
  p.C0 = M * kappa * Ls;
  return p;
}

void validate(const DesignProblem& p) {
  require(p.budget_B0 > 0.0, "budget must be positive");
  require(p.cost_cn > 0.0, "c_n must be positive");
  require(p.cost_ct > 0.0, "c_t must be positive");
  require(p.m0 > 0.0, "m0 must be positive");
  require(p.sigma0 >= 0.0, "sigma0 must be nonnegative");
  require(p.v_x >= 1 && p.v_xa >= 1, "VC dimensions must be at least 1");
  require(p.A0 > 0.0, "A0 must be positive");
  require(p.C0 > 0.0, "C0 must be positive");
}

std::string_view to_string(DesignRegime r) noexcept {
  return r == DesignRegime::corner_cb ? "corner_cb" : "interior_augmented";
}

double augmented_design_bound(const DesignProblem& p, double n, double t) {
  return p.A0 * std::sqrt(static_cast<double>(p.v_xa) / n) + p.C0 * p.m0 / std::sqrt(t);
}

double cb_design_bound(const DesignProblem& p, double n) {
  return p.A0 * std::sqrt(static_cast<double>(p.v_x) / n) + p.sigma0;
}

DesignChoice optimal_design(const DesignProblem& p) {
  validate(p);
  DesignChoice c;
  const double ratio = p.A0 * std::sqrt(static_cast<double>(p.v_xa)) / (p.C0 * p.m0) * (p.cost_ct / p.cost_cn);
  c.q = std::cbrt(ratio * ratio);
  const double unit_cost = p.cost_ct + p.cost_cn * c.q;  // cost of one t plus q units of n
  c.interior_t = p.budget_B0 / unit_cost;
  c.interior_n = c.q * c.interior_t;
  c.augmented_value = p.A0 * std::sqrt(static_cast<double>(p.v_xa) * unit_cost / (p.budget_B0 * c.q)) +
                      p.C0 * p.m0 * std::sqrt(unit_cost / p.budget_B0);
  const double corner_n = p.budget_B0 / p.cost_cn;
  c.cb_value = p.A0 * std::sqrt(p.cost_cn * static_cast<double>(p.v_x) / p.budget_B0) + p.sigma0;
  if (c.cb_value <= c.augmented_value) {
    c.regime = DesignRegime::corner_cb;
    c.n_star = corner_n;
    c.t_star = 0.0;
    c.bound_value = c.cb_value;
  } else {
    c.regime = DesignRegime::interior_augmented;
    c.n_star = c.interior_n;
    c.t_star = c.interior_t;
    c.bound_value = c.augmented_value;
  }
  return c;
}

FocMultipliers foc_multipliers(const DesignProblem& p, double n, double t) {
  return {0.5 * p.A0 * std::sqrt(static_cast<double>(p.v_xa)) * std::pow(n, -1.5) / p.cost_cn,
          0.5 * p.C0 * p.m0 * std::pow(t, -1.5) / p.cost_ct};
}

double sigma_bar_analytic(const DgpSpec& spec) {
  validate_spec(spec);
  switch (spec.family()) {
    case DgpFamily::cb_lower: return std::get<CbLowerParams>(spec.params).sigma0;
    case DgpFamily::ha_lower: return std::get<HaLowerParams>(spec.params).M;  // tau = M sign(A)
    case DgpFamily::latent_normal: {
      const auto& p = std::get<LatentNormalParams>(spec.params);
      return std::abs(p.tau_coefficients.back()) * p.latent_sd;
    }
  }
  throw ConfigError("DGP family has no closed-form conditional effect variance");
}

}  // namespace policylab
