#pragma once

#include <cstddef>
#include <string_view>

#include "policylab/dgp.hpp"

namespace policylab {

/// Universal constants of the regret bounds. They carry no numeric value in
/// theory; the defaults are the ones the lower-bound constructions produce
/// (C3 = C5 = 1/4) with the K-T constant set to one. Reports echo them since
/// regime decisions depend on them.
struct BoundConstants {
  double C1 = 1.0;
  double C2 = 1.0;
  double C3 = 0.25;
  double C4 = 1.0;
  double C5 = 0.25;
};

struct BoundInputs {
  double M = 1.0;       // outcome range
  double k = 0.25;      // overlap constant, (0, 1/2]
  std::size_t n = 1;    // policy-learning sample size
  int v = 1;            // VC dimension of the class
  double kappa = 1.0;   // margin constant
  double lipschitz_Ls = 1.0;
  /// rMSE of the proxy. For a proxy learned on an independent auxiliary
  /// sample, pass the rMSE conditional on that sample and set the flag.
  double rmse = 0.0;
  bool rmse_conditional = false;
  double sigma_bar = 0.0;      // E_X sqrt(Var_A(tau | X))
  double delta_misspec = 0.0;  // zero when the class can match sign(tau)
  BoundConstants constants;
};

/// Throws ParameterError or DomainError (n = 0).
void validate(const BoundInputs& b);

/// C (M/k) sqrt(v/n).
double statistical_term(double C, const BoundInputs& b);

double cb_upper_bound(const BoundInputs& b);
double cb_lower_bound(const BoundInputs& b, double sigma0);
double ha_upper_bound(const BoundInputs& b);
/// Throws DomainError when rho > 1/(2 kappa).
double ha_lower_bound(const BoundInputs& b, double rho);

enum class ClassPreference { prefer_augmented, prefer_cb };
std::string_view to_string(ClassPreference p) noexcept;

/// Right-hand side of the dominance condition: latent heterogeneity the
/// augmented class must exceed. Uses M, k, n, C1, kappa, L_s and rmse of the
/// augmented inputs and the VC dimensions of both.
double augmentation_threshold(const BoundInputs& b_cb, const BoundInputs& b_ha);
/// prefer_augmented iff b_cb.sigma_bar >= augmentation_threshold(...).
ClassPreference compare_classes(const BoundInputs& b_cb, const BoundInputs& b_ha);

/// rMSE of the average of t repeated measurements, m0 / sqrt(t).
double repeated_measurement_rmse(double m0, double t);

struct DesignProblem {
  double budget_B0 = 1.0;
  double cost_cn = 1.0;  // per policy-learning unit
  double cost_ct = 1.0;  // per unit of proxy information
  double m0 = 1.0;
  double sigma0 = 0.0;
  int v_x = 1;
  int v_xa = 1;
  double A0 = 1.0;  // C1 M / k
  double C0 = 1.0;  // M kappa L_s

  static DesignProblem from_primitives(double budget, double cn, double ct, double m0, double sigma0, int v_x,
                                       int v_xa, double C1, double M, double k, double kappa, double Ls);
};

void validate(const DesignProblem& p);

enum class DesignRegime { corner_cb, interior_augmented };
std::string_view to_string(DesignRegime r) noexcept;

struct DesignChoice {
  DesignRegime regime = DesignRegime::corner_cb;
  double n_star = 0.0;
  double t_star = 0.0;
  double q = 0.0;
  double bound_value = 0.0;
  double cb_value = 0.0;         // minimized covariate-only bound
  double augmented_value = 0.0;  // minimized augmented bound
  double interior_n = 0.0;
  double interior_t = 0.0;
};

/// A0 sqrt(v_xa / n) + C0 m0 / sqrt(t).
double augmented_design_bound(const DesignProblem& p, double n, double t);
/// A0 sqrt(v_x / n) + sigma0.
double cb_design_bound(const DesignProblem& p, double n);

/// Minimax design under a linear budget. The interior candidate spends the
/// whole budget at ratio n/t = q; the corner spends it all on n. The smaller
/// minimized bound wins, ties going to the corner.
DesignChoice optimal_design(const DesignProblem& p);

/// Budget multipliers implied by the first-order conditions in n and t;
/// equal at an interior optimum.
struct FocMultipliers {
  double from_n = 0.0;
  double from_t = 0.0;
};
FocMultipliers foc_multipliers(const DesignProblem& p, double n, double t);

/// E_X sqrt(Var_A(tau(X, A) | X)), exact for every built-in family.
double sigma_bar_analytic(const DgpSpec& spec);

}  // namespace policylab
