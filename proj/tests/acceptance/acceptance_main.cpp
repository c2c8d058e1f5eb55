#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "../unit/fixtures.hpp"
#include "brute_force_ewm.hpp"
#include "design_grid.hpp"
#include "policylab/bounds.hpp"
#include "policylab/cli.hpp"
#include "policylab/dgp.hpp"
#include "policylab/harness.hpp"
#include "policylab/policy.hpp"
#include "policylab/rng.hpp"

using namespace policylab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

PolicyClassSpec policy_class(PolicyKind kind, int vc, int quantiles) { return {kind, {}, {}, vc, quantiles}; }

Outcome enumeration_oracle() {
  std::mt19937_64 gen(20240601);
  std::uniform_int_distribution<std::size_t> n_dist(1, 30);
  std::bernoulli_distribution coin(0.5);
  int mismatches = 0;
  std::size_t scored = 0;
  const auto start = Clock::now();
  for (int rep = 0; rep < 200; ++rep) {
    const bool augmented = coin(gen);
    const std::size_t dim = augmented ? 2 : 3;
    const Dataset d = fixtures::random_sample(gen, n_dist(gen), dim, augmented);
    PolicyClassSpec spec{augmented ? PolicyKind::augmented : PolicyKind::covariate_based, {}, {}, 1, 0};
    std::vector<std::vector<double>> axes;
    for (std::size_t j = 0; j < 3; ++j) axes.push_back(fixtures::random_axis(gen, 6));
    spec.covariate_grid.assign(axes.begin(), axes.begin() + static_cast<std::ptrdiff_t>(dim));
    if (augmented) spec.proxy_grid = axes.back();
    const EwmResult fast = ewm_search(d, spec);
    const auto slow = oracle::brute_force_ewm(d, augmented ? axes : spec.covariate_grid, augmented);
    scored += slow.rules_scored;
    if (fast.best.value != slow.welfare || fast.best.rule != slow.rule) ++mismatches;
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && elapsed < 10.0,
          fmt("%d/200 mismatches, %zu rules enumerated, %.3f s", mismatches, scored, elapsed)};
}

Outcome ipw_unbiasedness() {
  CbLowerParams p;
  p.sigma0 = 1.0;
  const ThresholdRule cb_rule{{0.0}, std::nullopt};
  std::vector<double> cb(5000), best(5000);
  for (std::size_t rep = 0; rep < 5000; ++rep) {
    const DgpSpec spec{p, derive_seed(77, rep)};
    const Dataset d = generate(spec, 200);
    cb[rep] = ipw_welfare(d, cb_rule).value;
    const OracleRule oracle_rule = first_best_rule(spec);
    std::vector<int> g(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) g[i] = oracle_rule.assign(d.observations[i]);
    best[rep] = ipw_welfare(d, g);
  }
  const MeanSe a = mean_se(cb);
  const MeanSe b = mean_se(best);
  const double za = std::abs(a.mean - 0.0) / a.se;
  const double zb = std::abs(b.mean - 0.5 * p.sigma0) / b.se;
  return {za <= 3.0 && zb <= 3.0,
          fmt("CB mean %.5f (target 0, %.2f se); oracle mean %.5f (target 0.5, %.2f se)", a.mean, za, b.mean, zb)};
}

Outcome proof_dgp_regret() {
  HaLowerParams h;
  h.M = 2.0;
  h.kappa = 1.0;
  h.rho = 0.25;
  const DgpSpec ha{h, 5};
  const ThresholdRule bayes{{kNoThreshold}, 0.0};
  const double target = h.M * h.kappa * h.rho / 2.0;
  const double mc_regret = oracle_welfare(ha) - monte_carlo_welfare(ha, bayes, 1000000, 99).value;
  const double closed_regret = oracle_welfare(ha) - true_welfare(ha, bayes).value;
  bool pass = std::abs(mc_regret - target) <= 0.02 && std::abs(closed_regret - target) <= 0.02;
  std::string detail = fmt("ha Bayes regret MC %.4f, closed form %.4f (target %.4f);", mc_regret, closed_regret, target);

  CbLowerParams c;
  const DgpSpec cb{c, 6};
  const std::vector<std::size_t> ns{100, 1000, 10000};
  const RateResult rate = regret_rate_experiment(cb, policy_class(PolicyKind::covariate_based, 1, 10), ns, 20);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const Dataset d = generate({c, derive_seed(6, ns[i])}, ns[i]);
    const ThresholdRule fitted = *ewm_search(d, policy_class(PolicyKind::covariate_based, 1, 10)).best.rule;
    const double mc = oracle_welfare(cb) - monte_carlo_welfare(cb, fitted, 1000000, 100 + i).value;
    const double closed = rate.points[i].mean_regret;
    pass = pass && std::abs(closed - 0.5 * c.sigma0) <= 0.02 && std::abs(mc - 0.5 * c.sigma0) <= 0.02;
    detail += fmt(" cb n=%zu regret %.4f (MC %.4f)", ns[i], closed, mc);
  }
  return {pass, detail};
}

Outcome rate_check() {
  HaLowerParams h;
  h.rho = 0.0;
  const std::vector<std::size_t> ns{250, 1000, 4000, 16000};
  const auto start = Clock::now();
  const RateResult r = regret_rate_experiment({h, 2024}, policy_class(PolicyKind::augmented, 2, 10), ns, 200);
  const double elapsed = seconds_since(start);
  std::string detail = fmt("slope %.4f over", r.slope);
  for (const auto& pt : r.points) detail += fmt(" n=%zu:%.5f", pt.n, pt.mean_regret);
  detail += fmt(", %.1f s", elapsed);
  return {r.slope >= -0.65 && r.slope <= -0.35 && elapsed < 300.0, detail};
}

Outcome rmse_decay() {
  LatentNormalParams p;
  p.noise_sd_sigma_u = 1.0;
  p.measurements = 5;
  const Dataset d = generate({p, 31}, 100000);
  bool pass = true;
  std::string detail = "rmse*sqrt(t)/sigma_u:";
  for (int t = 1; t <= 5; ++t) {
    const double ratio = proxy_rmse(build_proxy(d, {t})) * std::sqrt(static_cast<double>(t)) / p.noise_sd_sigma_u;
    pass = pass && ratio >= 0.95 && ratio <= 1.05;
    detail += fmt(" t=%d:%.4f", t, ratio);
  }
  return {pass, detail};
}

Outcome design_oracle() {
  std::mt19937_64 gen(73);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int regime_mismatch = 0, value_mismatch = 0, foc_mismatch = 0, interior = 0, near_ties = 0;
  double worst_foc = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const DesignProblem p{100 + 5000 * u(gen), 0.1 + 2 * u(gen), 0.05 + u(gen), 0.1 + 3 * u(gen), 0.8 * u(gen),
                          1 + static_cast<int>(4 * u(gen)), 1 + static_cast<int>(6 * u(gen)), 0.5 + 10 * u(gen),
                          0.2 + 4 * u(gen)};
    const DesignChoice c = optimal_design(p);
    const oracle::DesignPrimitives prim{p.budget_B0, p.cost_cn, p.cost_ct, p.m0, p.sigma0,
                                        static_cast<double>(p.v_x), static_cast<double>(p.v_xa), p.A0, p.C0};
    const auto g = oracle::grid_minimize(prim, 500);
    const double tol = oracle::resolution_tolerance(prim, c.interior_n, c.interior_t, g.dn, g.dt);
    if (std::abs(c.cb_value - c.augmented_value) > tol) {
      if ((c.regime == DesignRegime::interior_augmented) != g.augmented) ++regime_mismatch;
    } else {
      ++near_ties;
    }
    if (c.bound_value > g.value + 1e-12 || g.value - c.bound_value > tol) ++value_mismatch;
    const FocMultipliers foc = foc_multipliers(p, c.interior_n, c.interior_t);
    const double dev = std::abs(foc.from_n / foc.from_t - 1.0);
    worst_foc = std::max(worst_foc, dev);
    if (dev > 1e-9) ++foc_mismatch;
    interior += c.regime == DesignRegime::interior_augmented;
  }
  return {regime_mismatch == 0 && value_mismatch == 0 && foc_mismatch == 0,
          fmt("%d interior / %d corner, %d within-resolution ties; mismatches regime %d value %d foc %d "
              "(worst FOC ratio deviation %.2e)",
              interior, 100 - interior, near_ties, regime_mismatch, value_mismatch, foc_mismatch, worst_foc)};
}

Outcome budget_arithmetic() {
  struct Case {
    int t;
    double B0;
    std::size_t cap, expected;
  };
  const std::vector<Case> cases{{2, 600, 794, 480},  {4, 1000, 794, 571}, {2, 800, 794, 640},
                                {4, 1200, 794, 685}, {4, 1400, 793, 793}, {4, 1600, 793, 793},
                                {4, 1800, 793, 793}, {4, 2000, 793, 793}};
  bool pass = true;
  std::string detail;
  for (const Case& c : cases) {
    const std::size_t got = feasible_n(c.t, c.B0, 0.75, 0.25, c.cap);
    pass = pass && got == c.expected;
    detail += fmt("B0=%.0f,t=%d:%zu ", c.B0, c.t, got);
  }
  for (double B0 = 1400; B0 <= 2000; B0 += 200) {
    pass = pass && feasible_n(4, B0, 0.75, 0.25, 1000000) > 793 && feasible_n(0, B0, 0.75, 0.25, 794) == 794;
  }
  pass = pass && feasible_n(4, 1200, 0.75, 0.25, 1000000) < 793;
  detail += "(cap binds from 1400; CB sample 794 throughout)";
  return {pass, detail};
}

Dataset table_dataset(std::size_t n, std::uint64_t seed) {
  LatentNormalParams p;
  p.d = 1;
  p.tau_coefficients = {0.1, 0.3, 1.0};
  p.latent_sd = 1.0;
  p.noise_sd_sigma_u = 1.5;
  p.baseline_sd = 1.0;
  p.p = 1.0 / 3.0;
  p.measurements = 5;
  return generate({p, seed}, n);
}

Outcome determinism() {
  const Dataset d = table_dataset(1000, 11);
  DesignEvaluation config;
  for (double b = 600; b <= 2000; b += 200) config.budgets.push_back(b);
  config.t_grid = {0, 1, 2, 3, 4, 5};
  config.R = 3;
  const SplitPlan plan{0.6, 4, 0};
  const std::string one = cli::frontier_csv(run_algorithm2(d, config, plan, 1));
  const std::string again = cli::frontier_csv(run_algorithm2(d, config, plan, 1));
  const std::string many = cli::frontier_csv(run_algorithm2(d, config, plan, 4));
  const bool pass = one == again && one == many && !one.empty();
  return {pass, fmt("threads 1 vs 1 vs 4: %s, %zu bytes", pass ? "identical" : "DIFFERENT", one.size())};
}

Outcome qualitative_pattern() {
  const Dataset raw = table_dataset(2000, 404);
  const Dataset d = build_proxy(raw, {5});
  const std::vector<PolicyClassSpec> classes{policy_class(PolicyKind::random, 1, 10),
                                             policy_class(PolicyKind::covariate_based, 1, 10),
                                             policy_class(PolicyKind::augmented, 2, 10)};
  const SplitPlan plan{0.6, 500, 0};
  const ReplicationReport r = run_algorithm1(d, plan, classes);
  const auto& w = r.mean_welfare;
  const auto& h = r.harm_rate;
  const bool welfare_order = w[2] > w[1] && w[1] > w[0];
  const bool harm_order = h[2] < h[1] && h[1] < h[0];

  const std::vector<int> ts{1, 2, 3, 4};
  const MeasurementSweep s = run_measurement_sweep(raw, plan, classes[1], classes[2], ts, 1);
  bool monotone = true;
  std::string gains;
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    if (i > 0 && s.rows[i].gain_vs_cb < s.rows[i - 1].gain_vs_cb) monotone = false;
    gains += fmt(" t=%d:%.4f", s.rows[i].t, s.rows[i].gain_vs_cb);
  }
  return {welfare_order && harm_order && monotone,
          fmt("welfare random %.4f < cb %.4f < aug %.4f; harm %.3f > %.3f > %.3f; gain over cb by t:%s", w[0], w[1],
              w[2], h[0], h[1], h[2], gains.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"enumeration oracle", enumeration_oracle},   {"ipw unbiasedness", ipw_unbiasedness},
      {"proof dgp regret", proof_dgp_regret},       {"rate check", rate_check},
      {"rmse decay", rmse_decay},                   {"design oracle", design_oracle},
      {"budget arithmetic", budget_arithmetic},     {"determinism", determinism},
      {"qualitative pattern", qualitative_pattern},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
