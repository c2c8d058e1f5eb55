#include "policylab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "policylab/error.hpp"
#include "policylab/parallel.hpp"
#include "policylab/rng.hpp"

namespace policylab {

namespace {

constexpr std::uint64_t kSubsampleStream = 0x5ab5a3b1e0000001ULL;
constexpr std::uint64_t kProxyTag = 0x9f0c4a11d0000002ULL;

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_error_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// Test units without a proxy can never clear a proxy threshold.
void close_missing_proxies(Dataset& d) {
  for (auto& o : d.observations) {
    if (!o.proxy) o.proxy = -std::numeric_limits<double>::infinity();
  }
}

std::vector<std::size_t> with_proxy(const Dataset& d, std::span<const std::size_t> indices) {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (auto i : indices) {
    if (d.observations[i].proxy) out.push_back(i);
  }
  return out;
}

Dataset prefix_subset(const Dataset& d, const std::vector<std::size_t>& order, std::size_t n) {
  return d.subset(std::span<const std::size_t>(order.data(), n));
}

double fitted_test_welfare(const Dataset& est, const Dataset& test, const PolicyClassSpec& cls) {
  const EwmResult fit = ewm_search(est, cls);
  return ipw_welfare(test, *fit.best.rule).value;
}

void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw ConfigError("estimation fraction must lie in (0, 1)");
}

}  // namespace

std::uint64_t design_seed(std::uint64_t base_seed, std::size_t b, int t, std::size_t r) noexcept {
  return base_seed + 100000ULL * b + 1000ULL * static_cast<std::uint64_t>(t) + r;
}

std::vector<std::size_t> subsample_order(std::span<const std::size_t> pool, std::uint64_t seed) {
  Rng rng(seed, kSubsampleStream);
  const auto order = shuffled_indices(pool.size(), rng);
  std::vector<std::size_t> out(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) out[i] = pool[order[i]];
  return out;
}

SampleSplit split_sample(std::size_t n, double est_fraction, std::uint64_t seed) {
  check_fraction(est_fraction);
  const auto n_est = static_cast<std::size_t>(std::floor(est_fraction * static_cast<double>(n)));
  if (n_est < 1 || n_est >= n) {
    throw ConfigError("split of " + std::to_string(n) + " units leaves an empty estimation or test part");
  }
  Rng rng(seed, 0);
  const auto order = shuffled_indices(n, rng);
  SampleSplit s;
  s.est.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_est));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_est), order.end());
  std::sort(s.est.begin(), s.est.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

ReplicationReport run_algorithm1(const Dataset& d, const SplitPlan& plan, std::span<const PolicyClassSpec> classes,
                                 unsigned threads) {
  if (classes.empty()) throw ConfigError("no policy classes requested");
  if (plan.replications_B == 0) throw ConfigError("number of replications B must be positive");
  for (const auto& c : classes) {
    if (c.kind == PolicyKind::augmented && !d.has_proxy()) {
      throw ConfigError("augmented class requested on data without a proxy");
    }
  }
  const std::size_t B = plan.replications_B;
  const std::size_t K = classes.size();

  ReplicationReport report;
  for (std::size_t r = 0; r < K; ++r) {
    std::string name(to_string(classes[r].kind));
    if (std::count_if(classes.begin(), classes.end(), [&](const auto& c) { return c.kind == classes[r].kind; }) > 1) {
      name += "_" + std::to_string(r);
    }
    report.rules.push_back(std::move(name));
  }
  report.welfare.assign(B, std::vector<double>(K, 0.0));
  report.status_quo.assign(B, 0.0);

  parallel_for(B, threads, [&](std::size_t i) {
    const std::size_t b = i + 1;
    const SampleSplit split = split_sample(d.size(), plan.est_fraction, plan.base_seed + b);
    const Dataset est = d.subset(split.est);
    const Dataset test = d.subset(split.test);
    report.status_quo[i] = status_quo_welfare(test).value;
    for (std::size_t r = 0; r < K; ++r) {
      report.welfare[i][r] = classes[r].kind == PolicyKind::random ? random_rule_welfare(test).value
                                                                   : fitted_test_welfare(est, test, classes[r]);
    }
  });

  const SampleSplit first = split_sample(d.size(), plan.est_fraction, plan.base_seed + 1);
  report.est_size = first.est.size();
  report.test_size = first.test.size();
  report.status_quo_mean = mean_of(report.status_quo);
  report.harm_rate.assign(K, 0.0);
  report.mean_welfare.assign(K, 0.0);
  report.gain_over_status_quo.assign(K, 0.0);
  report.mean_gain.assign(K, std::vector<double>(K, 0.0));
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t r = 0; r < K; ++r) {
      const double w = report.welfare[b][r];
      if (w < report.status_quo[b]) report.harm_rate[r] += 1.0;
      report.mean_welfare[r] += w;
      report.gain_over_status_quo[r] += w - report.status_quo[b];
      for (std::size_t c = 0; c < K; ++c) report.mean_gain[r][c] += report.welfare[b][c] - w;
    }
  }
  const auto Bd = static_cast<double>(B);
  for (std::size_t r = 0; r < K; ++r) {
    report.harm_rate[r] /= Bd;
    report.mean_welfare[r] /= Bd;
    report.gain_over_status_quo[r] /= Bd;
    for (auto& g : report.mean_gain[r]) g /= Bd;
  }
  return report;
}

MeasurementSweep run_measurement_sweep(const Dataset& d, const SplitPlan& plan, const PolicyClassSpec& cb_class,
                                       const PolicyClassSpec& augmented_class, std::span<const int> t_grid,
                                       std::size_t R, unsigned threads) {
  if (plan.replications_B == 0 || R == 0) throw ConfigError("B and R must be positive");
  if (cb_class.kind != PolicyKind::covariate_based || augmented_class.kind != PolicyKind::augmented) {
    throw ConfigError("measurement sweep needs a covariate-based and an augmented class");
  }
  for (int t : t_grid) {
    if (t <= 0) throw ConfigError("measurement sweep needs t >= 1");
  }
  const std::size_t B = plan.replications_B;
  const std::size_t T = t_grid.size();

  struct PerSplit {
    double status_quo = 0.0, random = 0.0, cb = 0.0;
    std::vector<double> augmented;  // mean over r, per t
  };
  std::vector<PerSplit> per(B);

  parallel_for(B, threads, [&](std::size_t i) {
    const std::size_t b = i + 1;
    const SampleSplit split = split_sample(d.size(), plan.est_fraction, plan.base_seed + b);
    const Dataset est = d.subset(split.est);
    const Dataset test = d.subset(split.test);
    PerSplit& out = per[i];
    out.status_quo = status_quo_welfare(test).value;
    out.random = random_rule_welfare(test).value;
    out.cb = fitted_test_welfare(est, test, cb_class);
    out.augmented.assign(T, 0.0);
    for (std::size_t ti = 0; ti < T; ++ti) {
      for (std::size_t r = 1; r <= R; ++r) {
        const std::uint64_t seed = design_seed(plan.base_seed, b, t_grid[ti], r);
        const Dataset proxied = build_proxy(
            d, {t_grid[ti], ProxySelection::random_t, derive_seed(seed, kProxyTag), RaggedPolicy::use_available});
        const Dataset est_t = proxied.subset(with_proxy(proxied, split.est));
        Dataset test_t = proxied.subset(split.test);
        close_missing_proxies(test_t);
        out.augmented[ti] += fitted_test_welfare(est_t, test_t, augmented_class);
      }
      out.augmented[ti] /= static_cast<double>(R);
    }
  });

  MeasurementSweep sweep;
  std::vector<double> sq(B), rnd(B), cb(B);
  for (std::size_t i = 0; i < B; ++i) {
    sq[i] = per[i].status_quo;
    rnd[i] = per[i].random;
    cb[i] = per[i].cb;
  }
  sweep.mean_status_quo = mean_of(sq);
  sweep.mean_random = mean_of(rnd);
  sweep.mean_cb = mean_of(cb);
  for (std::size_t ti = 0; ti < T; ++ti) {
    std::vector<double> aug(B), vs_cb(B);
    for (std::size_t i = 0; i < B; ++i) {
      aug[i] = per[i].augmented[ti];
      vs_cb[i] = aug[i] - cb[i];
    }
    SweepRow row;
    row.t = t_grid[ti];
    row.mean_augmented = mean_of(aug);
    row.gain_vs_status_quo = row.mean_augmented - sweep.mean_status_quo;
    row.gain_vs_random = row.mean_augmented - sweep.mean_random;
    row.gain_vs_cb = mean_of(vs_cb);
    row.std_error_vs_cb = std_error_of(vs_cb);
    row.short_units = count_short_units(d, row.t);
    sweep.rows.push_back(row);
  }
  return sweep;
}

std::size_t feasible_n(int t, double B0, double cn, double ct, std::size_t pool_cap) {
  if (!(cn > 0.0) || !(B0 > 0.0)) throw ParameterError("feasible_n needs positive c_n and B0");
  if (t < 0 || ct < 0.0) throw ParameterError("feasible_n needs t >= 0 and c_t >= 0");
  const double affordable = std::floor(B0 / (cn + ct * static_cast<double>(t)));
  if (affordable >= static_cast<double>(pool_cap)) return pool_cap;
  return static_cast<std::size_t>(affordable);
}

DesignFrontier run_algorithm2(const Dataset& d, const DesignEvaluation& config, const SplitPlan& plan,
                              unsigned threads) {
  if (config.budgets.empty() || config.t_grid.empty()) throw ConfigError("budgets and t grid must be nonempty");
  if (plan.replications_B == 0 || config.R == 0) throw ConfigError("B and R must be positive");
  if (config.cb_class.kind != PolicyKind::covariate_based || config.augmented_class.kind != PolicyKind::augmented) {
    throw ConfigError("design evaluation needs a covariate-based and an augmented class");
  }
  for (int t : config.t_grid) {
    if (t < 0) throw ConfigError("t grid entries must be nonnegative");
  }
  const std::size_t B = plan.replications_B;
  const std::size_t nb = config.budgets.size();
  // t = 0 is always evaluated: it is the covariate-only reference.
  std::vector<int> ts = config.t_grid;
  if (std::find(ts.begin(), ts.end(), 0) == ts.end()) ts.insert(ts.begin(), 0);
  const std::size_t nt = ts.size();
  const auto cell = [nt](std::size_t bi, std::size_t ti) { return bi * nt + ti; };

  struct Sums {
    std::vector<double> design, cb, random;
  };
  std::vector<Sums> per(B);

  parallel_for(B, threads, [&](std::size_t i) {
    const std::size_t b = i + 1;
    const std::uint64_t split_seed = plan.base_seed + b;
    const SampleSplit split = split_sample(d.size(), plan.est_fraction, split_seed);
    Sums& out = per[i];
    out.design.assign(nb * nt, 0.0);
    out.cb.assign(nb * nt, 0.0);
    out.random.assign(nb * nt, 0.0);

    const Dataset test = d.subset(split.test);
    const double random_w = random_rule_welfare(test).value;

    for (std::size_t ti = 0; ti < nt; ++ti) {
      const int t = ts[ti];
      if (t == 0) {
        const auto order = subsample_order(split.est, split_seed);
        std::map<std::size_t, double> fitted;
        for (std::size_t bi = 0; bi < nb; ++bi) {
          const std::size_t n = feasible_n(0, config.budgets[bi], config.costs.cn, config.costs.ct, order.size());
          if (n == 0) throw ConfigError("budget " + std::to_string(config.budgets[bi]) + " affords no unit");
          auto it = fitted.find(n);
          if (it == fitted.end()) {
            it = fitted.emplace(n, fitted_test_welfare(prefix_subset(d, order, n), test, config.cb_class)).first;
          }
          out.design[cell(bi, ti)] = it->second;
          out.cb[cell(bi, ti)] = it->second;
          out.random[cell(bi, ti)] = random_w;
        }
        continue;
      }
      for (std::size_t r = 1; r <= config.R; ++r) {
        const std::uint64_t seed = design_seed(plan.base_seed, b, t, r);
        const Dataset proxied =
            build_proxy(d, {t, ProxySelection::random_t, derive_seed(seed, kProxyTag), RaggedPolicy::use_available});
        const auto order = subsample_order(with_proxy(proxied, split.est), seed);
        Dataset test_t = proxied.subset(split.test);
        close_missing_proxies(test_t);
        std::map<std::size_t, std::pair<double, double>> fitted;
        for (std::size_t bi = 0; bi < nb; ++bi) {
          const std::size_t n = feasible_n(t, config.budgets[bi], config.costs.cn, config.costs.ct, order.size());
          if (n == 0) throw ConfigError("budget " + std::to_string(config.budgets[bi]) + " affords no unit");
          auto it = fitted.find(n);
          if (it == fitted.end()) {
            const Dataset est_n = prefix_subset(proxied, order, n);
            it = fitted
                     .emplace(n, std::pair{fitted_test_welfare(est_n, test_t, config.augmented_class),
                                           fitted_test_welfare(est_n, test_t, config.cb_class)})
                     .first;
          }
          out.design[cell(bi, ti)] += it->second.first;
          out.cb[cell(bi, ti)] += it->second.second;
          out.random[cell(bi, ti)] += random_w;
        }
      }
      const auto Rd = static_cast<double>(config.R);
      for (std::size_t bi = 0; bi < nb; ++bi) {
        out.design[cell(bi, ti)] /= Rd;
        out.cb[cell(bi, ti)] /= Rd;
        out.random[cell(bi, ti)] /= Rd;
      }
    }
  });

  const SampleSplit first = split_sample(d.size(), plan.est_fraction, plan.base_seed + 1);
  std::size_t max_t = 0;
  for (int t : ts) max_t = std::max<std::size_t>(max_t, static_cast<std::size_t>(t));
  const std::size_t pool_cb = first.est.size();
  std::size_t pool_aug = 0;
  for (auto i : first.est) pool_aug += d.observations[i].measurements.empty() ? 0 : 1;

  DesignFrontier frontier;
  frontier.est_size = first.est.size();
  frontier.test_size = first.test.size();
  frontier.short_units = count_short_units(d, static_cast<int>(max_t));

  std::vector<FrontierCell> all(nb * nt);
  std::vector<double> column(B);
  for (std::size_t bi = 0; bi < nb; ++bi) {
    for (std::size_t ti = 0; ti < nt; ++ti) {
      FrontierCell& c = all[cell(bi, ti)];
      c.budget = config.budgets[bi];
      c.t = ts[ti];
      c.n_feasible = feasible_n(c.t, c.budget, config.costs.cn, config.costs.ct, c.t == 0 ? pool_cb : pool_aug);
      for (std::size_t i = 0; i < B; ++i) column[i] = per[i].design[cell(bi, ti)];
      c.mean_welfare = mean_of(column);
      c.std_error = std_error_of(column);
      for (std::size_t i = 0; i < B; ++i) column[i] = per[i].cb[cell(bi, ti)];
      c.mean_cb_welfare = mean_of(column);
      for (std::size_t i = 0; i < B; ++i) column[i] = per[i].random[cell(bi, ti)];
      c.mean_random_welfare = mean_of(column);
    }
  }

  const bool zero_requested =
      std::find(config.t_grid.begin(), config.t_grid.end(), 0) != config.t_grid.end();
  for (std::size_t bi = 0; bi < nb; ++bi) {
    BudgetOptimum opt;
    opt.budget = config.budgets[bi];
    std::size_t best_ti = nt;
    for (std::size_t ti = 0; ti < nt; ++ti) {
      if (ts[ti] == 0 && !zero_requested) continue;
      // ts is not sorted when the caller lists t out of order; ties go to the
      // smaller t, the cheaper design.
      if (best_ti == nt || all[cell(bi, ti)].mean_welfare > all[cell(bi, best_ti)].mean_welfare ||
          (all[cell(bi, ti)].mean_welfare == all[cell(bi, best_ti)].mean_welfare && ts[ti] < ts[best_ti])) {
        best_ti = ti;
      }
    }
    all[cell(bi, best_ti)].is_optimal = true;
    const std::size_t zero_ti = static_cast<std::size_t>(std::find(ts.begin(), ts.end(), 0) - ts.begin());
    opt.t_star = ts[best_ti];
    opt.n_star = all[cell(bi, best_ti)].n_feasible;
    opt.welfare_star = all[cell(bi, best_ti)].mean_welfare;
    opt.cb_only_n = all[cell(bi, zero_ti)].n_feasible;
    opt.cb_only_welfare = all[cell(bi, zero_ti)].mean_welfare;
    opt.gain = opt.welfare_star - opt.cb_only_welfare;
    frontier.optima.push_back(opt);
  }
  for (std::size_t bi = 0; bi < nb; ++bi) {
    for (std::size_t ti = 0; ti < nt; ++ti) {
      if (ts[ti] == 0 && !zero_requested) continue;
      frontier.cells.push_back(all[cell(bi, ti)]);
    }
  }
  return frontier;
}

RateResult regret_rate_experiment(const DgpSpec& spec, const PolicyClassSpec& policy_class,
                                  std::span<const std::size_t> n_grid, std::size_t reps, unsigned threads,
                                  int proxy_t) {
  validate_spec(spec);
  if (n_grid.empty() || reps == 0) throw ConfigError("rate experiment needs a nonempty n grid and reps >= 1");
  if (policy_class.kind == PolicyKind::random) throw ConfigError("rate experiment needs a fitted class");
  const bool augmented = policy_class.kind == PolicyKind::augmented;
  const int t = proxy_t > 0 ? proxy_t : spec.measurement_count();
  if (augmented && t == 0) throw ConfigError("augmented class on a DGP without measurements");
  const double best = oracle_welfare(spec);

  std::vector<double> regret(n_grid.size() * reps);
  parallel_for(regret.size(), threads, [&](std::size_t item) {
    const std::size_t ni = item / reps;
    const std::size_t rep = item % reps;
    DgpSpec draw = spec;
    draw.seed = derive_seed(derive_seed(spec.seed, n_grid[ni]), rep);
    Dataset sample = generate(draw, n_grid[ni]);
    if (augmented) sample = build_proxy(sample, {t, ProxySelection::first_t, 0, RaggedPolicy::reject});
    const EwmResult fit = ewm_search(sample, policy_class);
    regret[item] = best - true_welfare(spec, *fit.best.rule, t).value;
  });

  RateResult result;
  std::vector<double> xs, ys;
  for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
    const std::span<const double> block(regret.data() + ni * reps, reps);
    RatePoint p{n_grid[ni], mean_of(block), std_error_of(block)};
    result.points.push_back(p);
    xs.push_back(std::log(static_cast<double>(p.n)));
    ys.push_back(p.mean_regret > 0.0 ? std::log(p.mean_regret) : std::numeric_limits<double>::quiet_NaN());
  }
  if (xs.size() >= 2) {
    const double mx = mean_of(xs);
    const double my = mean_of(ys);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    result.slope = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
    result.intercept = my - result.slope * mx;
  } else {
    result.slope = std::numeric_limits<double>::quiet_NaN();
    result.intercept = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

}  // namespace policylab
