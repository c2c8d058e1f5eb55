#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "fixtures.hpp"
#include "policylab/core.hpp"
#include "policylab/error.hpp"
#include "policylab/parallel.hpp"
#include "policylab/rng.hpp"

using namespace policylab;
using fixtures::unit;

TEST(RuleAssign, VacuousThresholdsTreatEveryone) {
  const ThresholdRule rule{{kNoThreshold, kNoThreshold}, std::nullopt};
  EXPECT_EQ(rule_assign(rule, unit(0, false, 0.5, {-1e300, 5.0})), 1);
  EXPECT_EQ(rule_assign(rule, unit(0, false, 0.5, {0.0, -7.0})), 1);
}

TEST(RuleAssign, FirstConstraintFails) {
  const ThresholdRule rule{{30, 8}, std::nullopt};
  EXPECT_EQ(rule_assign(rule, unit(0, false, 0.5, {29, 10})), 0);
}

TEST(RuleAssign, ProxyUsesStrictInequality) {
  const ThresholdRule rule{{30, 8}, 0.4};
  EXPECT_EQ(rule_assign(rule, unit(0, false, 0.5, {35, 10}, 0.4)), 0);
  EXPECT_EQ(rule_assign(rule, unit(0, false, 0.5, {35, 10}, 0.41)), 1);
}

TEST(RuleAssign, CovariatesUseWeakInequality) {
  const ThresholdRule rule{{30, 8}, std::nullopt};
  EXPECT_EQ(rule_assign(rule, unit(0, false, 0.5, {30, 8})), 1);
}

TEST(RuleAssign, AugmentedRuleOnProxylessUnitThrows) {
  const ThresholdRule rule{{kNoThreshold}, 0.0};
  EXPECT_THROW(rule_assign(rule, unit(0, false, 0.5, {1.0})), ConfigError);
}

TEST(RuleAssign, DimensionMismatchThrows) {
  const ThresholdRule rule{{0.0, 0.0}, std::nullopt};
  EXPECT_THROW(rule_assign(rule, unit(0, false, 0.5, {1.0})), ConfigError);
}

TEST(RuleAssign, AugmentedTreatedSetIsSubsetOfCovariateRule) {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 200; ++rep) {
    const Dataset d = fixtures::random_sample(gen, 25, 2, true);
    const std::vector<double> th{fixtures::random_axis(gen, 1)[0], fixtures::random_axis(gen, 1)[0]};
    const ThresholdRule cb{th, std::nullopt};
    const ThresholdRule aug{th, fixtures::random_axis(gen, 1, 0.5)[0]};
    for (const auto& o : d.observations) {
      EXPECT_LE(rule_assign(aug, o), rule_assign(cb, o));
      EXPECT_EQ(rule_assign(aug, o), rule_assign(aug, o));
    }
  }
}

TEST(RuleAssign, TreatAllRule) {
  const auto r = treat_all_rule(3, true);
  EXPECT_EQ(r.covariate_thresholds.size(), 3u);
  EXPECT_TRUE(r.augmented());
  EXPECT_EQ(rule_assign(r, unit(0, false, 0.5, {-5, 0, 5}, -1e9)), 1);
  EXPECT_EQ(r.threshold_vector().size(), 4u);
}

TEST(ValidateDataset, ReportsOverlapViolationRow) {
  Dataset d;
  d.overlap_k = 0.1;
  d.outcome_bound_M = 10;
  d.observations = {unit(0, false, 0.5, {}), unit(0, false, 0.01, {}), unit(0, true, 0.5, {})};
  const auto report = validate_dataset(d);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].assumption, "strict_overlap");
  EXPECT_EQ(report[0].row, 1u);
}

TEST(ValidateDataset, ReportsBoundViolation) {
  Dataset d;
  d.overlap_k = 0.1;
  d.outcome_bound_M = 10;
  d.observations = {unit(7, true, 0.5, {})};
  const auto report = validate_dataset(d);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].assumption, "bounded_outcomes");
  EXPECT_EQ(report[0].row, 0u);
}

TEST(ValidateDataset, CleanSampleGivesEmptyReport) {
  Dataset d;
  d.overlap_k = 0.2;
  d.outcome_bound_M = 10;
  for (double y : {-5.0, -1.0, 0.0, 3.5, 5.0}) d.observations.push_back(unit(y, y > 0, 1.0 / 3.0, {y}));
  EXPECT_TRUE(validate_dataset(d).empty());
}

TEST(ValidateDataset, StructuralProblems) {
  Dataset d;
  d.overlap_k = 0.7;
  d.observations = {unit(0, false, 0.5, {1.0}), unit(0, false, 0.5, {1.0, 2.0})};
  const auto report = validate_dataset(d);
  std::set<std::string> kinds;
  for (const auto& v : report) kinds.insert(v.assumption);
  EXPECT_TRUE(kinds.count("overlap_constant"));
  EXPECT_TRUE(kinds.count("covariate_dimension"));
  EXPECT_FALSE(report[0].row.has_value());
}

TEST(PolicyKindNames, RoundTripAndAliases) {
  for (auto k : {PolicyKind::random, PolicyKind::covariate_based, PolicyKind::augmented}) {
    EXPECT_EQ(parse_policy_kind(to_string(k)), k);
  }
  EXPECT_EQ(parse_policy_kind("cb"), PolicyKind::covariate_based);
  EXPECT_EQ(parse_policy_kind("rand"), PolicyKind::random);
  EXPECT_THROW(parse_policy_kind("forest"), ConfigError);
}

TEST(QuantileGrid, LowerOrderStatisticsWithSentinel) {
  const std::vector<double> v{5, 1, 4, 2, 3, 6, 8, 7, 10, 9};
  const auto axis = quantile_grid(v, 5);
  const std::vector<double> expected{kNoThreshold, 2, 4, 6, 8};
  EXPECT_EQ(axis, expected);
}

TEST(QuantileGrid, DeduplicatesAndSkipsNonFinite) {
  const std::vector<double> v{1, 1, 1, 1, kNoThreshold, std::nan("")};
  EXPECT_EQ(quantile_grid(v, 4), (std::vector<double>{kNoThreshold, 1.0}));
  EXPECT_EQ(quantile_grid({}, 4), (std::vector<double>{kNoThreshold}));
}

TEST(PolicyClassSpecShape, GridSizeAndActiveDimensions) {
  PolicyClassSpec s{PolicyKind::augmented, {{kNoThreshold, 1.0}, {0, 1, 2}}, {kNoThreshold, 0.5}, 3, 0};
  EXPECT_EQ(s.active_dimensions(), 3u);
  EXPECT_EQ(s.grid_size(), 12u);
  EXPECT_TRUE(s.has_grid());
  s.kind = PolicyKind::covariate_based;
  EXPECT_EQ(s.grid_size(), 6u);
  EXPECT_FALSE((PolicyClassSpec{PolicyKind::random, {}, {}, 1, 0}).has_grid());
}

TEST(MaterializeGrid, AugmentedNeedsProxy) {
  Dataset d;
  d.observations = {unit(1, true, 0.5, {1.0})};
  PolicyClassSpec s{PolicyKind::augmented, {}, {}, 2, 4};
  EXPECT_THROW(materialize_grid(s, d), ConfigError);
  d.observations[0].proxy = 0.3;
  const auto m = materialize_grid(s, d);
  EXPECT_EQ(m.covariate_grid.size(), 1u);
  EXPECT_EQ(m.proxy_grid, (std::vector<double>{kNoThreshold, 0.3}));
  EXPECT_THROW(materialize_grid(PolicyClassSpec{PolicyKind::covariate_based, {}, {}, 1, 0}, d), ConfigError);
}

TEST(DatasetOps, SubsetKeepsConstants) {
  Dataset d;
  d.overlap_k = 0.3;
  d.outcome_bound_M = 4;
  d.observations = {unit(1, true, 0.5, {1}), unit(2, false, 0.5, {2}), unit(3, true, 0.5, {3})};
  const std::vector<std::size_t> idx{2, 0};
  const Dataset s = d.subset(idx);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.observations[0].outcome, 3);
  EXPECT_EQ(s.overlap_k, 0.3);
  EXPECT_EQ(s.outcome_bound_M, 4);
  EXPECT_FALSE(d.has_proxy());
}

TEST(Rng, KeyedStreamsAreReproducibleAndDistinct) {
  Rng a(42, 7), b(42, 7), c(42, 8), e(43, 7);
  std::vector<std::uint64_t> va, vb, vc, ve;
  for (int i = 0; i < 16; ++i) {
    va.push_back(a());
    vb.push_back(b());
    vc.push_back(c());
    ve.push_back(e());
  }
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  EXPECT_NE(va, ve);
}

TEST(Rng, UniformAndNormalMoments) {
  Rng r(1, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.015);
}

TEST(Rng, BelowStaysInRange) {
  Rng r(3, 0);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng r(5, 0);
  auto p = shuffled_indices(100, r);
  std::vector<std::size_t> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(100);
  std::iota(iota.begin(), iota.end(), 0);
  EXPECT_EQ(sorted, iota);
  EXPECT_NE(p, iota);
}

TEST(Rng, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
  static_assert(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(100, 3,
                            [](std::size_t i) {
                              if (i == 37) throw ConfigError("boom");
                            }),
               ConfigError);
}

TEST(ParallelFor, ThreadCountFromEnvironment) {
  ::setenv("POLICYLAB_THREADS", "3", 1);
  EXPECT_EQ(default_thread_count(), 3u);
  ::setenv("POLICYLAB_THREADS", "zero", 1);
  EXPECT_GE(default_thread_count(), 1u);
  ::unsetenv("POLICYLAB_THREADS");
}
