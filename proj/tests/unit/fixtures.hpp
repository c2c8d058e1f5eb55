#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "policylab/core.hpp"

namespace fixtures {

inline policylab::Observation unit(double y, bool d, double e, std::vector<double> x,
                                   std::optional<double> proxy = std::nullopt) {
  policylab::Observation o;
  o.outcome = y;
  o.treated = d;
  o.propensity = e;
  o.covariates = std::move(x);
  o.proxy = proxy;
  return o;
}

/// Small random sample with integer-valued covariates and outcomes, so grid
/// ties and equal welfare values are common.
inline policylab::Dataset random_sample(std::mt19937_64& gen, std::size_t n, std::size_t dim, bool proxy) {
  std::uniform_int_distribution<int> small(-3, 3);
  std::uniform_int_distribution<int> outcome(-5, 5);
  std::uniform_real_distribution<double> prop(0.2, 0.8);
  std::bernoulli_distribution coin(0.5);
  policylab::Dataset d;
  d.overlap_k = 0.2;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(dim);
    for (auto& v : x) v = small(gen);
    const double e = coin(gen) ? 0.5 : prop(gen);
    d.observations.push_back(unit(outcome(gen), coin(gen), e, std::move(x),
                                  proxy ? std::optional<double>(small(gen) * 0.5) : std::nullopt));
  }
  return d;
}

/// Random sorted axis of up to `max_len` values drawn from the support of
/// random_sample, optionally led by the no-threshold sentinel.
inline std::vector<double> random_axis(std::mt19937_64& gen, std::size_t max_len, double scale = 1.0) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<int> value(-4, 4);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> axis;
  const std::size_t l = len(gen);
  if (coin(gen)) axis.push_back(policylab::kNoThreshold);
  while (axis.size() < l) axis.push_back(value(gen) * scale);
  return policylab::normalize_axis(axis);
}

}  // namespace fixtures
