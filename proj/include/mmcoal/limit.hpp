#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "errors.hpp"
#include "genealogy.hpp"
#include "measures.hpp"
#include "profiles.hpp"
#include "random.hpp"

namespace mmcoal {

/// Samples the Lambda-n-coalescent run on the clock G: jumps occur at rate
/// lambda_b in internal time tau, and the event time is G^{-1}(tau).
inline Genealogy simulate_limit(const RateTable& rates, int n, const TimeChange& tc, Rng& rng) {
  if (n < 2) throw DomainError("sample size must be >= 2");
  if (n > rates.n_max()) throw DomainError("rate table too small for the sample size");
  Genealogy g(n);
  std::vector<int> active(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = i;
  double tau = 0.0;
  while (active.size() > 1) {
    const auto b = static_cast<std::int64_t>(active.size());
    const double rate = rates.total(b);
    if (!(rate > 0.0)) throw DegenerateError("total merger rate is zero");
    tau += exponential(rng, rate);
    const double t = tc.inverse(tau);
    const std::int64_t k = rates.merger_size(b, uniform01(rng));
    // Partial Fisher-Yates: the first k entries become a uniform k-subset.
    for (std::int64_t i = 0; i < k; ++i) {
      const std::int64_t j = i + uniform_index(rng, b - i);
      std::swap(active[static_cast<std::size_t>(i)], active[static_cast<std::size_t>(j)]);
    }
    std::vector<int> children(active.begin(), active.begin() + k);
    const int node = g.merge(t, children);
    active.erase(active.begin(), active.begin() + k);
    active.push_back(node);
  }
  return g;
}

inline Genealogy simulate_limit(const LambdaMeasure& m, int n, const TimeChange& tc, Rng& rng) {
  m.require_probability();
  if (n < 2) throw DomainError("sample size must be >= 2");
  return simulate_limit(RateTable(m, n), n, tc, rng);
}

/// P(next event among b blocks occurs within duration t after t0)
/// = 1 - exp(-lambda_b (G(t0 + t) - G(t0))).
inline double waiting_time_cdf(double lambda_b, const TimeChange& tc, double t0, double t) {
  if (!(lambda_b > 0.0)) throw DomainError("lambda_b must be positive");
  if (!(t >= 0.0) || !(t0 >= 0.0)) throw DomainError("times must be nonnegative");
  if (t == 0.0) return 0.0;
  const double dG = tc(t0 + t) - tc(t0);
  return -std::expm1(-lambda_b * dG);
}

/// Waiting time after t0 under a single exponential epoch with rate rho, i.e. a
/// Gompertz law with scale lambda_b exp(rho gamma t0) and shape rho gamma. Returns
/// +inf when no event ever happens (possible for rho gamma < 0).
inline double sample_gompertz_event(double lambda_b, double rho, double gamma, double t0, Rng& rng) {
  if (!(lambda_b > 0.0)) throw DomainError("lambda_b must be positive");
  const double e = exponential(rng, 1.0);
  const double b = rho * gamma;
  if (b == 0.0) return e / lambda_b;
  const double arg = b * e * std::exp(-b * t0) / lambda_b;
  if (arg <= -1.0) return kInf;
  return std::log1p(arg) / b;
}

/// Adds Poisson(theta * length) mutations to every branch.
inline Genealogy drop_mutations(const Genealogy& g, double theta, Rng& rng) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw DomainError("theta must be nonnegative");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(g.node_count()), 0);
  for (int v = 0; v < g.node_count(); ++v) {
    counts[static_cast<std::size_t>(v)] = poisson_draw(rng, theta * g.branch_length(v));
  }
  Genealogy out = g;
  out.set_mutations(std::move(counts));
  return out;
}

}  // namespace mmcoal
