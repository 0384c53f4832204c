#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "errors.hpp"

namespace mmcoal {

/// sup |F_n - F| for the empirical CDF of `sample` against a continuous CDF.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("KS statistic needs a nonempty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sample.size()) {
    std::size_t j = i;
    while (j < sample.size() && sample[j] == sample[i]) ++j;
    const double f = cdf(sample[i]);
    d = std::max({d, std::fabs(static_cast<double>(j) / n - f), std::fabs(f - static_cast<double>(i) / n)});
    i = j;
  }
  return d;
}

/// Two-sample KS distance sup |F_a - F_b|, ties handled by evaluating after each
/// distinct value.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS statistic needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      x = a[i];
    } else {
      x = b[j];
    }
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Half the L1 distance; the shorter pmf is padded with zeros.
inline double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.empty() || q.empty()) throw DomainError("TV distance needs nonempty pmfs");
  const std::size_t n = std::max(p.size(), q.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    s += std::fabs(a - b);
  }
  return 0.5 * s;
}

/// Empirical pmf of integer outcomes on {0..size-1}.
inline std::vector<double> empirical_pmf(const std::vector<int>& outcomes, std::size_t size) {
  if (outcomes.empty()) throw DomainError("empirical pmf needs outcomes");
  std::vector<double> p(size, 0.0);
  for (int x : outcomes) {
    if (x < 0 || static_cast<std::size_t>(x) >= size) throw DomainError("outcome outside pmf support");
    p[static_cast<std::size_t>(x)] += 1.0;
  }
  for (double& v : p) v /= static_cast<double>(outcomes.size());
  return p;
}

/// Asymptotic KS critical value c(level) sqrt(1/n + 1/m) with c = sqrt(-log(level/2)/2)
/// (1.628 at level 0.01). Pass m = 0 for the one-sample case.
inline double ks_critical_value(std::size_t n, std::size_t m = 0, double level = 0.01) {
  const double c = std::sqrt(-0.5 * std::log(level / 2.0));
  double f = 1.0 / static_cast<double>(n);
  if (m) f += 1.0 / static_cast<double>(m);
  return c * std::sqrt(f);
}

}  // namespace mmcoal
