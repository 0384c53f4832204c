#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <math.h>

namespace mmcoal {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// lgamma writes the global signgam; the reentrant variant avoids the race.
inline double log_gamma(double x) noexcept {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

inline double log_beta(double a, double b) noexcept {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

/// log C(n, k); -inf outside 0 <= k <= n.
inline double log_binomial(double n, double k) noexcept {
  if (k < 0 || k > n) return -kInf;
  if (k == 0 || k == n) return 0.0;
  return log_gamma(n + 1) - log_gamma(k + 1) - log_gamma(n - k + 1);
}

/// C(n, k) as a double by the multiplicative formula (accurate for moderate n).
inline double binomial(std::int64_t n, std::int64_t k) noexcept {
  if (k < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (std::int64_t i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return r;
}

/// (x)_k = x (x-1) ... (x-k+1).
inline double falling_factorial(double x, int k) noexcept {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= (x - i);
  return r;
}

/// log P(K = k) for K ~ Hypergeometric(total, successes, draws).
inline double log_hypergeometric_pmf(std::int64_t k, std::int64_t total, std::int64_t successes,
                                     std::int64_t draws) noexcept {
  const double t = static_cast<double>(total);
  const double s = static_cast<double>(successes);
  const double d = static_cast<double>(draws);
  const double kk = static_cast<double>(k);
  return log_binomial(s, kk) + log_binomial(t - s, d - kk) - log_binomial(t, d);
}

inline double hypergeometric_pmf(std::int64_t k, std::int64_t total, std::int64_t successes,
                                 std::int64_t draws) noexcept {
  if (k < 0 || k > successes || k > draws || draws - k > total - successes) return 0.0;
  return std::exp(log_hypergeometric_pmf(k, total, successes, draws));
}

inline double log_sum_exp(const std::vector<double>& xs) noexcept {
  double m = -kInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  CompensatedSum s;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s.value());
}

}  // namespace mmcoal
