#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "errors.hpp"
#include "measures.hpp"
#include "numeric.hpp"
#include "random.hpp"

namespace mmcoal {

/// Law of the size U of the single large family in a modified Moran generation
/// of size N. Support is a sorted subset of {2..N}.
class OffspringLaw {
 public:
  static constexpr int kMaxCachedMoment = 6;

  /// Probabilities are renormalized; entries must be nonnegative with positive sum.
  static OffspringLaw from_pmf(std::int64_t N, std::vector<std::int64_t> values,
                               std::vector<double> probs) {
    if (N < 2) throw DomainError("population size must be >= 2");
    if (values.size() != probs.size() || values.empty()) {
      throw DomainError("pmf needs matching nonempty values and probabilities");
    }
    OffspringLaw law;
    law.N_ = N;
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    CompensatedSum total;
    for (std::size_t i : order) {
      if (values[i] < 2 || values[i] > N) throw DomainError("family size outside {2..N}");
      if (!(probs[i] >= 0.0) || !std::isfinite(probs[i])) throw DomainError("invalid probability");
      if (!law.values_.empty() && law.values_.back() == values[i]) {
        throw DomainError("duplicate family size in pmf");
      }
      if (probs[i] == 0.0) continue;
      law.values_.push_back(values[i]);
      law.probs_.push_back(probs[i]);
      total += probs[i];
    }
    if (!(total.value() > 0.0)) throw DegenerateError("pmf has no mass");
    for (double& p : law.probs_) p /= total.value();
    law.finalize();
    return law;
  }

  /// U identically equal to u (u = 2 is the standard Moran model).
  static OffspringLaw point(std::int64_t N, std::int64_t u) { return from_pmf(N, {u}, {1.0}); }

  std::int64_t N() const noexcept { return N_; }
  const std::vector<std::int64_t>& values() const noexcept { return values_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  std::int64_t min_support() const noexcept { return values_.front(); }
  std::int64_t max_support() const noexcept { return values_.back(); }
  double mean() const noexcept { return mean_; }
  /// Pair-coalescence probability E((U)_2) / (N)_2.
  double c_N() const noexcept { return c_N_; }
  /// lambda_N when the law was built from a measure, else 0.
  double source_total_rate() const noexcept { return lambda_N_; }

  double probability(std::int64_t u) const noexcept {
    auto it = std::lower_bound(values_.begin(), values_.end(), u);
    if (it == values_.end() || *it != u) return 0.0;
    return probs_[static_cast<std::size_t>(it - values_.begin())];
  }

  /// E((U)_k).
  double factorial_moment(int k) const {
    if (k < 0) throw DomainError("moment order must be nonnegative");
    if (k <= kMaxCachedMoment) return moments_[static_cast<std::size_t>(k)];
    return compute_moment(k);
  }

  std::int64_t sample(Rng& rng) const {
    if (values_.size() == 1) return values_.front();
    const double u = uniform01(rng) * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return values_[static_cast<std::size_t>(it - cdf_.begin())];
  }

 private:
  friend OffspringLaw offspring_law(const LambdaMeasure&, std::int64_t);

  double compute_moment(int k) const {
    CompensatedSum s;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      s += probs_[i] * falling_factorial(static_cast<double>(values_[i]), k);
    }
    return s.value();
  }

  void finalize() {
    cdf_.resize(probs_.size());
    CompensatedSum acc;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      acc += probs_[i];
      cdf_[i] = acc.value();
    }
    for (int k = 0; k <= kMaxCachedMoment; ++k) moments_[static_cast<std::size_t>(k)] = compute_moment(k);
    mean_ = moments_[1];
    const double Nd = static_cast<double>(N_);
    c_N_ = moments_[2] / (Nd * (Nd - 1.0));
  }

  std::int64_t N_ = 0;
  std::vector<std::int64_t> values_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
  std::array<double, kMaxCachedMoment + 1> moments_{};
  double mean_ = 0.0;
  double c_N_ = 0.0;
  double lambda_N_ = 0.0;
};

/// Law of U'_N: P(U'_N = j) = C(N,j) lambda_{N,j} / lambda_N for j in {2..N}.
/// Entries below 1e-40 are dropped before renormalizing.
inline OffspringLaw offspring_law(const LambdaMeasure& m, std::int64_t N) {
  if (N < 3) throw DomainError("offspring law needs N >= 3");
  m.require_probability();
  auto terms = merger_rate_terms(m, N);
  CompensatedSum total;
  for (double t : terms) total += t;
  const double lambda_N = total.value();
  if (!(lambda_N > 0.0) || !std::isfinite(lambda_N)) throw DegenerateError("lambda_N is zero");
  OffspringLaw law;
  law.N_ = N;
  CompensatedSum kept;
  for (std::int64_t j = 2; j <= N; ++j) {
    const double p = terms[static_cast<std::size_t>(j - 2)] / lambda_N;
    if (p < 1e-40) continue;
    law.values_.push_back(j);
    law.probs_.push_back(p);
    kept += p;
  }
  for (double& p : law.probs_) p /= kept.value();
  law.lambda_N_ = lambda_N;
  law.finalize();
  return law;
}

inline double factorial_moment(const OffspringLaw& law, int k) { return law.factorial_moment(k); }

/// U_N = U'_N with probability p_active = lambda_N N^-gamma, otherwise 2.
class ThinnedLaw {
 public:
  ThinnedLaw(std::shared_ptr<const OffspringLaw> base, double gamma) : base_(std::move(base)), gamma_(gamma) {
    if (!base_) throw DomainError("thinned law needs a base law");
    if (!(gamma > 1.0 && gamma < 2.0)) throw DomainError("thinning exponent must lie in (1,2)");
    lambda_N_ = base_->source_total_rate();
    if (!(lambda_N_ > 0.0)) throw DomainError("base law must come from a measure");
    const double Nd = static_cast<double>(base_->N());
    p_active_ = lambda_N_ * std::pow(Nd, -gamma);
    if (!(p_active_ > 0.0 && p_active_ <= 1.0)) {
      throw DomainError("lambda_N N^-gamma = " + std::to_string(p_active_) +
                        " is not a probability at N = " + std::to_string(base_->N()));
    }
  }

  const OffspringLaw& base() const noexcept { return *base_; }
  std::int64_t N() const noexcept { return base_->N(); }
  double gamma() const noexcept { return gamma_; }
  double p_active() const noexcept { return p_active_; }
  double lambda_N() const noexcept { return lambda_N_; }

  /// p_active / lambda_N + (1 - p_active) 2 / (N (N-1)).
  double c_N() const noexcept {
    const double Nd = static_cast<double>(N());
    return p_active_ / lambda_N_ + (1.0 - p_active_) * 2.0 / (Nd * (Nd - 1.0));
  }

  /// The mixture as a plain law.
  OffspringLaw effective() const {
    std::vector<std::int64_t> v = base_->values();
    std::vector<double> p = base_->probs();
    for (double& x : p) x *= p_active_;
    auto it = std::find(v.begin(), v.end(), 2);
    if (it != v.end()) {
      p[static_cast<std::size_t>(it - v.begin())] += 1.0 - p_active_;
    } else {
      v.push_back(2);
      p.push_back(1.0 - p_active_);
    }
    return OffspringLaw::from_pmf(N(), std::move(v), std::move(p));
  }

 private:
  std::shared_ptr<const OffspringLaw> base_;
  double gamma_;
  double lambda_N_ = 0.0;
  double p_active_ = 0.0;
};

inline double coalescence_prob(const OffspringLaw& law) { return law.c_N(); }
inline double coalescence_prob(const ThinnedLaw& law) { return law.c_N(); }

/// X with P(X >= k) = min(1, C k^-alpha), k >= 1.
class HeavyTailLaw {
 public:
  static constexpr std::int64_t kMaxDraw = std::int64_t{1} << 50;

  HeavyTailLaw(double alpha, double C) : alpha_(alpha), C_(C) {
    if (!(alpha >= 1.0 && alpha < 2.0)) throw DomainError("alpha must lie in [1,2)");
    if (!(C >= 1.0) || !std::isfinite(C)) {
      throw DomainError("C must be >= 1 so that the support starts at 1");
    }
    mean_ = compute_mean();
  }

  double alpha() const noexcept { return alpha_; }
  double C() const noexcept { return C_; }
  double survival(std::int64_t k) const noexcept {
    if (k <= 1) return 1.0;
    return std::min(1.0, C_ * std::pow(static_cast<double>(k), -alpha_));
  }
  double pmf(std::int64_t k) const noexcept {
    if (k < 1) return 0.0;
    return survival(k) - survival(k + 1);
  }
  /// E(X) = sum_k S(k); infinite for alpha = 1.
  double mean() const noexcept { return mean_; }

  std::int64_t sample(Rng& rng) const noexcept {
    // Largest k with S(k) >= V.
    const double v = uniform_open01(rng);
    const double x = std::pow(C_ / v, 1.0 / alpha_);
    if (!(x < static_cast<double>(kMaxDraw))) return kMaxDraw;
    const auto k = static_cast<std::int64_t>(std::floor(x));
    return std::max<std::int64_t>(1, k);
  }

 private:
  double compute_mean() const {
    if (alpha_ == 1.0) return kInf;
    // S(k) = 1 for k <= K0 = floor(C^(1/alpha)); the tail is C (zeta(alpha) - partial sum).
    const auto K0 = static_cast<std::int64_t>(std::floor(std::pow(C_, 1.0 / alpha_)));
    CompensatedSum partial;
    for (std::int64_t k = 1; k <= K0; ++k) partial += std::pow(static_cast<double>(k), -alpha_);
    return static_cast<double>(K0) + C_ * (std::riemann_zeta(alpha_) - partial.value());
  }

  double alpha_;
  double C_;
  double mean_;
};

inline std::int64_t sample_heavy_tail(const HeavyTailLaw& tail, Rng& rng) { return tail.sample(rng); }

}  // namespace mmcoal
