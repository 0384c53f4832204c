#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"

namespace mmcoal {

struct ConstantEpoch {
  double size;
  bool operator==(const ConstantEpoch&) const = default;
};

/// nu(t) = start_size * exp(-rate * (t - t_start)).
struct ExponentialEpoch {
  double rate;
  double start_size;
  bool operator==(const ExponentialEpoch&) const = default;
};

struct Epoch {
  double start;
  double end;  // +inf for the last epoch
  std::variant<ConstantEpoch, ExponentialEpoch> shape;

  double entry_size() const noexcept {
    if (const auto* c = std::get_if<ConstantEpoch>(&shape)) return c->size;
    return std::get<ExponentialEpoch>(shape).start_size;
  }
  double size_at(double t) const noexcept {
    if (const auto* c = std::get_if<ConstantEpoch>(&shape)) return c->size;
    const auto& e = std::get<ExponentialEpoch>(shape);
    return e.start_size * std::exp(-e.rate * (t - start));
  }
  /// Left limit of nu at the end of the epoch.
  double exit_size() const noexcept { return size_at(end); }

  bool operator==(const Epoch&) const = default;
};

/// Relative population size nu(t) on the coalescent time scale, piecewise
/// constant or exponential, right-continuous at epoch boundaries.
class SizeProfile {
 public:
  explicit SizeProfile(std::vector<Epoch> epochs) : epochs_(std::move(epochs)) {
    if (epochs_.empty()) throw DomainError("profile needs at least one epoch");
    if (epochs_.front().start != 0.0) throw DomainError("first epoch must start at 0");
    for (std::size_t i = 0; i < epochs_.size(); ++i) {
      const Epoch& e = epochs_[i];
      if (!(e.end > e.start)) throw DomainError("epoch end must exceed its start");
      if (i + 1 < epochs_.size()) {
        if (!std::isfinite(e.end)) throw DomainError("only the last epoch may be unbounded");
        if (epochs_[i + 1].start != e.end) throw DomainError("epochs must tile [0, inf)");
      } else if (e.end != kInf) {
        throw DomainError("last epoch must end at inf");
      }
      const double s = e.entry_size();
      if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("epoch size must be positive");
      if (const auto* x = std::get_if<ExponentialEpoch>(&e.shape)) {
        if (!std::isfinite(x->rate)) throw DomainError("epoch rate must be finite");
      }
    }
  }

  static SizeProfile constant(double size = 1.0) {
    return SizeProfile({Epoch{0.0, kInf, ConstantEpoch{size}}});
  }
  static SizeProfile exponential(double rate, double start_size = 1.0) {
    return SizeProfile({Epoch{0.0, kInf, ExponentialEpoch{rate, start_size}}});
  }

  const std::vector<Epoch>& epochs() const noexcept { return epochs_; }

  std::size_t epoch_index(double t) const {
    if (!(t >= 0.0)) throw DomainError("profile time must be nonnegative");
    auto it = std::upper_bound(epochs_.begin(), epochs_.end(), t,
                               [](double x, const Epoch& e) { return x < e.start; });
    return static_cast<std::size_t>(it - epochs_.begin()) - 1;
  }

  double operator()(double t) const { return epochs_[epoch_index(t)].size_at(t); }

  bool normalized(double tol = 1e-12) const noexcept {
    return std::fabs(epochs_.front().entry_size() - 1.0) <= tol;
  }

  bool is_constant() const noexcept {
    for (const auto& e : epochs_) {
      if (!std::holds_alternative<ConstantEpoch>(e.shape)) return false;
      if (e.entry_size() != epochs_.front().entry_size()) return false;
    }
    return true;
  }

  bool operator==(const SizeProfile&) const = default;

 private:
  std::vector<Epoch> epochs_;
};

inline double eval_profile(const SizeProfile& profile, double t) { return profile(t); }

/// The clock G(t) = integral_0^t nu(s)^(-gamma) ds and its inverse.
class TimeChange {
 public:
  TimeChange(SizeProfile profile, double gamma) : profile_(std::move(profile)), gamma_(gamma) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be >= 0");
    const auto& ep = profile_.epochs();
    cumulative_.resize(ep.size() + 1);
    cumulative_[0] = 0.0;
    for (std::size_t i = 0; i < ep.size(); ++i) {
      cumulative_[i + 1] = cumulative_[i] + partial(i, ep[i].end - ep[i].start);
    }
  }

  const SizeProfile& profile() const noexcept { return profile_; }
  double gamma() const noexcept { return gamma_; }

  double operator()(double t) const {
    if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
    if (gamma_ == 0.0) return t;
    if (t == kInf) return cumulative_.back();
    const std::size_t i = profile_.epoch_index(t);
    return cumulative_[i] + partial(i, t - profile_.epochs()[i].start);
  }

  /// sup of G over [0, inf).
  double supremum() const noexcept { return gamma_ == 0.0 ? kInf : cumulative_.back(); }

  double inverse(double tau) const {
    if (!(tau >= 0.0)) throw DomainError("internal time must be nonnegative");
    if (gamma_ == 0.0) return tau;
    if (!(tau < supremum())) {
      throw OverflowError("internal time " + std::to_string(tau) + " beyond the range of the clock");
    }
    const auto& ep = profile_.epochs();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end() - 1, tau);
    const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    const Epoch& e = ep[i];
    const double rem = tau - cumulative_[i];
    double dt;
    if (const auto* c = std::get_if<ConstantEpoch>(&e.shape)) {
      dt = rem * std::pow(c->size, gamma_);
    } else {
      const auto& x = std::get<ExponentialEpoch>(e.shape);
      const double b = x.rate * gamma_;
      const double scaled = rem * std::pow(x.start_size, gamma_);
      dt = (b == 0.0) ? scaled : std::log1p(b * scaled) / b;
    }
    double t = e.start + dt;
    if (!std::isfinite(t) || t < e.start || t > e.end) t = bisect(i, tau);
    if (!std::isfinite(t)) throw OverflowError("inverse clock not representable");
    return t;
  }

 private:
  // Integral of nu^-gamma over [start_i, start_i + dt].
  double partial(std::size_t i, double dt) const {
    const Epoch& e = profile_.epochs()[i];
    if (dt == 0.0) return 0.0;
    if (const auto* c = std::get_if<ConstantEpoch>(&e.shape)) {
      return dt * std::pow(c->size, -gamma_);
    }
    const auto& x = std::get<ExponentialEpoch>(e.shape);
    const double b = x.rate * gamma_;
    const double s = std::pow(x.start_size, -gamma_);
    if (b == 0.0) return dt * s;
    if (dt == kInf) return b > 0.0 ? kInf : s / (-b);
    return s * std::expm1(b * dt) / b;
  }

  double bisect(std::size_t i, double tau) const {
    const Epoch& e = profile_.epochs()[i];
    double lo = e.start;
    double hi = e.end;
    if (!std::isfinite(hi)) {
      hi = lo + 1.0;
      while (cumulative_[i] + partial(i, hi - e.start) < tau) {
        hi = e.start + 2.0 * (hi - e.start);
        if (!std::isfinite(hi)) return kInf;
      }
    }
    for (int iter = 0; iter < 200 && hi - lo > 0; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (cumulative_[i] + partial(i, mid - e.start) < tau) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  SizeProfile profile_;
  double gamma_;
  std::vector<double> cumulative_;
};

inline double time_change(const TimeChange& tc, double t) { return tc(t); }
inline double invert_time_change(const TimeChange& tc, double tau) { return tc.inverse(tau); }

enum class CapsMode { Exact, Ramped };

/// Per-generation limits on |N_r - N_{r-1}|. growth is N_{r-1} - N_r > 0
/// (growth forward in time), decline the opposite.
struct GrowthCaps {
  std::optional<std::int64_t> max_growth;
  std::optional<std::int64_t> max_decline;
  std::optional<double> max_relative_step;  // fraction of the reference size

  bool empty() const noexcept { return !max_growth && !max_decline && !max_relative_step; }
};

struct CapViolation {
  std::int64_t generation;
  std::int64_t change;  // N_{r-1} - N_r
  std::int64_t limit;
};

struct SizeRun {
  std::int64_t first;
  std::int64_t last;
  std::int64_t size;
};

/// Sizes N_0, ..., N_R backward in time, stored run-length encoded.
class GenerationSchedule {
 public:
  GenerationSchedule() = default;

  static GenerationSchedule from_sizes(std::int64_t reference_N, double c_N,
                                       const std::vector<std::int64_t>& sizes,
                                       CapsMode mode = CapsMode::Exact) {
    if (sizes.empty() || sizes.front() != reference_N) {
      throw DomainError("schedule must start at the reference size");
    }
    GenerationSchedule s;
    s.reference_N_ = reference_N;
    s.c_N_ = c_N;
    s.mode_ = mode;
    for (std::size_t r = 0; r < sizes.size(); ++r) {
      if (sizes[r] < 2) throw DomainError("schedule sizes must be >= 2");
      s.push(static_cast<std::int64_t>(r), sizes[r]);
    }
    return s;
  }

  std::int64_t reference_N() const noexcept { return reference_N_; }
  double c_N() const noexcept { return c_N_; }
  CapsMode mode() const noexcept { return mode_; }
  /// R, the last generation index.
  std::int64_t length() const noexcept { return runs_.empty() ? -1 : runs_.back().last; }
  const std::vector<SizeRun>& runs() const noexcept { return runs_; }

  std::size_t run_index(std::int64_t r) const {
    if (r < 0 || r > length()) {
      throw HorizonError("generation " + std::to_string(r) + " beyond schedule horizon " +
                         std::to_string(length()));
    }
    auto it = std::upper_bound(runs_.begin(), runs_.end(), r,
                               [](std::int64_t x, const SizeRun& run) { return x < run.first; });
    return static_cast<std::size_t>(it - runs_.begin()) - 1;
  }
  std::int64_t size(std::int64_t r) const { return runs_[run_index(r)].size; }
  /// d_{N,r} = N_{r-1} - N_r; zero at r = 0.
  std::int64_t change(std::int64_t r) const { return r == 0 ? 0 : size(r - 1) - size(r); }

  std::vector<std::int64_t> sizes() const {
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(length() + 1));
    for (const auto& run : runs_) {
      for (std::int64_t r = run.first; r <= run.last; ++r) out.push_back(run.size);
    }
    return out;
  }

  const std::vector<CapViolation>& violations() const noexcept { return violations_; }
  std::int64_t clamped_generations() const noexcept { return clamped_; }
  double distortion_sup() const noexcept { return distortion_sup_; }
  double distortion_l1() const noexcept { return distortion_l1_; }

  void write_tsv(std::ostream& os) const {
    os << "r\tN_r\td\n";
    std::int64_t prev = reference_N_;
    for (const auto& run : runs_) {
      for (std::int64_t r = run.first; r <= run.last; ++r) {
        os << r << '\t' << run.size << '\t' << (r == 0 ? 0 : prev - run.size) << '\n';
        prev = run.size;
      }
    }
  }

 private:
  friend GenerationSchedule build_schedule(const SizeProfile&, std::int64_t, double, double,
                                           const GrowthCaps&, CapsMode);

  void push(std::int64_t r, std::int64_t n) {
    if (!runs_.empty() && runs_.back().size == n && runs_.back().last == r - 1) {
      runs_.back().last = r;
    } else {
      runs_.push_back(SizeRun{r, r, n});
    }
  }
  void push_range(std::int64_t first, std::int64_t last, std::int64_t n) {
    if (last < first) return;
    push(first, n);
    runs_.back().last = last;
  }

  std::int64_t reference_N_ = 0;
  double c_N_ = 0.0;
  CapsMode mode_ = CapsMode::Exact;
  std::vector<SizeRun> runs_;
  std::vector<CapViolation> violations_;
  std::int64_t clamped_ = 0;
  double distortion_sup_ = 0.0;
  double distortion_l1_ = 0.0;
};

/// Discretizes nu on the generation grid t = r c_N for r = 0..ceil(horizon/c_N).
/// Exact mode rounds N nu(r c_N) and records every step that breaks the caps;
/// Ramped mode moves toward the target by at most the caps per generation
/// (and by at most floor(sqrt(c_N) N) when no relative cap is given).
inline GenerationSchedule build_schedule(const SizeProfile& profile, std::int64_t N, double c_N,
                                         double horizon, const GrowthCaps& caps, CapsMode mode) {
  if (N < 2) throw DomainError("reference size must be >= 2");
  if (!(c_N > 0.0 && c_N <= 1.0)) throw DomainError("c_N must lie in (0,1]");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be finite");
  if (!profile.normalized()) throw DomainError("profile must satisfy nu(0) = 1");
  const double rlen = std::ceil(horizon / c_N);
  if (rlen > 4.0e18) throw DomainError("horizon too long for the generation grid");
  const auto R = static_cast<std::int64_t>(rlen);

  GenerationSchedule s;
  s.reference_N_ = N;
  s.c_N_ = c_N;
  s.mode_ = mode;
  const double Nd = static_cast<double>(N);
  const auto& epochs = profile.epochs();

  auto target = [&](double nu, bool& clamped) {
    const double x = std::round(Nd * nu);
    clamped = x < 2.0;
    if (clamped) return std::int64_t{2};
    if (x > 9.0e18) throw OverflowError("population size overflow");
    return static_cast<std::int64_t>(x);
  };

  std::optional<double> relative = caps.max_relative_step;
  if (mode == CapsMode::Ramped && !relative) relative = std::sqrt(c_N);
  std::int64_t up_limit = std::numeric_limits<std::int64_t>::max();    // N_r - N_{r-1}
  std::int64_t down_limit = std::numeric_limits<std::int64_t>::max();  // N_{r-1} - N_r
  if (relative) {
    const auto step = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(*relative * Nd)));
    up_limit = std::min(up_limit, step);
    down_limit = std::min(down_limit, step);
  }
  if (caps.max_growth) down_limit = std::min(down_limit, *caps.max_growth);
  if (caps.max_decline) up_limit = std::min(up_limit, *caps.max_decline);

  CompensatedSum l1;
  std::int64_t prev = N;
  std::int64_t r = 0;
  std::size_t ei = 0;
  while (r <= R) {
    const double t = static_cast<double>(r) * c_N;
    while (ei + 1 < epochs.size() && t >= epochs[ei + 1].start) ++ei;
    const Epoch& e = epochs[ei];
    const double nu = e.size_at(t);
    bool clamped = false;
    const std::int64_t want = target(nu, clamped);
    std::int64_t n = want;
    if (r == 0) n = N;
    if (mode == CapsMode::Ramped && r > 0) {
      const std::int64_t diff = want - prev;
      n = prev + std::clamp(diff, -down_limit, up_limit);
    } else if (r > 0) {
      const std::int64_t d = prev - n;
      if (d > 0 && d > down_limit) s.violations_.push_back(CapViolation{r, d, down_limit});
      if (d < 0 && -d > up_limit) s.violations_.push_back(CapViolation{r, d, up_limit});
    }
    if (clamped && n == 2) ++s.clamped_;
    // Fast-forward through a constant epoch once the size has settled.
    if (std::holds_alternative<ConstantEpoch>(e.shape) && n == want) {
      double end_r = std::ceil(e.end / c_N) - 1.0;  // last r with r c_N < end
      std::int64_t last = (end_r >= static_cast<double>(R)) ? R : static_cast<std::int64_t>(end_r);
      // Guard against rounding of r c_N near the boundary.
      while (last > r && static_cast<double>(last) * c_N >= e.end) --last;
      if (last < r) last = r;
      const double dev = std::fabs(static_cast<double>(n) / Nd - nu);
      s.distortion_sup_ = std::max(s.distortion_sup_, dev);
      s.push_range(r, last, n);
      const std::int64_t count = last - r + 1;
      const std::int64_t counted = std::min(count, R - r);  // L1 over [0, R c_N)
      if (counted > 0) l1 += c_N * dev * static_cast<double>(counted);
      if (clamped) s.clamped_ += count - 1;
      prev = n;
      r = last + 1;
      continue;
    }
    const double dev = std::fabs(static_cast<double>(n) / Nd - nu);
    s.distortion_sup_ = std::max(s.distortion_sup_, dev);
    if (r < R) l1 += c_N * dev;
    s.push(r, n);
    prev = n;
    ++r;
  }
  s.distortion_l1_ = l1.value();
  return s;
}

/// F_N(s) = sum of c_{N,r} for r = 1..floor(s), and its shifted pseudo-inverse.
class EmpiricalClock {
 public:
  explicit EmpiricalClock(const std::vector<double>& probs) {
    prefix_.reserve(probs.size() + 1);
    prefix_.push_back(0.0);
    CompensatedSum s;
    for (double p : probs) {
      if (!(p >= 0.0 && p <= 1.0)) throw DomainError("clock entries must lie in [0,1]");
      s += p;
      prefix_.push_back(s.value());
    }
  }

  std::size_t size() const noexcept { return prefix_.size() - 1; }

  double F(double s) const {
    if (!(s >= 0.0)) throw DomainError("clock argument must be nonnegative");
    const double fl = std::floor(s);
    if (fl > static_cast<double>(size())) {
      throw HorizonError("clock argument beyond recorded generations");
    }
    return prefix_[static_cast<std::size_t>(fl)];
  }

  /// inf{s : F(s) > t} - 1.
  std::int64_t G_inverse(double t) const {
    if (!(t >= 0.0)) throw DomainError("clock argument must be nonnegative");
    auto it = std::upper_bound(prefix_.begin(), prefix_.end(), t);
    if (it == prefix_.end()) throw HorizonError("clock never exceeds " + std::to_string(t));
    return static_cast<std::int64_t>(it - prefix_.begin()) - 1;
  }

 private:
  std::vector<double> prefix_;
};

inline double empirical_F(const EmpiricalClock& clock, double s) { return clock.F(s); }
inline std::int64_t empirical_G_inverse(const EmpiricalClock& clock, double t) {
  return clock.G_inverse(t);
}

}  // namespace mmcoal
