#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"
#include "text.hpp"

namespace mmcoal {

struct PointMass {
  double location;
  bool operator==(const PointMass&) const = default;
};

struct BetaShape {
  double a;
  double b;
  bool operator==(const BetaShape&) const = default;
};

struct MeasureComponent {
  std::variant<PointMass, BetaShape> kind;
  double mass = 1.0;
  bool operator==(const MeasureComponent&) const = default;
};

/// Finite measure on [0, 1] built from point masses and Beta densities.
class LambdaMeasure {
 public:
  explicit LambdaMeasure(std::vector<MeasureComponent> components)
      : components_(std::move(components)) {
    if (components_.empty()) throw DomainError("measure needs at least one component");
    double total = 0.0;
    for (const auto& c : components_) {
      if (!(c.mass > 0.0) || !std::isfinite(c.mass)) {
        throw DomainError("component mass must be positive and finite");
      }
      if (const auto* p = std::get_if<PointMass>(&c.kind)) {
        if (!(p->location >= 0.0 && p->location <= 1.0)) {
          throw DomainError("point mass location must lie in [0,1]");
        }
      } else {
        const auto& beta = std::get<BetaShape>(c.kind);
        if (!(beta.a > 0.0) || !(beta.b > 0.0) || !std::isfinite(beta.a) ||
            !std::isfinite(beta.b)) {
          throw DomainError("shape must be positive");
        }
      }
      total += c.mass;
    }
    if (!std::isfinite(total)) throw DomainError("total mass must be finite");
  }

  static LambdaMeasure dirac(double p, double mass = 1.0) {
    return LambdaMeasure({MeasureComponent{PointMass{p}, mass}});
  }
  static LambdaMeasure beta(double a, double b, double mass = 1.0) {
    return LambdaMeasure({MeasureComponent{BetaShape{a, b}, mass}});
  }
  static LambdaMeasure kingman() { return dirac(0.0); }

  const std::vector<MeasureComponent>& components() const noexcept { return components_; }

  double total_mass() const noexcept {
    CompensatedSum s;
    for (const auto& c : components_) s += c.mass;
    return s.value();
  }

  bool is_probability(double tol = 1e-12) const noexcept {
    return std::fabs(total_mass() - 1.0) <= tol;
  }

  void require_probability() const {
    if (!is_probability()) {
      throw NormalizationError("measure must have total mass 1, got " +
                               format_shortest(total_mass()));
    }
  }

  bool is_single_point_mass(double location) const noexcept {
    if (components_.size() != 1) return false;
    const auto* p = std::get_if<PointMass>(&components_[0].kind);
    return p && p->location == location;
  }

  /// Canonical literal, e.g. "dirac:0.3", "beta:1.5,1", "mix:(dirac:0*0.5;beta:1,1*0.5)".
  std::string literal() const {
    auto one = [](const MeasureComponent& c) {
      if (const auto* p = std::get_if<PointMass>(&c.kind)) {
        return "dirac:" + format_shortest(p->location);
      }
      const auto& b = std::get<BetaShape>(c.kind);
      return "beta:" + format_shortest(b.a) + "," + format_shortest(b.b);
    };
    if (components_.size() == 1 && components_[0].mass == 1.0) return one(components_[0]);
    std::string out = "mix:(";
    for (std::size_t i = 0; i < components_.size(); ++i) {
      if (i) out += ';';
      out += one(components_[i]) + "*" + format_shortest(components_[i].mass);
    }
    return out + ")";
  }

  bool operator==(const LambdaMeasure&) const = default;

 private:
  std::vector<MeasureComponent> components_;
};

namespace detail {

inline double log_component_rate(const MeasureComponent& c, std::int64_t b, std::int64_t k) {
  const double lm = std::log(c.mass);
  if (const auto* pm = std::get_if<PointMass>(&c.kind)) {
    const double p = pm->location;
    double r = lm;
    // 0^0 = 1 convention.
    if (k > 2) r += (p == 0.0) ? -kInf : static_cast<double>(k - 2) * std::log(p);
    if (b > k) r += (p == 1.0) ? -kInf : static_cast<double>(b - k) * std::log1p(-p);
    return r;
  }
  const auto& beta = std::get<BetaShape>(c.kind);
  return lm + log_beta(beta.a + static_cast<double>(k - 2), beta.b + static_cast<double>(b - k)) -
         log_beta(beta.a, beta.b);
}

inline void check_pair(std::int64_t b, std::int64_t k) {
  if (b < 2 || k < 2 || k > b) {
    throw DomainError("rate needs 2 <= k <= b, got b=" + std::to_string(b) +
                      " k=" + std::to_string(k));
  }
}

}  // namespace detail

/// log lambda_{b,k}; -inf when the rate is zero.
inline double log_lambda_rate(const LambdaMeasure& m, std::int64_t b, std::int64_t k) {
  detail::check_pair(b, k);
  const auto& cs = m.components();
  if (cs.size() == 1) return detail::log_component_rate(cs[0], b, k);
  std::vector<double> logs;
  logs.reserve(cs.size());
  for (const auto& c : cs) logs.push_back(detail::log_component_rate(c, b, k));
  return log_sum_exp(logs);
}

/// lambda_{b,k} = integral of x^{k-2} (1-x)^{b-k} Lambda(dx).
inline double lambda_rate(const LambdaMeasure& m, std::int64_t b, std::int64_t k) {
  return std::exp(log_lambda_rate(m, b, k));
}

/// Terms C(b,k) lambda_{b,k} for k = 2..b (index k-2).
inline std::vector<double> merger_rate_terms(const LambdaMeasure& m, std::int64_t b) {
  if (b < 2) throw DomainError("total rate needs b >= 2");
  std::vector<double> terms(static_cast<std::size_t>(b - 1));
  for (std::int64_t k = 2; k <= b; ++k) {
    const double lr = log_lambda_rate(m, b, k);
    double t;
    if (b <= 60) {
      t = binomial(b, k) * std::exp(lr);
    } else {
      t = std::exp(log_binomial(static_cast<double>(b), static_cast<double>(k)) + lr);
    }
    terms[static_cast<std::size_t>(k - 2)] = t;
  }
  return terms;
}

/// lambda_b, the total rate at which b blocks see any merger.
inline double total_rate(const LambdaMeasure& m, std::int64_t b) {
  CompensatedSum s;
  for (double t : merger_rate_terms(m, b)) s += t;
  return s.value();
}

/// Law of the number of blocks merging at the first event among b blocks
/// (index k-2 holds P(k)).
inline std::vector<double> first_jump_law(const LambdaMeasure& m, std::int64_t b) {
  auto terms = merger_rate_terms(m, b);
  CompensatedSum s;
  for (double t : terms) s += t;
  const double total = s.value();
  if (!(total > 0.0)) throw DegenerateError("total merger rate is zero");
  for (double& t : terms) t /= total;
  return terms;
}

/// E(X^j) for X ~ Lambda, which must be a probability measure.
inline double moment(const LambdaMeasure& m, int j) {
  if (j < 0) throw DomainError("moment order must be nonnegative");
  m.require_probability();
  CompensatedSum s;
  for (const auto& c : m.components()) {
    double v;
    if (const auto* p = std::get_if<PointMass>(&c.kind)) {
      v = (j == 0) ? 1.0 : std::pow(p->location, j);
    } else {
      const auto& beta = std::get<BetaShape>(c.kind);
      v = 1.0;
      for (int i = 0; i < j; ++i) v *= (beta.a + i) / (beta.a + beta.b + i);
    }
    s += c.mass * v;
  }
  return s.value();
}

/// Rates, totals and first-jump laws for all block counts up to n_max.
class RateTable {
 public:
  RateTable(const LambdaMeasure& m, std::int64_t n_max) : n_max_(n_max) {
    if (n_max < 2) throw DomainError("rate table needs n_max >= 2");
    rates_.resize(static_cast<std::size_t>(n_max + 1));
    totals_.assign(static_cast<std::size_t>(n_max + 1), 0.0);
    first_jump_.resize(static_cast<std::size_t>(n_max + 1));
    jump_cdf_.resize(static_cast<std::size_t>(n_max + 1));
    for (std::int64_t b = 2; b <= n_max; ++b) {
      auto& row = rates_[static_cast<std::size_t>(b)];
      row.resize(static_cast<std::size_t>(b - 1));
      for (std::int64_t k = 2; k <= b; ++k) row[static_cast<std::size_t>(k - 2)] = lambda_rate(m, b, k);
      auto terms = merger_rate_terms(m, b);
      CompensatedSum s;
      for (double t : terms) s += t;
      totals_[static_cast<std::size_t>(b)] = s.value();
      if (s.value() > 0.0) {
        for (double& t : terms) t /= s.value();
      }
      auto& cdf = jump_cdf_[static_cast<std::size_t>(b)];
      cdf.resize(terms.size());
      CompensatedSum acc;
      for (std::size_t i = 0; i < terms.size(); ++i) {
        acc += terms[i];
        cdf[i] = acc.value();
      }
      first_jump_[static_cast<std::size_t>(b)] = std::move(terms);
    }
  }

  std::int64_t n_max() const noexcept { return n_max_; }
  double rate(std::int64_t b, std::int64_t k) const {
    detail::check_pair(b, k);
    check_b(b);
    return rates_[static_cast<std::size_t>(b)][static_cast<std::size_t>(k - 2)];
  }
  double total(std::int64_t b) const {
    check_b(b);
    return totals_[static_cast<std::size_t>(b)];
  }
  const std::vector<double>& first_jump(std::int64_t b) const {
    check_b(b);
    return first_jump_[static_cast<std::size_t>(b)];
  }
  /// Merger size drawn from the first-jump law given u uniform on [0,1).
  std::int64_t merger_size(std::int64_t b, double u) const {
    const auto& cdf = jump_cdf_[static_cast<std::size_t>(b)];
    const double target = u * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    if (it == cdf.end()) --it;
    return static_cast<std::int64_t>(it - cdf.begin()) + 2;
  }

 private:
  void check_b(std::int64_t b) const {
    if (b < 2 || b > n_max_) throw DomainError("block count outside rate table");
  }
  std::int64_t n_max_;
  std::vector<std::vector<double>> rates_;
  std::vector<double> totals_;
  std::vector<std::vector<double>> first_jump_;
  std::vector<std::vector<double>> jump_cdf_;
};

namespace detail {

class MeasureParser {
 public:
  explicit MeasureParser(std::string_view s) : s_(s) {}

  LambdaMeasure parse_all() {
    auto comps = parse_literal();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return build(std::move(comps), 1);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_ + 1, what); }
  [[noreturn]] void fail_at(std::size_t at, const std::string& what) const {
    throw ParseError(at + 1, what);
  }

  LambdaMeasure build(std::vector<MeasureComponent> comps, std::size_t at) const {
    try {
      return LambdaMeasure(std::move(comps));
    } catch (const DomainError& e) {
      fail_at(at - 1, e.what());
    }
  }

  bool consume(std::string_view word) {
    if (s_.substr(pos_, word.size()) == word) {
      pos_ += word.size();
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  double number() {
    const std::size_t len = scan_number(s_.substr(pos_));
    if (len == 0) fail("expected a number");
    auto v = parse_real(s_.substr(pos_, len));
    if (!v) fail("number out of range");
    pos_ += len;
    return *v;
  }

  std::vector<MeasureComponent> parse_literal() {
    const std::size_t start = pos_;
    if (consume("kingman")) return {MeasureComponent{PointMass{0.0}, 1.0}};
    if (consume("dirac:")) {
      const std::size_t at = pos_;
      const double p = number();
      if (!(p >= 0.0 && p <= 1.0)) fail_at(at, "point mass location must lie in [0,1]");
      return {MeasureComponent{PointMass{p}, 1.0}};
    }
    if (consume("beta:")) {
      const std::size_t at_a = pos_;
      const double a = number();
      expect(',');
      const std::size_t at_b = pos_;
      const double b = number();
      if (!(a > 0.0)) fail_at(at_a, "shape must be positive");
      if (!(b > 0.0)) fail_at(at_b, "shape must be positive");
      return {MeasureComponent{BetaShape{a, b}, 1.0}};
    }
    if (consume("mix:(")) {
      std::vector<MeasureComponent> out;
      for (;;) {
        auto inner = parse_literal();
        expect('*');
        const std::size_t at = pos_;
        const double w = number();
        if (!(w > 0.0)) fail_at(at, "weight must be positive");
        for (auto& c : inner) {
          c.mass *= w;
          out.push_back(c);
        }
        if (pos_ < s_.size() && s_[pos_] == ';') {
          ++pos_;
          continue;
        }
        expect(')');
        return out;
      }
    }
    pos_ = start;
    fail("unknown measure; expected kingman, dirac:<p>, beta:<a>,<b> or mix:(...)");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a measure literal; throws ParseError with the offending column.
inline LambdaMeasure parse_measure(std::string_view literal) {
  return detail::MeasureParser(literal).parse_all();
}

}  // namespace mmcoal
