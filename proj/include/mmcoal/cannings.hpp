#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "genealogy.hpp"
#include "measures.hpp"
#include "numeric.hpp"
#include "offspring.hpp"
#include "profiles.hpp"
#include "random.hpp"
#include "text.hpp"

namespace mmcoal {

/// How the d = N_{r-1} - N_r > 0 extra offspring of a growing generation are placed.
enum class Allocation {
  ToMultiplying,     // all to the parent of the large family
  ToNonReproducing,  // one each to parents that had no offspring
  Proportional,      // each to the large family with probability U / N_r
};

inline std::string to_string(Allocation a) {
  switch (a) {
    case Allocation::ToMultiplying: return "to-multiplying";
    case Allocation::ToNonReproducing: return "to-nonrep";
    case Allocation::Proportional: return "proportional";
  }
  return "?";
}

inline Allocation parse_allocation(std::string_view s) {
  if (s == "to-multiplying") return Allocation::ToMultiplying;
  if (s == "to-nonrep") return Allocation::ToNonReproducing;
  if (s == "proportional") return Allocation::Proportional;
  throw ConfigError("unknown allocation '" + std::string(s) +
                    "'; expected to-multiplying, to-nonrep or proportional");
}

/// Offspring counts per parent in one growing modified Moran generation: parent 0
/// has the large family U + A, parents 1..U-1 had none and d - A of them get one,
/// the remaining N_r - U parents keep one each.
inline std::vector<std::int64_t> allocate_offspring(std::int64_t N_r, std::int64_t U, std::int64_t d,
                                                    std::int64_t A) {
  if (U < 2 || U > N_r || d < 0 || A < 0 || A > d || d - A > U - 1) {
    throw DomainError("allocation outside the modified Moran constraints");
  }
  std::vector<std::int64_t> counts(static_cast<std::size_t>(N_r), 1);
  counts[0] = U + A;
  for (std::int64_t i = 1; i < U; ++i) counts[static_cast<std::size_t>(i)] = (i <= d - A) ? 1 : 0;
  return counts;
}

struct MergerRecord {
  std::int64_t generation;
  int blocks_before;
  int merger_size;
  int blocks_after;
};

/// Sampled lineages traced back through the generations.
struct AncestryState {
  int n = 0;
  std::int64_t generation = 0;
  std::vector<std::vector<int>> blocks;   // sample labels 0..n-1
  std::vector<std::int64_t> ancestors;    // per block, index in the current generation
  std::vector<int> nodes;                 // per block, node id in the tree being built

  static AncestryState initial(int n, std::int64_t N0, Rng& rng) {
    if (n < 1) throw DomainError("sample size must be positive");
    if (n > N0) throw DomainError("sample larger than the population");
    AncestryState s;
    s.n = n;
    for (int i = 0; i < n; ++i) {
      s.blocks.push_back({i});
      s.nodes.push_back(i);
    }
    s.ancestors = distinct_indices(rng, N0, static_cast<std::size_t>(n), -1);
    return s;
  }

  int block_count() const noexcept { return static_cast<int>(blocks.size()); }

  void validate(std::int64_t N_current) const {
    std::vector<std::int64_t> a = ancestors;
    std::sort(a.begin(), a.end());
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] < 0 || a[i] >= N_current) {
        throw StateError("ancestor index " + std::to_string(a[i]) + " outside generation of size " +
                         std::to_string(N_current));
      }
      if (i && a[i] == a[i - 1]) throw StateError("two blocks share an ancestor");
    }
  }

  /// k distinct uniform indices in [0, N) avoiding `exclude` (-1 for none).
  static std::vector<std::int64_t> distinct_indices(Rng& rng, std::int64_t N, std::size_t k,
                                                    std::int64_t exclude) {
    const std::int64_t pool = exclude >= 0 ? N - 1 : N;
    if (static_cast<std::int64_t>(k) > pool) throw StateError("not enough parents for the lineages");
    std::vector<std::int64_t> out;
    out.reserve(k);
    while (out.size() < k) {
      std::int64_t x = uniform_index(rng, pool);
      if (exclude >= 0 && x >= exclude) ++x;
      if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
    }
    return out;
  }
};

struct StepOutcome {
  std::vector<MergerRecord> mergers;
  bool shortfall = false;
};

namespace detail {

// Merges each group (block indices, size >= 2) of s; the merged block inherits
// the parent given for the group. Other blocks get the parents in `parents`.
inline void apply_mergers(AncestryState& s, const std::vector<std::vector<int>>& groups,
                          std::vector<std::int64_t> parents, StepOutcome& out, Genealogy* tree) {
  if (groups.empty()) {
    s.ancestors = std::move(parents);
    return;
  }
  std::vector<char> gone(s.blocks.size(), 0);
  std::vector<std::vector<int>> nb;
  std::vector<std::int64_t> na;
  std::vector<int> nn;
  int current = s.block_count();
  std::vector<std::vector<int>> merged_blocks;
  std::vector<std::int64_t> merged_parents;
  std::vector<int> merged_nodes;
  for (const auto& g : groups) {
    std::vector<int> labels;
    std::vector<int> child_nodes;
    for (int bi : g) {
      gone[static_cast<std::size_t>(bi)] = 1;
      const auto& bl = s.blocks[static_cast<std::size_t>(bi)];
      labels.insert(labels.end(), bl.begin(), bl.end());
      child_nodes.push_back(s.nodes[static_cast<std::size_t>(bi)]);
    }
    std::sort(labels.begin(), labels.end());
    const int k = static_cast<int>(g.size());
    out.mergers.push_back(MergerRecord{s.generation, current, k, current - (k - 1)});
    current -= k - 1;
    int node = -1;
    if (tree) node = tree->merge(static_cast<double>(s.generation), child_nodes);
    merged_blocks.push_back(std::move(labels));
    merged_parents.push_back(parents[static_cast<std::size_t>(g.front())]);
    merged_nodes.push_back(node);
  }
  for (std::size_t i = 0; i < s.blocks.size(); ++i) {
    if (gone[i]) continue;
    nb.push_back(std::move(s.blocks[i]));
    na.push_back(parents[i]);
    nn.push_back(s.nodes[i]);
  }
  for (std::size_t j = 0; j < merged_blocks.size(); ++j) {
    nb.push_back(std::move(merged_blocks[j]));
    na.push_back(merged_parents[j]);
    nn.push_back(merged_nodes[j]);
  }
  s.blocks = std::move(nb);
  s.ancestors = std::move(na);
  s.nodes = std::move(nn);
}

inline void check_sizes(const AncestryState& s, std::int64_t N_r, std::int64_t N_prev) {
  if (N_r < 2 || N_prev < 2) throw DomainError("generation sizes must be >= 2");
  for (auto a : s.ancestors) {
    if (a < 0 || a >= N_prev) {
      throw StateError("ancestor index " + std::to_string(a) + " outside generation of size " +
                       std::to_string(N_prev));
    }
  }
}

// Blocks in the large family get the large parent, the rest distinct others.
inline void finish_moran_step(AncestryState& s, const std::vector<int>& in_big, std::int64_t N_r,
                              Rng& rng, StepOutcome& out, Genealogy* tree) {
  const std::int64_t big_parent = uniform_index(rng, N_r);
  const std::size_t others = s.blocks.size() - in_big.size();
  auto singles = AncestryState::distinct_indices(rng, N_r, others, big_parent);
  std::vector<std::int64_t> parents(s.blocks.size());
  std::size_t j = 0;
  std::vector<char> big(s.blocks.size(), 0);
  for (int bi : in_big) big[static_cast<std::size_t>(bi)] = 1;
  for (std::size_t i = 0; i < s.blocks.size(); ++i) parents[i] = big[i] ? big_parent : singles[j++];
  std::vector<std::vector<int>> groups;
  if (in_big.size() >= 2) groups.push_back(in_big);
  apply_mergers(s, groups, std::move(parents), out, tree);
}

}  // namespace detail

/// One generation back in a modified Moran model: generation r has N_r parents,
/// generation r-1 (where the lineages currently sit) has N_prev individuals.
/// `law` must be the law of U at size N_r.
inline StepOutcome step_modified_moran(AncestryState& s, const OffspringLaw& law, std::int64_t N_r,
                                       std::int64_t N_prev, Allocation allocation, Rng& rng,
                                       Genealogy* tree = nullptr) {
  if (law.N() != N_r) throw DomainError("offspring law is for a different generation size");
  detail::check_sizes(s, N_r, N_prev);
  StepOutcome out;
  const std::int64_t next_generation = s.generation + 1;
  const std::int64_t d = N_prev - N_r;
  const std::int64_t U = law.sample(rng);
  std::int64_t F = U;  // size of the large family among the N_prev offspring
  if (d > 0) {
    std::int64_t A = d;
    switch (allocation) {
      case Allocation::ToMultiplying:
        A = d;
        break;
      case Allocation::ToNonReproducing:
        if (d > U - 1) {
          throw ScheduleError("generation " + std::to_string(next_generation) + ": growth " +
                              std::to_string(d) + " exceeds U-1 = " + std::to_string(U - 1) +
                              " under allocation to-nonrep");
        }
        A = 0;
        break;
      case Allocation::Proportional:
        A = binomial_draw(rng, d, static_cast<double>(U) / static_cast<double>(N_r));
        A = std::max(A, d - (U - 1));
        break;
    }
    F = U + A;
  } else if (d < 0) {
    F = hypergeometric_draw(rng, N_r, U, N_prev);
  }
  // Which tracked lineages belong to the large family: draws without replacement.
  std::vector<int> in_big;
  std::int64_t remaining = N_prev;
  std::int64_t marked = F;
  for (int i = 0; i < s.block_count(); ++i) {
    if (uniform_index(rng, remaining) < marked) {
      in_big.push_back(i);
      --marked;
    }
    --remaining;
  }
  s.generation = next_generation;
  detail::finish_moran_step(s, in_big, N_r, rng, out, tree);
  return out;
}

/// One generation back in the Schweinsberg model. Each of the N_r parents has X_i
/// potential offspring drawn by `draw(rng)`; N_prev of them survive, chosen
/// uniformly. If the potential offspring fall short, the missing individuals get
/// uniformly random parents and the outcome is flagged.
template <class Sampler>
StepOutcome step_schweinsberg(AncestryState& s, Sampler&& draw, std::int64_t N_r, std::int64_t N_prev,
                              Rng& rng, Genealogy* tree = nullptr) {
  detail::check_sizes(s, N_r, N_prev);
  StepOutcome out;
  thread_local std::vector<std::uint64_t> cum;
  cum.resize(static_cast<std::size_t>(N_r));
  constexpr std::uint64_t kCap = std::uint64_t{1} << 62;
  std::uint64_t total = 0;
  for (std::int64_t i = 0; i < N_r; ++i) {
    const auto x = static_cast<std::uint64_t>(draw(rng));
    total = std::min(kCap, total + x);
    cum[static_cast<std::size_t>(i)] = total;
  }
  const auto S = static_cast<std::int64_t>(total);
  out.shortfall = S < N_prev;
  const std::int64_t M = std::max(S, N_prev);
  const auto positions = AncestryState::distinct_indices(rng, M, s.blocks.size(), -1);
  std::vector<std::int64_t> parents(s.blocks.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const std::int64_t p = positions[i];
    if (p < S) {
      auto it = std::upper_bound(cum.begin(), cum.end(), static_cast<std::uint64_t>(p));
      parents[i] = static_cast<std::int64_t>(it - cum.begin());
    } else {
      parents[i] = uniform_index(rng, N_r);
    }
  }
  std::vector<std::vector<int>> groups;
  std::vector<char> used(parents.size(), 0);
  for (std::size_t i = 0; i < parents.size(); ++i) {
    if (used[i]) continue;
    std::vector<int> g{static_cast<int>(i)};
    for (std::size_t j = i + 1; j < parents.size(); ++j) {
      if (!used[j] && parents[j] == parents[i]) {
        used[j] = 1;
        g.push_back(static_cast<int>(j));
      }
    }
    if (g.size() >= 2) groups.push_back(std::move(g));
  }
  s.generation += 1;
  detail::apply_mergers(s, groups, std::move(parents), out, tree);
  return out;
}

inline StepOutcome step_schweinsberg(AncestryState& s, const HeavyTailLaw& tail, std::int64_t N_r,
                                     std::int64_t N_prev, Rng& rng, Genealogy* tree = nullptr) {
  return step_schweinsberg(
      s, [&tail](Rng& g) { return tail.sample(g); }, N_r, N_prev, rng, tree);
}

/// Probability that among b lineages of a constant-size generation at least two
/// fall in the large family, and the law of U given that they do.
struct MergerTable {
  double probability = 0.0;
  std::vector<std::int64_t> values;
  std::vector<double> cdf;  // unnormalized, conditional on a merger
};

inline MergerTable build_merger_table(const OffspringLaw& law, int b) {
  MergerTable t;
  const std::int64_t N = law.N();
  CompensatedSum total;
  for (std::size_t i = 0; i < law.values().size(); ++i) {
    const std::int64_t u = law.values()[i];
    double h;
    if (b == 2) {
      h = static_cast<double>(u) * static_cast<double>(u - 1) /
          (static_cast<double>(N) * static_cast<double>(N - 1));
    } else {
      CompensatedSum hs;
      for (std::int64_t k = 2; k <= std::min<std::int64_t>(u, b); ++k) {
        hs += hypergeometric_pmf(k, N, u, b);
      }
      h = hs.value();
    }
    const double w = law.probs()[i] * h;
    if (w <= 0.0) continue;
    total += w;
    t.values.push_back(u);
    t.cdf.push_back(total.value());
  }
  t.probability = total.value();
  return t;
}

struct ModifiedMoranSpec {
  LambdaMeasure measure;
  std::optional<double> thinning_gamma;
  Allocation allocation = Allocation::ToMultiplying;
};

struct SchweinsbergSpec {
  HeavyTailLaw tail;
};

/// A reproduction model with shared, thread-safe caches of per-size laws.
class CanningsModel {
 public:
  static CanningsModel moran(LambdaMeasure m, Allocation a = Allocation::ToMultiplying) {
    m.require_probability();
    return CanningsModel(ModifiedMoranSpec{std::move(m), std::nullopt, a});
  }
  static CanningsModel moran_thinned(LambdaMeasure m, double gamma,
                                     Allocation a = Allocation::ToMultiplying) {
    m.require_probability();
    if (!(gamma > 1.0 && gamma < 2.0)) throw DomainError("thinning exponent must lie in (1,2)");
    return CanningsModel(ModifiedMoranSpec{std::move(m), gamma, a});
  }
  static CanningsModel schweinsberg(HeavyTailLaw tail) { return CanningsModel(SchweinsbergSpec{tail}); }

  bool is_moran() const noexcept { return std::holds_alternative<ModifiedMoranSpec>(spec_); }
  bool is_schweinsberg() const noexcept { return !is_moran(); }
  bool is_thinned() const noexcept { return is_moran() && moran_spec().thinning_gamma.has_value(); }
  const ModifiedMoranSpec& moran_spec() const { return std::get<ModifiedMoranSpec>(spec_); }
  const SchweinsbergSpec& schweinsberg_spec() const { return std::get<SchweinsbergSpec>(spec_); }
  Allocation allocation() const { return is_moran() ? moran_spec().allocation : Allocation::ToMultiplying; }

  std::string literal() const {
    if (is_schweinsberg()) {
      const auto& t = schweinsberg_spec().tail;
      return "schweinsberg:alpha=" + format_shortest(t.alpha()) + ",C=" + format_shortest(t.C());
    }
    const auto& m = moran_spec();
    if (m.thinning_gamma) {
      return "moran-thinned:" + m.measure.literal() + ",gamma=" + format_shortest(*m.thinning_gamma);
    }
    return "moran:" + m.measure.literal();
  }

  /// Law of the large family size U at generation size N (thinning applied).
  std::shared_ptr<const OffspringLaw> law(std::int64_t N) const {
    {
      std::lock_guard<std::mutex> lock(cache_->mutex);
      auto it = cache_->laws.find(N);
      if (it != cache_->laws.end()) return it->second;
    }
    auto built = std::make_shared<const OffspringLaw>(build_law(N));
    std::lock_guard<std::mutex> lock(cache_->mutex);
    return cache_->laws.emplace(N, std::move(built)).first->second;
  }

  /// Activation probability of the large-family law at size N (1 when not thinned).
  double activation_probability(std::int64_t N) const {
    if (!is_thinned() || N < 3) return 1.0;
    return std::min(1.0, plain_law(N)->source_total_rate() *
                             std::pow(static_cast<double>(N), -*moran_spec().thinning_gamma));
  }

  std::shared_ptr<const MergerTable> merger_table(std::int64_t N, int b) const {
    const auto key = std::make_pair(N, b);
    {
      std::lock_guard<std::mutex> lock(cache_->mutex);
      auto it = cache_->tables.find(key);
      if (it != cache_->tables.end()) return it->second;
    }
    auto built = std::make_shared<const MergerTable>(build_merger_table(*law(N), b));
    std::lock_guard<std::mutex> lock(cache_->mutex);
    return cache_->tables.emplace(key, std::move(built)).first->second;
  }

  /// Exact pair-coalescence probability of a constant-size Moran generation.
  double exact_c_N(std::int64_t N) const {
    if (!is_moran()) throw ConfigError("exact c_N is only available for modified Moran models");
    return law(N)->c_N();
  }

  /// Leading-order c_N of the Schweinsberg model:
  /// C alpha B(2-alpha, alpha) mu^-alpha N^(1-alpha), or 1/log N at alpha = 1.
  double asymptotic_c_N(std::int64_t N) const {
    if (!is_schweinsberg()) return exact_c_N(N);
    const auto& t = schweinsberg_spec().tail;
    const double Nd = static_cast<double>(N);
    if (t.alpha() == 1.0) return 1.0 / std::log(Nd);
    return t.C() * t.alpha() * std::exp(log_beta(2.0 - t.alpha(), t.alpha())) *
           std::pow(t.mean(), -t.alpha()) * std::pow(Nd, 1.0 - t.alpha());
  }

  /// Per-generation limits on size changes at reference size N.
  GrowthCaps caps(std::int64_t N) const {
    GrowthCaps c;
    if (is_schweinsberg()) {
      c.max_relative_step = std::sqrt(asymptotic_c_N(N));
      return c;
    }
    const auto l = law(N);
    switch (allocation()) {
      case Allocation::ToNonReproducing:
        c.max_growth = l->min_support() - 1;
        break;
      case Allocation::ToMultiplying:
      case Allocation::Proportional:
        c.max_growth = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(l->mean())));
        break;
    }
    return c;
  }

  /// Numerical checks of model assumptions at size N; empty when all hold.
  std::vector<std::string> warnings(std::int64_t N) const {
    std::vector<std::string> w;
    if (is_moran() && allocation() != Allocation::ToNonReproducing) {
      const auto l = law(N);
      const double ratio = l->mean() / l->factorial_moment(2);
      if (ratio >= 0.1) {
        w.push_back("E(U)/E((U)_2) = " + format_g12(ratio) + " >= 0.1 at N = " + std::to_string(N) +
                    "; growth added to the large family may not be negligible");
      }
    }
    return w;
  }

 private:
  struct Cache {
    std::mutex mutex;
    std::map<std::int64_t, std::shared_ptr<const OffspringLaw>> laws;
    std::map<std::int64_t, std::shared_ptr<const OffspringLaw>> plain;
    std::map<std::pair<std::int64_t, int>, std::shared_ptr<const MergerTable>> tables;
  };

  explicit CanningsModel(std::variant<ModifiedMoranSpec, SchweinsbergSpec> spec)
      : spec_(std::move(spec)), cache_(std::make_shared<Cache>()) {}

  std::shared_ptr<const OffspringLaw> plain_law(std::int64_t N) const {
    {
      std::lock_guard<std::mutex> lock(cache_->mutex);
      auto it = cache_->plain.find(N);
      if (it != cache_->plain.end()) return it->second;
    }
    auto built = std::make_shared<const OffspringLaw>(offspring_law(moran_spec().measure, N));
    std::lock_guard<std::mutex> lock(cache_->mutex);
    return cache_->plain.emplace(N, std::move(built)).first->second;
  }

  OffspringLaw build_law(std::int64_t N) const {
    if (!is_moran()) throw ConfigError("offspring laws exist only for modified Moran models");
    if (N == 2) return OffspringLaw::point(2, 2);
    auto base = plain_law(N);
    if (!is_thinned()) return *base;
    const double p = activation_probability(N);
    if (p >= 1.0) return *base;
    std::vector<std::int64_t> v = base->values();
    std::vector<double> pr = base->probs();
    for (double& x : pr) x *= p;
    auto it = std::find(v.begin(), v.end(), 2);
    if (it != v.end()) {
      pr[static_cast<std::size_t>(it - v.begin())] += 1.0 - p;
    } else {
      v.push_back(2);
      pr.push_back(1.0 - p);
    }
    return OffspringLaw::from_pmf(N, std::move(v), std::move(pr));
  }

  std::variant<ModifiedMoranSpec, SchweinsbergSpec> spec_;
  std::shared_ptr<Cache> cache_;
};

/// Parses `moran:<measure>`, `moran-thinned:<measure>,gamma=<g>` or
/// `schweinsberg:alpha=<a>,C=<c>`.
inline CanningsModel parse_model(std::string_view literal, Allocation allocation = Allocation::ToMultiplying) {
  auto fail = [&](const std::string& what) -> CanningsModel {
    throw ConfigError("model '" + std::string(literal) + "': " + what);
  };
  try {
    if (literal.substr(0, 14) == "moran-thinned:") {
      const std::string_view rest = literal.substr(14);
      const auto at = rest.rfind(",gamma=");
      if (at == std::string_view::npos) return fail("expected ,gamma=<g>");
      auto g = parse_real(rest.substr(at + 7));
      if (!g) return fail("malformed gamma");
      return CanningsModel::moran_thinned(parse_measure(rest.substr(0, at)), *g, allocation);
    }
    if (literal.substr(0, 6) == "moran:") {
      return CanningsModel::moran(parse_measure(literal.substr(6)), allocation);
    }
    if (literal.substr(0, 13) == "schweinsberg:") {
      const std::string_view rest = literal.substr(13);
      if (rest.substr(0, 6) != "alpha=") return fail("expected alpha=<a>,C=<c>");
      const auto comma = rest.find(",C=");
      if (comma == std::string_view::npos) return fail("expected alpha=<a>,C=<c>");
      auto a = parse_real(rest.substr(6, comma - 6));
      auto c = parse_real(rest.substr(comma + 3));
      if (!a || !c) return fail("malformed alpha or C");
      return CanningsModel::schweinsberg(HeavyTailLaw(*a, *c));
    }
  } catch (const ParseError& e) {
    return fail(std::string("measure ") + e.what());
  } catch (const DomainError& e) {
    return fail(e.what());
  } catch (const NormalizationError& e) {
    return fail(e.what());
  }
  return fail("expected moran:, moran-thinned: or schweinsberg:");
}

/// Throws ScheduleError naming the first offending generations, if any.
inline void require_within_caps(const GenerationSchedule& schedule) {
  const auto& v = schedule.violations();
  if (v.empty()) return;
  std::string msg = "schedule breaks the growth caps at " + std::to_string(v.size()) + " generation(s):";
  for (std::size_t i = 0; i < std::min<std::size_t>(v.size(), 5); ++i) {
    msg += " r=" + std::to_string(v[i].generation) + " (change " + std::to_string(v[i].change) +
           ", limit " + std::to_string(v[i].limit) + ")";
  }
  msg += "; use the ramped schedule mode";
  throw ScheduleError(msg);
}

enum class StopRule { MRCA, Horizon };

struct SimulationOptions {
  StopRule stop = StopRule::MRCA;
  bool fast_path = true;
  bool build_tree = true;
  /// Stop after the first generation with a merger.
  bool stop_at_first_merger = false;
  /// Generations at which to record the number of blocks (sorted ascending).
  std::vector<std::int64_t> observe;
};

struct DiscreteGenealogy {
  std::vector<MergerRecord> events;
  AncestryState state;
  Genealogy tree{1};  // times in generations
  bool complete = false;
  std::int64_t generations = 0;
  std::int64_t shortfalls = 0;
  std::vector<int> observed_blocks;
};

/// Traces n sampled lineages back along the schedule. Constant-size stretches of
/// modified Moran models are skipped geometrically to the next merger.
inline DiscreteGenealogy simulate_genealogy(const CanningsModel& model, int n,
                                            const GenerationSchedule& schedule, Rng& rng,
                                            const SimulationOptions& opt = {}) {
  require_within_caps(schedule);
  const std::int64_t R = schedule.length();
  DiscreteGenealogy res;
  res.state = AncestryState::initial(n, schedule.size(0), rng);
  if (opt.build_tree) res.tree = Genealogy(n);
  Genealogy* tree = opt.build_tree ? &res.tree : nullptr;
  std::size_t next_obs = 0;
  auto flush = [&](std::int64_t upto) {
    while (next_obs < opt.observe.size() && opt.observe[next_obs] <= upto) {
      res.observed_blocks.push_back(res.state.block_count());
      ++next_obs;
    }
  };
  std::int64_t cur = 0;
  const bool moran = model.is_moran();
  while (res.state.block_count() > 1 && cur < R) {
    flush(cur);
    const std::int64_t N_prev = schedule.size(cur);
    const std::int64_t N_r = schedule.size(cur + 1);
    StepOutcome step;
    if (moran && opt.fast_path && N_r == N_prev) {
      const std::int64_t last = schedule.runs()[schedule.run_index(cur + 1)].last;
      const std::int64_t L = last - cur;
      const int b = res.state.block_count();
      const auto table = model.merger_table(N_r, b);
      const std::int64_t G = table->probability > 0.0 ? geometric_failures(rng, table->probability)
                                                     : std::numeric_limits<std::int64_t>::max();
      if (G >= L) {
        cur = last;
        res.state.generation = cur;
        res.state.ancestors = AncestryState::distinct_indices(rng, N_r, static_cast<std::size_t>(b), -1);
        continue;
      }
      cur += G;
      flush(cur);
      // Merger generation: U from its conditional law, then K >= 2 lineages.
      const double target = uniform01(rng) * table->cdf.back();
      auto it = std::upper_bound(table->cdf.begin(), table->cdf.end(), target);
      if (it == table->cdf.end()) --it;
      const std::int64_t u = table->values[static_cast<std::size_t>(it - table->cdf.begin())];
      std::vector<double> kcdf;
      CompensatedSum acc;
      for (std::int64_t k = 2; k <= std::min<std::int64_t>(u, b); ++k) {
        acc += hypergeometric_pmf(k, N_r, u, b);
        kcdf.push_back(acc.value());
      }
      const double kt = uniform01(rng) * kcdf.back();
      auto kit = std::upper_bound(kcdf.begin(), kcdf.end(), kt);
      if (kit == kcdf.end()) --kit;
      const auto K = static_cast<std::int64_t>(kit - kcdf.begin()) + 2;
      std::vector<int> idx(static_cast<std::size_t>(b));
      for (int i = 0; i < b; ++i) idx[static_cast<std::size_t>(i)] = i;
      for (std::int64_t i = 0; i < K; ++i) {
        const std::int64_t j = i + uniform_index(rng, b - i);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      }
      std::vector<int> in_big(idx.begin(), idx.begin() + K);
      std::sort(in_big.begin(), in_big.end());
      res.state.generation = cur + 1;
      detail::finish_moran_step(res.state, in_big, N_r, rng, step, tree);
    } else if (moran) {
      res.state.generation = cur;
      step = step_modified_moran(res.state, *model.law(N_r), N_r, N_prev, model.allocation(), rng, tree);
    } else {
      res.state.generation = cur;
      step = step_schweinsberg(res.state, model.schweinsberg_spec().tail, N_r, N_prev, rng, tree);
    }
    ++cur;
    if (step.shortfall) ++res.shortfalls;
    res.events.insert(res.events.end(), step.mergers.begin(), step.mergers.end());
    if (opt.stop_at_first_merger && !step.mergers.empty()) break;
  }
  res.generations = cur;
  res.state.generation = cur;
  res.complete = res.state.block_count() == 1;
  if (res.complete) {
    flush(std::numeric_limits<std::int64_t>::max());
  } else {
    flush(cur);
    if (next_obs < opt.observe.size() && !opt.stop_at_first_merger) {
      throw HorizonError("observation generation " + std::to_string(opt.observe[next_obs]) +
                         " beyond schedule horizon " + std::to_string(R));
    }
  }
  return res;
}

/// Exact pair-coalescence probability of one generation from N_prev offspring
/// to N_r parents under a modified Moran law at size N_r.
inline double generation_pair_coalescence(const OffspringLaw& law, std::int64_t N_r,
                                          std::int64_t N_prev, Allocation allocation) {
  const double Np = static_cast<double>(N_prev);
  const double denom = Np * (Np - 1.0);
  const std::int64_t d = N_prev - N_r;
  if (d <= 0) return law.c_N();  // hypergeometric thinning preserves the ratio
  const double dd = static_cast<double>(d);
  switch (allocation) {
    case Allocation::ToMultiplying:
      return (law.factorial_moment(2) + 2.0 * dd * law.mean() + dd * (dd - 1.0)) / denom;
    case Allocation::ToNonReproducing:
      return law.factorial_moment(2) / denom;
    case Allocation::Proportional: {
      CompensatedSum s;
      for (std::size_t i = 0; i < law.values().size(); ++i) {
        const std::int64_t u = law.values()[i];
        const double q = static_cast<double>(u) / static_cast<double>(N_r);
        CompensatedSum inner;
        for (std::int64_t a = 0; a <= d; ++a) {
          const double w = std::exp(log_binomial(dd, static_cast<double>(a)) +
                                    (a ? static_cast<double>(a) * std::log(q) : 0.0) +
                                    (d - a ? static_cast<double>(d - a) * std::log1p(-q) : 0.0));
          const std::int64_t aa = std::max(a, d - (u - 1));
          inner += w * falling_factorial(static_cast<double>(u + aa), 2);
        }
        s += law.probs()[i] * inner.value();
      }
      return s.value() / denom;
    }
  }
  return 0.0;
}

struct Calibration {
  double estimate = 0.0;
  double standard_error = 0.0;
  double asymptotic = 0.0;
  bool exact = false;
};

/// Pair-coalescence probability per generation at constant size N: exact for
/// modified Moran models, a Monte Carlo estimate over `trials` one-generation
/// experiments otherwise (with the leading-order value alongside).
inline Calibration calibrate_cN(const CanningsModel& model, std::int64_t N, std::int64_t trials, Rng& rng) {
  Calibration c;
  if (model.is_moran()) {
    c.estimate = c.asymptotic = model.exact_c_N(N);
    c.exact = true;
    return c;
  }
  if (trials < 1) throw DomainError("calibration needs at least one trial");
  const auto& tail = model.schweinsberg_spec().tail;
  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    AncestryState s = AncestryState::initial(2, N, rng);
    auto out = step_schweinsberg(s, tail, N, N, rng);
    if (!out.mergers.empty()) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  c.estimate = p;
  c.standard_error = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  c.asymptotic = model.asymptotic_c_N(N);
  return c;
}

struct ExpansionControl {
  std::int64_t added = 0;  // d = floor(m N)
  double estimate = 0.0;
  double standard_error = 0.0;
  double exact = 0.0;
  double lower_bound = 0.0;  // (d-1)^2 / ((N+d)(N+d-1))
};

/// One generation in which the population grows from N parents to N + floor(mN)
/// offspring and every added individual joins the large family. Returns the
/// pair-coalescence probability estimated over `trials` and its exact value.
inline ExpansionControl negative_control_expansion(const OffspringLaw& law, std::int64_t N, double m,
                                                   Rng& rng, std::int64_t trials) {
  if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("expansion factor must be nonnegative");
  if (law.N() != N) throw DomainError("offspring law is for a different size");
  if (trials < 1) throw DomainError("need at least one trial");
  ExpansionControl r;
  r.added = static_cast<std::int64_t>(std::floor(m * static_cast<double>(N)));
  const std::int64_t N_prev = N + r.added;
  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    AncestryState s = AncestryState::initial(2, N_prev, rng);
    auto out = step_modified_moran(s, law, N, N_prev, Allocation::ToMultiplying, rng);
    if (!out.mergers.empty()) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  r.estimate = p;
  r.standard_error = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  r.exact = generation_pair_coalescence(law, N, N_prev, Allocation::ToMultiplying);
  const double Np = static_cast<double>(N_prev);
  const double dm1 = std::max(0.0, static_cast<double>(r.added) - 1.0);
  r.lower_bound = dm1 * dm1 / (Np * (Np - 1.0));
  return r;
}

}  // namespace mmcoal
