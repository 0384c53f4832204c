#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "cannings.hpp"
#include "errors.hpp"
#include "limit.hpp"
#include "measures.hpp"
#include "profiles.hpp"
#include "random.hpp"
#include "scenario.hpp"
#include "stats.hpp"

namespace mmcoal {

/// Measure of the limit coalescent reached by a model.
inline LambdaMeasure limit_measure(const CanningsModel& model) {
  if (model.is_moran()) return model.moran_spec().measure;
  const double a = model.schweinsberg_spec().tail.alpha();
  return LambdaMeasure::beta(2.0 - a, a);
}

/// Exponent gamma of the clock G(t) = int nu^-gamma under which the model's
/// genealogy converges.
inline double clock_exponent(const CanningsModel& model) {
  if (model.is_schweinsberg()) return model.schweinsberg_spec().tail.alpha() - 1.0;
  const auto& spec = model.moran_spec();
  if (spec.thinning_gamma) return *spec.thinning_gamma;
  const auto& comps = spec.measure.components();
  if (comps.size() == 1) {
    if (spec.measure.is_single_point_mass(0.0)) return 2.0;
    if (const auto* b = std::get_if<BetaShape>(&comps[0].kind)) {
      if (b->a > 0.0 && b->a < 2.0) return 2.0 - b->a;
    }
  }
  throw ConfigError("no clock exponent known for model " + model.literal() +
                    "; use moran-thinned with an explicit gamma");
}

inline double clock_exponent(const CanningsModel& model, const LambdaMeasure& measure) {
  if (!(limit_measure(model) == measure)) {
    throw ConfigError("measure " + measure.literal() + " is not the limit of model " + model.literal());
  }
  return clock_exponent(model);
}

struct ExperimentSpec {
  CanningsModel model;
  LambdaMeasure measure;
  int n = 2;
  std::int64_t N = 1000;
  SizeProfile profile = SizeProfile::constant();
  double gamma = 0.0;
  std::int64_t replicates = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  CapsMode mode = CapsMode::Ramped;
  std::int64_t calibration_trials = 20000;
  bool fast_path = true;
};

inline ExperimentSpec make_spec(const CanningsModel& model, int n, std::int64_t N, SizeProfile profile,
                                std::int64_t replicates, std::uint64_t seed, unsigned threads = 1) {
  return ExperimentSpec{model, limit_measure(model), n, N, std::move(profile), clock_exponent(model),
                        replicates, seed, threads};
}

inline nlohmann::ordered_json echo(const ExperimentSpec& s) {
  ScenarioDocument doc;
  doc.profile = s.profile;
  nlohmann::ordered_json j;
  j["model"] = s.model.literal();
  if (s.model.is_moran()) j["allocation"] = to_string(s.model.allocation());
  j["measure"] = s.measure.literal();
  j["n"] = s.n;
  j["N"] = s.N;
  j["gamma"] = s.gamma;
  j["scenario"] = render_scenario(doc);
  j["schedule_mode"] = s.mode == CapsMode::Exact ? "exact" : "ramped";
  j["replicates"] = s.replicates;
  return j;
}

struct ComparisonReport {
  std::string experiment;
  nlohmann::ordered_json spec;
  std::string statistic;  // "ks", "tv", "sup", "probability"
  double distance = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string reference;
  double critical_value = std::numeric_limits<double>::quiet_NaN();
  std::int64_t n_reps = 0;
  double runtime_s = 0.0;
  std::uint64_t seed = 0;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();
  std::vector<double> values;

  nlohmann::ordered_json to_json(bool with_runtime = true) const {
    nlohmann::ordered_json j;
    j["experiment"] = experiment;
    j["spec"] = spec;
    j["statistic"] = statistic;
    j["distance"] = distance;
    j["tolerance"] = tolerance;
    j["pass"] = pass;
    j["reference"] = reference;
    if (std::isfinite(critical_value)) j["critical_value"] = critical_value;
    j["n_reps"] = n_reps;
    if (with_runtime) j["runtime_s"] = runtime_s;
    j["seed"] = seed;
    j["details"] = details;
    return j;
  }
};

namespace detail {

// Streams reserved for work that is not a replicate.
inline constexpr std::uint64_t kCalibrationStream = 0xca1b000000000001ULL;
inline constexpr std::uint64_t kReferenceSeedSalt = 0x7e7e7e7e7e7e7e7eULL;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline Calibration scaling(const ExperimentSpec& s) {
  Rng rng = make_rng(s.seed, kCalibrationStream);
  return calibrate_cN(s.model, s.N, s.calibration_trials, rng);
}

// Coalescent-time horizon by which the limit pair has coalesced except with
// probability ~1e-12 (capped when the clock saturates).
inline double pair_horizon(const TimeChange& tc, double lambda2) {
  const double tau = -std::log(1e-12) / lambda2;
  const double sup = tc.supremum();
  if (tau < sup) return tc.inverse(tau);
  return tc.inverse(sup * (1.0 - 1e-9));
}

inline GenerationSchedule schedule_for(const ExperimentSpec& s, double c_N, double horizon) {
  auto sched = build_schedule(s.profile, s.N, c_N, horizon, s.model.caps(s.N), s.mode);
  require_within_caps(sched);
  return sched;
}

inline std::vector<double> pair_times(const ExperimentSpec& s, double c_N, double horizon) {
  const auto sched = schedule_for(s, c_N, horizon);
  SimulationOptions opt;
  opt.build_tree = false;
  opt.fast_path = s.fast_path;
  return run_replicates(static_cast<std::size_t>(s.replicates), s.seed, s.threads,
                        [&](std::size_t, Rng& rng) {
                          auto g = simulate_genealogy(s.model, 2, sched, rng, opt);
                          if (!g.complete) {
                            throw HorizonError("pair did not coalesce within the schedule horizon");
                          }
                          return static_cast<double>(g.generations) * c_N;
                        });
}

}  // namespace detail

/// Pair coalescence times of the discrete model, in units of 1/c_N generations,
/// against the limit law 1 - exp(-lambda_2 G(t)) by one-sample KS.
inline ComparisonReport pair_time_experiment(const ExperimentSpec& s, double tolerance) {
  if (s.n != 2) throw ConfigError("pair-time experiment needs n = 2");
  detail::Stopwatch clock;
  ComparisonReport rep;
  rep.experiment = "pair-time";
  rep.spec = echo(s);
  rep.statistic = "ks";
  rep.tolerance = tolerance;
  rep.seed = s.seed;
  rep.n_reps = s.replicates;
  const auto cal = detail::scaling(s);
  const TimeChange tc(s.profile, s.gamma);
  const double lambda2 = lambda_rate(s.measure, 2, 2);
  const double horizon = detail::pair_horizon(tc, lambda2);
  rep.values = detail::pair_times(s, cal.estimate, horizon);
  rep.distance = ks_statistic(rep.values, [&](double t) { return waiting_time_cdf(lambda2, tc, 0.0, t); });
  rep.critical_value = ks_critical_value(rep.values.size());
  rep.pass = rep.distance <= tolerance;
  rep.reference = "1 - exp(-lambda_2 G(t)), lambda_2 = " + format_g12(lambda2) + ", gamma = " + format_g12(s.gamma);
  rep.details["c_N"] = cal.estimate;
  rep.details["c_N_standard_error"] = cal.standard_error;
  rep.details["c_N_asymptotic"] = cal.asymptotic;
  rep.details["c_N_exact"] = cal.exact;
  rep.details["horizon"] = horizon;
  rep.runtime_s = clock.seconds();
  return rep;
}

/// Pair coalescence times of the same model under two profiles, two-sample KS.
/// Both samples are scaled by the one c_N of the model at the reference size.
inline ComparisonReport pair_time_two_sample(const ExperimentSpec& a, const ExperimentSpec& b,
                                             double tolerance) {
  if (a.n != 2 || b.n != 2) throw ConfigError("pair-time experiment needs n = 2");
  if (a.model.literal() != b.model.literal() || a.N != b.N || a.model.allocation() != b.model.allocation()) {
    throw ConfigError("two-sample pair-time comparison needs the same model and reference size");
  }
  detail::Stopwatch clock;
  ComparisonReport rep;
  rep.experiment = "pair-time-two-sample";
  rep.spec["a"] = echo(a);
  rep.spec["b"] = echo(b);
  rep.statistic = "ks";
  rep.tolerance = tolerance;
  rep.seed = a.seed;
  rep.n_reps = a.replicates;
  const auto cal = detail::scaling(a);
  auto horizon_of = [](const ExperimentSpec& s) {
    const TimeChange tc(s.profile, s.gamma);
    return detail::pair_horizon(tc, lambda_rate(s.measure, 2, 2));
  };
  auto va = detail::pair_times(a, cal.estimate, horizon_of(a));
  auto vb = detail::pair_times(b, cal.estimate, horizon_of(b));
  rep.distance = ks_statistic(va, vb);
  rep.critical_value = ks_critical_value(va.size(), vb.size());
  rep.pass = rep.distance <= tolerance;
  rep.reference = "second profile";
  rep.details["c_N"] = cal.estimate;
  rep.details["c_N_standard_error"] = cal.standard_error;
  rep.details["c_N_asymptotic"] = cal.asymptotic;
  rep.details["c_N_exact"] = cal.exact;
  rep.details["n_reps_b"] = b.replicates;
  rep.values = std::move(va);
  rep.values.insert(rep.values.end(), vb.begin(), vb.end());
  rep.runtime_s = clock.seconds();
  return rep;
}

/// Law of the number j of n sampled lineages landing in the large family of one
/// constant-size modified Moran generation, sum_u P(U=u) Hyp(j; N, u, n),
/// collapsed to {no merger, 2, ..., n} (index 0 is "no merger", index j >= 2 is j).
inline std::vector<double> one_generation_merger_oracle(const OffspringLaw& law, int n) {
  std::vector<double> p(static_cast<std::size_t>(n + 1), 0.0);
  const std::int64_t N = law.N();
  for (std::size_t i = 0; i < law.values().size(); ++i) {
    const std::int64_t u = law.values()[i];
    for (int j = 0; j <= n; ++j) {
      const double h = hypergeometric_pmf(j, N, u, n);
      p[static_cast<std::size_t>(j >= 2 ? j : 0)] += law.probs()[i] * h;
    }
  }
  return p;
}

enum class FirstMergerMode { OneGeneration, FullCollision };

/// Merger sizes at the first collision of n lineages: either one generation at a
/// time against the exact enumeration oracle, or the full first collision against
/// the first-jump law of the limit.
inline ComparisonReport first_merger_experiment(const ExperimentSpec& s, FirstMergerMode mode,
                                                double tolerance) {
  if (s.n < 3) throw ConfigError("first-merger experiment needs n >= 3");
  detail::Stopwatch clock;
  ComparisonReport rep;
  rep.spec = echo(s);
  rep.statistic = "tv";
  rep.tolerance = tolerance;
  rep.seed = s.seed;
  rep.n_reps = s.replicates;
  std::vector<double> reference;
  std::vector<int> outcomes;
  if (mode == FirstMergerMode::OneGeneration) {
    if (!s.model.is_moran()) throw ConfigError("one-generation oracle needs a modified Moran model");
    rep.experiment = "first-merger-one-generation";
    const auto law = s.model.law(s.N);
    reference = one_generation_merger_oracle(*law, s.n);
    outcomes = run_replicates(static_cast<std::size_t>(s.replicates), s.seed, s.threads,
                              [&](std::size_t, Rng& rng) {
                                AncestryState st = AncestryState::initial(s.n, s.N, rng);
                                auto out = step_modified_moran(st, *law, s.N, s.N, s.model.allocation(), rng);
                                return out.mergers.empty() ? 0 : out.mergers.front().merger_size;
                              });
    rep.reference = "sum_u P(U=u) Hyp(j; N, u, n)";
  } else {
    rep.experiment = "first-merger-full-collision";
    const auto fj = first_jump_law(s.measure, s.n);
    reference.assign(static_cast<std::size_t>(s.n + 1), 0.0);
    for (int k = 2; k <= s.n; ++k) reference[static_cast<std::size_t>(k)] = fj[static_cast<std::size_t>(k - 2)];
    const auto cal = detail::scaling(s);
    const TimeChange tc(s.profile, s.gamma);
    const double horizon = detail::pair_horizon(tc, total_rate(s.measure, s.n));
    const auto sched = detail::schedule_for(s, cal.estimate, horizon);
    SimulationOptions opt;
    opt.build_tree = false;
    opt.stop_at_first_merger = true;
    opt.fast_path = s.fast_path;
    outcomes = run_replicates(static_cast<std::size_t>(s.replicates), s.seed, s.threads,
                              [&](std::size_t, Rng& rng) {
                                auto g = simulate_genealogy(s.model, s.n, sched, rng, opt);
                                if (g.events.empty()) throw HorizonError("no merger within the schedule horizon");
                                return g.events.front().merger_size;
                              });
    rep.reference = "first-jump law of " + s.measure.literal() + " at b = " + std::to_string(s.n);
    rep.details["c_N"] = cal.estimate;
  }
  const auto emp = empirical_pmf(outcomes, static_cast<std::size_t>(s.n + 1));
  rep.distance = tv_distance(emp, reference);
  rep.pass = rep.distance <= tolerance;
  rep.details["empirical"] = emp;
  rep.details["expected"] = reference;
  rep.values.assign(outcomes.begin(), outcomes.end());
  rep.runtime_s = clock.seconds();
  return rep;
}

/// Number of blocks at generation floor(t / c_N) of the discrete model against the
/// time-changed limit at t, simulated with ten times as many replicates.
inline ComparisonReport block_count_experiment(const ExperimentSpec& s, const std::vector<double>& times,
                                               double tolerance) {
  if (s.n < 2 || s.n > 20) throw ConfigError("block-count experiment needs 2 <= n <= 20");
  if (times.empty()) throw ConfigError("block-count experiment needs at least one time");
  detail::Stopwatch clock;
  ComparisonReport rep;
  rep.experiment = "block-count";
  rep.spec = echo(s);
  rep.spec["times"] = times;
  rep.statistic = "tv";
  rep.tolerance = tolerance;
  rep.seed = s.seed;
  rep.n_reps = s.replicates;
  std::vector<double> ts = times;
  std::sort(ts.begin(), ts.end());
  if (ts.front() < 0.0) throw ConfigError("times must be nonnegative");
  const auto cal = detail::scaling(s);
  const double c_N = cal.estimate;
  std::vector<std::int64_t> gens;
  for (double t : ts) gens.push_back(static_cast<std::int64_t>(std::floor(t / c_N)));
  const auto sched = detail::schedule_for(s, c_N, ts.back() + c_N);
  SimulationOptions opt;
  opt.stop = StopRule::Horizon;
  opt.build_tree = false;
  opt.fast_path = s.fast_path;
  opt.observe = gens;
  auto discrete = run_replicates(static_cast<std::size_t>(s.replicates), s.seed, s.threads,
                                 [&](std::size_t, Rng& rng) {
                                   return simulate_genealogy(s.model, s.n, sched, rng, opt).observed_blocks;
                                 });
  const TimeChange tc(s.profile, s.gamma);
  const RateTable rates(s.measure, s.n);
  const std::int64_t ref_reps = 10 * s.replicates;
  auto limit = run_replicates(static_cast<std::size_t>(ref_reps), s.seed ^ detail::kReferenceSeedSalt, s.threads,
                              [&](std::size_t, Rng& rng) {
                                const auto g = simulate_limit(rates, s.n, tc, rng);
                                std::vector<int> counts;
                                for (double t : ts) {
                                  int b = s.n;
                                  for (const auto& e : g.events()) {
                                    if (e.time <= t) b = e.blocks_after;
                                  }
                                  counts.push_back(b);
                                }
                                return counts;
                              });
  double worst = 0.0;
  nlohmann::ordered_json per_time = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::vector<int> a, b;
    for (const auto& v : discrete) a.push_back(v[i]);
    for (const auto& v : limit) b.push_back(v[i]);
    const auto pa = empirical_pmf(a, static_cast<std::size_t>(s.n + 1));
    const auto pb = empirical_pmf(b, static_cast<std::size_t>(s.n + 1));
    const double tv = tv_distance(pa, pb);
    worst = std::max(worst, tv);
    per_time.push_back({{"t", ts[i]}, {"generation", gens[i]}, {"tv", tv}, {"discrete", pa}, {"limit", pb}});
    for (int x : a) rep.values.push_back(x);
  }
  rep.distance = worst;
  rep.pass = worst <= tolerance;
  rep.reference = "limit block counts, " + std::to_string(ref_reps) + " replicates";
  rep.details["c_N"] = c_N;
  rep.details["per_time"] = per_time;
  rep.runtime_s = clock.seconds();
  return rep;
}

struct ClockComparison {
  double sup_deviation = 0.0;
  double at_time = 0.0;
  std::int64_t generations = 0;
};

/// sup over t in [0, t_max] of |F_N(t / c_N) - G(t)| with F_N built from the
/// exact per-generation coalescence probabilities along the schedule.
inline ClockComparison compare_clock(const CanningsModel& model, std::int64_t N, const SizeProfile& profile,
                                     double gamma, double t_max, CapsMode mode) {
  if (!model.is_moran()) throw ConfigError("exact clock needs a modified Moran model");
  const double c_N = model.exact_c_N(N);
  const auto sched = build_schedule(profile, N, c_N, t_max + 2 * c_N, model.caps(N), mode);
  require_within_caps(sched);
  const TimeChange tc(profile, gamma);
  const auto R = static_cast<std::int64_t>(std::floor(t_max / c_N));
  ClockComparison out;
  out.generations = R;
  CompensatedSum F;
  for (std::int64_t r = 0; r <= R; ++r) {
    if (r > 0) {
      const std::int64_t Nr = sched.size(r);
      F += generation_pair_coalescence(*model.law(Nr), Nr, sched.size(r - 1), model.allocation());
    }
    // On [r c_N, (r+1) c_N) the step function is constant and G increases.
    const double lo = static_cast<double>(r) * c_N;
    const double hi = std::min(static_cast<double>(r + 1) * c_N, t_max);
    for (double t : {lo, hi}) {
      const double dev = std::fabs(F.value() - tc(t));
      if (dev > out.sup_deviation) {
        out.sup_deviation = dev;
        out.at_time = t;
      }
    }
  }
  return out;
}

inline ComparisonReport empirical_clock_experiment(const ExperimentSpec& s, double t_max, double tolerance) {
  detail::Stopwatch clock;
  ComparisonReport rep;
  rep.experiment = "clock";
  rep.spec = echo(s);
  rep.spec["t_max"] = t_max;
  rep.statistic = "sup";
  rep.tolerance = tolerance;
  rep.seed = s.seed;
  rep.n_reps = 0;
  const auto c = compare_clock(s.model, s.N, s.profile, s.gamma, t_max, s.mode);
  rep.distance = c.sup_deviation;
  rep.pass = c.sup_deviation <= tolerance;
  rep.reference = "G(t) with gamma = " + format_g12(s.gamma);
  rep.details["c_N"] = s.model.exact_c_N(s.N);
  rep.details["at_time"] = c.at_time;
  rep.details["generations"] = c.generations;
  rep.runtime_s = clock.seconds();
  return rep;
}

/// One generation of sudden growth by floor(mN) individuals, all added to the
/// large family: coalescence stays of order one, so no time-changed Lambda
/// coalescent can describe it. Passes when the estimate is at least `threshold`
/// while the same model without growth has c_N <= 1e-3.
inline ComparisonReport negative_control_experiment(const CanningsModel& model, std::int64_t N, double m,
                                                    std::int64_t trials, std::uint64_t seed,
                                                    double threshold = 0.2) {
  if (!model.is_moran()) throw ConfigError("negative control needs a modified Moran model");
  detail::Stopwatch clock;
  ComparisonReport rep;
  rep.experiment = "negative-control";
  rep.spec["model"] = model.literal();
  rep.spec["N"] = N;
  rep.spec["m"] = m;
  rep.spec["trials"] = trials;
  rep.statistic = "probability";
  rep.tolerance = threshold;
  rep.seed = seed;
  rep.n_reps = trials;
  Rng rng = make_rng(seed, 0);
  const auto law = model.law(N);
  const auto r = negative_control_expansion(*law, N, m, rng, trials);
  const double baseline = law->c_N();
  rep.distance = r.estimate;
  rep.pass = r.estimate >= threshold && baseline <= 1e-3;
  rep.reference = "pair coalescence probability >= " + format_g12(threshold) + " with baseline c_N <= 0.001";
  rep.details["regime"] = "non-coalescent-limit regime";
  rep.details["baseline_c_N"] = baseline;
  rep.details["added"] = r.added;
  rep.details["standard_error"] = r.standard_error;
  rep.details["exact"] = r.exact;
  rep.details["lower_bound"] = r.lower_bound;
  rep.runtime_s = clock.seconds();
  return rep;
}

struct ShortfallRun {
  std::int64_t generations = 0;
  std::int64_t shortfalls = 0;
  std::int64_t step = 0;
};

/// Schedule that ramps from N down to N/2 and back, in steps of at most
/// floor(sqrt(c_N) N), repeated for the given number of generations.
inline GenerationSchedule triangle_schedule(std::int64_t N, double c_N, std::int64_t generations) {
  const auto step = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(std::sqrt(c_N) * static_cast<double>(N))));
  std::vector<std::int64_t> sizes{N};
  bool down = true;
  const std::int64_t floor_size = std::max<std::int64_t>(2, N / 2);
  while (static_cast<std::int64_t>(sizes.size()) <= generations) {
    std::int64_t x = sizes.back();
    if (down) {
      x = std::max(floor_size, x - step);
      if (x == floor_size) down = false;
    } else {
      x = std::min(N, x + step);
      if (x == N) down = true;
    }
    sizes.push_back(x);
  }
  return GenerationSchedule::from_sizes(N, c_N, sizes);
}

/// Runs a Schweinsberg model along a ramped schedule and counts generations in
/// which the potential offspring fell short of the next generation.
inline ShortfallRun shortfall_experiment(const CanningsModel& model, std::int64_t N, std::int64_t generations,
                                         std::uint64_t seed) {
  if (!model.is_schweinsberg()) throw ConfigError("shortfall experiment needs a Schweinsberg model");
  const double c_N = model.asymptotic_c_N(N);
  const auto sched = triangle_schedule(N, c_N, generations);
  ShortfallRun out;
  out.step = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(std::sqrt(c_N) * static_cast<double>(N))));
  Rng rng = make_rng(seed, 0);
  const auto& tail = model.schweinsberg_spec().tail;
  AncestryState s = AncestryState::initial(2, N, rng);
  for (std::int64_t r = 1; r <= generations; ++r) {
    if (s.block_count() < 2) {
      s = AncestryState::initial(2, sched.size(r - 1), rng);
      s.generation = r - 1;
    }
    auto step = step_schweinsberg(s, tail, sched.size(r), sched.size(r - 1), rng);
    if (step.shortfall) ++out.shortfalls;
    ++out.generations;
  }
  return out;
}

}  // namespace mmcoal
