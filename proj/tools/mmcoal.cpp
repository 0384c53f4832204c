// Command-line front end: rate tables, scenarios, schedules, simulation and
// convergence experiments.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <mmcoal/mmcoal.hpp>

using namespace mmcoal;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitCompareFail = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to the named file, or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw ConfigError("cannot write " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

unsigned resolve_threads(std::optional<unsigned> flag) {
  if (flag) {
    if (*flag < 1) throw ConfigError("--threads must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("MMCOAL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 4096) {
      throw ConfigError("MMCOAL_THREADS must be a positive integer");
    }
    return static_cast<unsigned>(v);
  }
  return 1;
}

struct ScenarioInput {
  ScenarioDocument doc;
  std::string name;
};

ScenarioInput load_scenario(const std::string& path) {
  ScenarioInput in;
  in.name = path;
  if (path.empty()) return in;
  in.doc = parse_scenario(read_file(path));
  return in;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

void report_schedule_warnings(const GenerationSchedule& s) {
  if (s.clamped_generations() > 0) {
    warn("population size clamped at 2 in " + std::to_string(s.clamped_generations()) + " generation(s)");
  }
}

double gamma_for_limit(const std::optional<double>& flag, const ScenarioDocument& doc) {
  if (flag) return *flag;
  if (doc.gamma) return *doc.gamma;
  if (doc.profile.is_constant()) return 0.0;
  throw ConfigError("a non-constant profile needs --gamma or a gamma directive in the scenario");
}

// ---------------------------------------------------------------- rates

struct RatesArgs {
  std::string measure;
  std::int64_t n = 10;
  std::string format = "json";
  std::string out = "-";
};

int cmd_rates(const RatesArgs& a) {
  LambdaMeasure m = [&] {
    try {
      return parse_measure(a.measure);
    } catch (const ParseError& e) {
      throw ConfigError("measure '" + a.measure + "' " + e.what());
    }
  }();
  if (a.n < 2 || a.n > 10000) throw ConfigError("--n must lie in [2, 10000]");
  const RateTable t(m, a.n);
  Output out(a.out);
  auto& os = out.stream();
  if (a.format == "tsv") {
    os << "b\tk\tlambda_bk\tfirst_jump\tlambda_b\n";
    for (std::int64_t b = 2; b <= a.n; ++b) {
      for (std::int64_t k = 2; k <= b; ++k) {
        os << b << '\t' << k << '\t' << format_shortest(t.rate(b, k)) << '\t'
           << format_shortest(t.first_jump(b)[static_cast<std::size_t>(k - 2)]) << '\t'
           << format_shortest(t.total(b)) << '\n';
      }
    }
    return 0;
  }
  if (a.format != "json") throw ConfigError("--format must be json or tsv");
  json j;
  j["measure"] = m.literal();
  j["n_max"] = a.n;
  json rates = json::array();
  json totals = json::object();
  json jumps = json::object();
  for (std::int64_t b = 2; b <= a.n; ++b) {
    for (std::int64_t k = 2; k <= b; ++k) rates.push_back({{"b", b}, {"k", k}, {"rate", t.rate(b, k)}});
    totals[std::to_string(b)] = t.total(b);
    jumps[std::to_string(b)] = t.first_jump(b);
  }
  j["rates"] = rates;
  j["totals"] = totals;
  j["first_jump"] = jumps;
  os << j.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------- scenario

int cmd_scenario_check(const std::string& file, double horizon) {
  const auto in = load_scenario(file);
  const auto rep = check_scenario(in.doc, horizon);
  json j;
  j["file"] = file;
  j["horizon"] = horizon;
  j["min"] = rep.min_size;
  j["max"] = rep.max_size;
  j["normalized"] = rep.normalized;
  json disc = json::array();
  for (const auto& d : rep.discontinuities) disc.push_back({{"t", d.time}, {"before", d.before}, {"after", d.after}});
  j["discontinuities"] = disc;
  j["flags"] = rep.flags;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_scenario_render(const std::string& file) {
  std::cout << render_scenario(load_scenario(file).doc);
  return 0;
}

// ---------------------------------------------------------------- models

struct ModelArgs {
  std::string model;
  std::string alloc = "to-multiplying";
  std::int64_t N = 1000;
  std::string scenario;
  std::string mode = "ramped";
  std::int64_t calibration_trials = 20000;
  std::optional<double> c_N;
};

CapsMode parse_mode(const std::string& s) {
  if (s == "exact") return CapsMode::Exact;
  if (s == "ramped") return CapsMode::Ramped;
  throw ConfigError("--mode must be exact or ramped");
}

/// Assumption warnings only matter when the population grows somewhere.
CanningsModel load_model(const ModelArgs& a, bool constant_profile) {
  auto m = parse_model(a.model, parse_allocation(a.alloc));
  if (a.N < 3) throw ConfigError("--N must be >= 3");
  if (!constant_profile) {
    for (const auto& w : m.warnings(a.N)) warn(w);
  }
  return m;
}

// ---------------------------------------------------------------- schedule

int cmd_schedule(const ModelArgs& a, double horizon, const std::string& out_path) {
  const auto in = load_scenario(a.scenario);
  const auto model = load_model(a, in.doc.profile.is_constant());
  const double c_N = a.c_N ? *a.c_N : model.asymptotic_c_N(a.N);
  const auto s = build_schedule(in.doc.profile, a.N, c_N, horizon, model.caps(a.N), parse_mode(a.mode));
  report_schedule_warnings(s);
  require_within_caps(s);
  Output out(out_path);
  s.write_tsv(out.stream());
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimOutputs {
  std::string events = "-";
  std::string summary;
  std::string newick;
};

double pair_time_of(const Genealogy& g) {
  // Time at which leaves 1 and 2 share an ancestor.
  int v = 0;
  std::vector<int> path;
  while (v >= 0) {
    path.push_back(v);
    v = g.node_parent(v);
  }
  v = 1;
  while (v >= 0) {
    if (std::find(path.begin(), path.end(), v) != path.end()) return g.node_time(v);
    v = g.node_parent(v);
  }
  throw StateError("leaves do not share an ancestor");
}

struct ReplicateSummary {
  std::vector<std::string> event_lines;
  std::string newick;
  double pair_time = 0.0;
  double tmrca = 0.0;
  double branch_length = 0.0;
  std::int64_t mutations = 0;
  std::int64_t shortfalls = 0;
  bool complete = true;
};

json summarize(const std::vector<ReplicateSummary>& reps, std::optional<double> theta) {
  CompensatedSum pair, tm, bl;
  std::int64_t complete = 0, mut = 0, shortfalls = 0;
  for (const auto& r : reps) {
    shortfalls += r.shortfalls;
    if (!r.complete) continue;
    ++complete;
    pair += r.pair_time;
    tm += r.tmrca;
    bl += r.branch_length;
    mut += r.mutations;
  }
  json j;
  j["replicates"] = reps.size();
  j["complete"] = complete;
  const double c = complete ? static_cast<double>(complete) : 1.0;
  j["mean_pair_time"] = pair.value() / c;
  j["mean_tmrca"] = tm.value() / c;
  j["mean_total_branch_length"] = bl.value() / c;
  if (theta) {
    j["theta"] = *theta;
    j["mutation_total"] = mut;
    j["mean_mutations"] = static_cast<double>(mut) / c;
  }
  j["shortfalls"] = shortfalls;
  return j;
}

void write_simulation(const std::vector<ReplicateSummary>& reps, const SimOutputs& o, const std::string& header,
                      json summary) {
  {
    Output ev(o.events);
    ev.stream() << header << '\n';
    for (const auto& r : reps) {
      for (const auto& l : r.event_lines) ev.stream() << l << '\n';
    }
  }
  if (!o.newick.empty()) {
    Output nw(o.newick);
    for (const auto& r : reps) nw.stream() << r.newick << '\n';
  }
  if (!o.summary.empty()) {
    Output sm(o.summary);
    sm.stream() << summary.dump(2) << '\n';
  }
}

ReplicateSummary finish_replicate(const Genealogy& g, bool complete, std::optional<double> theta, Rng& rng,
                                  bool want_newick) {
  ReplicateSummary r;
  r.complete = complete;
  if (!complete) return r;
  Genealogy tree = g;
  if (theta) tree = drop_mutations(g, *theta, rng);
  r.pair_time = pair_time_of(tree);
  r.tmrca = tree.tmrca();
  r.branch_length = tree.total_branch_length();
  r.mutations = tree.total_mutations();
  if (want_newick) r.newick = export_newick(tree);
  return r;
}

struct SimulateLimitArgs {
  std::string measure;
  int n = 2;
  std::string scenario;
  std::optional<double> gamma;
  std::int64_t reps = 1;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<double> theta;
  SimOutputs out;
};

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed) {
  if (!seed) throw ConfigError("--seed is required");
  return *seed;
}

int cmd_simulate_limit(const SimulateLimitArgs& a) {
  const std::uint64_t seed = require_seed(a.seed);
  const unsigned threads = resolve_threads(a.threads);
  LambdaMeasure m = [&] {
    try {
      return parse_measure(a.measure);
    } catch (const ParseError& e) {
      throw ConfigError("measure '" + a.measure + "' " + e.what());
    }
  }();
  m.require_probability();
  if (a.n < 2) throw ConfigError("--n must be >= 2");
  if (a.reps < 1) throw ConfigError("--reps must be >= 1");
  const auto in = load_scenario(a.scenario);
  const TimeChange tc(in.doc.profile, gamma_for_limit(a.gamma, in.doc));
  const RateTable rates(m, a.n);
  const bool newick = !a.out.newick.empty();
  auto reps = run_replicates(static_cast<std::size_t>(a.reps), seed, threads, [&](std::size_t i, Rng& rng) {
    const auto g = simulate_limit(rates, a.n, tc, rng);
    auto r = finish_replicate(g, true, a.theta, rng, newick);
    for (const auto& e : g.events()) {
      r.event_lines.push_back(std::to_string(i) + '\t' + format_shortest(e.time) + '\t' +
                              std::to_string(e.blocks_before) + '\t' + std::to_string(e.merger_size) + '\t' +
                              std::to_string(e.blocks_after));
    }
    return r;
  });
  json summary;
  summary["kind"] = "limit";
  summary["measure"] = m.literal();
  summary["n"] = a.n;
  summary["gamma"] = tc.gamma();
  summary["seed"] = seed;
  summary.update(summarize(reps, a.theta));
  write_simulation(reps, a.out, "replicate\ttime\tblocks_before\tmerger_size\tblocks_after", summary);
  return 0;
}

struct SimulateCanningsArgs {
  ModelArgs model;
  int n = 2;
  std::int64_t reps = 1;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<double> theta;
  std::optional<double> horizon;
  std::string stop = "mrca";
  bool no_fast_path = false;
  SimOutputs out;
};

int cmd_simulate_cannings(const SimulateCanningsArgs& a) {
  const std::uint64_t seed = require_seed(a.seed);
  const unsigned threads = resolve_threads(a.threads);
  const auto in = load_scenario(a.model.scenario);
  const auto model = load_model(a.model, in.doc.profile.is_constant());
  if (a.n < 2) throw ConfigError("--n must be >= 2");
  if (a.reps < 1) throw ConfigError("--reps must be >= 1");
  Rng cal_rng = make_rng(seed, 0xca1b000000000001ULL);
  const auto cal = calibrate_cN(model, a.model.N, a.model.calibration_trials, cal_rng);
  const double c_N = a.model.c_N ? *a.model.c_N : cal.estimate;
  double horizon;
  if (a.horizon) {
    horizon = *a.horizon;
  } else {
    const TimeChange tc(in.doc.profile, clock_exponent(model));
    horizon = detail::pair_horizon(tc, lambda_rate(limit_measure(model), 2, 2));
  }
  const auto sched = build_schedule(in.doc.profile, a.model.N, c_N, horizon, model.caps(a.model.N),
                                    parse_mode(a.model.mode));
  report_schedule_warnings(sched);
  require_within_caps(sched);
  SimulationOptions opt;
  if (a.stop == "horizon") {
    opt.stop = StopRule::Horizon;
  } else if (a.stop != "mrca") {
    throw ConfigError("--stop must be mrca or horizon");
  }
  opt.fast_path = !a.no_fast_path;
  const bool newick = !a.out.newick.empty();
  auto reps = run_replicates(static_cast<std::size_t>(a.reps), seed, threads, [&](std::size_t i, Rng& rng) {
    auto g = simulate_genealogy(model, a.n, sched, rng, opt);
    auto r = finish_replicate(g.tree.rescaled(c_N), g.complete, a.theta, rng, newick);
    r.shortfalls = g.shortfalls;
    for (const auto& e : g.events) {
      r.event_lines.push_back(std::to_string(i) + '\t' + std::to_string(e.generation) + '\t' +
                              std::to_string(e.blocks_before) + '\t' + std::to_string(e.merger_size) + '\t' +
                              std::to_string(e.blocks_after));
    }
    return r;
  });
  std::int64_t incomplete = 0;
  for (const auto& r : reps) incomplete += r.complete ? 0 : 1;
  if (incomplete > 0 && opt.stop == StopRule::MRCA) {
    warn(std::to_string(incomplete) + " replicate(s) reached the horizon before the most recent common ancestor");
  }
  json summary;
  summary["kind"] = "cannings";
  summary["model"] = model.literal();
  if (model.is_moran()) summary["allocation"] = to_string(model.allocation());
  summary["N"] = a.model.N;
  summary["n"] = a.n;
  summary["seed"] = seed;
  summary["c_N"] = c_N;
  summary["c_N_is_exact"] = cal.exact;
  summary["c_N_asymptotic"] = cal.asymptotic;
  summary["generations_horizon"] = sched.length();
  summary["time_unit"] = "coalescent (generations times c_N)";
  summary.update(summarize(reps, a.theta));
  write_simulation(reps, a.out, "replicate\tgeneration\tblocks_before\tmerger_size\tblocks_after", summary);
  return 0;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  ModelArgs model;
  int n = 2;
  std::int64_t reps = 1000;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<double> tolerance;
  std::string out = "-";
  std::string dump;
  // experiment-specific
  std::string scenario_b;
  std::string kind = "oracle";
  std::string times = "0.5";
  double t_max = 1.0;
  double m = 1.0;
  std::int64_t trials = 100000;
  bool no_fast_path = false;
};

int emit_report(const ComparisonReport& rep, const CompareArgs& a) {
  {
    Output out(a.out);
    out.stream() << rep.to_json().dump(2) << '\n';
  }
  if (!a.dump.empty()) {
    Output d(a.dump);
    d.stream() << "value\n";
    for (double v : rep.values) d.stream() << format_shortest(v) << '\n';
  }
  return rep.pass ? 0 : kExitCompareFail;
}

ExperimentSpec spec_from(const CompareArgs& a, const CanningsModel& model, const ScenarioDocument& doc) {
  auto s = make_spec(model, a.n, a.model.N, doc.profile, a.reps, require_seed(a.seed), resolve_threads(a.threads));
  s.mode = parse_mode(a.model.mode);
  s.calibration_trials = a.model.calibration_trials;
  s.fast_path = !a.no_fast_path;
  if (a.reps < 100) throw ConfigError("experiments need --reps >= 100");
  return s;
}

std::vector<double> parse_times(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = parse_real(item);
    if (!v || *v < 0) throw ConfigError("malformed time '" + item + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw ConfigError("--times needs at least one value");
  return out;
}

int cmd_compare(const std::string& experiment, const CompareArgs& a) {
  if (experiment == "negative-control") {
    const std::uint64_t seed = require_seed(a.seed);
    const auto model = parse_model(a.model.model.empty() ? "moran:kingman" : a.model.model,
                                   parse_allocation(a.model.alloc));
    return emit_report(negative_control_experiment(model, a.model.N, a.m, a.trials, seed, a.tolerance.value_or(0.2)), a);
  }
  if (a.model.model.empty()) throw ConfigError("--model is required");
  const auto in = load_scenario(a.model.scenario);
  const auto model = load_model(a.model, in.doc.profile.is_constant() && a.scenario_b.empty());
  const auto spec = spec_from(a, model, in.doc);
  if (experiment == "pair-time") {
    if (!a.scenario_b.empty()) {
      const auto in_b = load_scenario(a.scenario_b);
      auto spec_b = spec;
      spec_b.profile = in_b.doc.profile;
      return emit_report(pair_time_two_sample(spec, spec_b, a.tolerance.value_or(0.05)), a);
    }
    const double tol = a.tolerance.value_or(spec.profile.is_constant() ? 0.02 : 0.03);
    return emit_report(pair_time_experiment(spec, tol), a);
  }
  if (experiment == "first-merger") {
    if (a.kind == "oracle") {
      return emit_report(first_merger_experiment(spec, FirstMergerMode::OneGeneration, a.tolerance.value_or(0.01)), a);
    }
    if (a.kind == "limit") {
      return emit_report(first_merger_experiment(spec, FirstMergerMode::FullCollision, a.tolerance.value_or(0.05)), a);
    }
    throw ConfigError("--kind must be oracle or limit");
  }
  if (experiment == "block-count") {
    const double tol = a.tolerance.value_or(spec.profile.is_constant() ? 0.05 : 0.07);
    return emit_report(block_count_experiment(spec, parse_times(a.times), tol), a);
  }
  if (experiment == "clock") {
    return emit_report(empirical_clock_experiment(spec, a.t_max, a.tolerance.value_or(0.02)), a);
  }
  throw ConfigError("unknown experiment '" + experiment + "'");
}

void add_model_options(CLI::App* c, ModelArgs& m) {
  c->add_option("--model", m.model, "moran:<measure> | moran-thinned:<measure>,gamma=<g> | schweinsberg:alpha=<a>,C=<c>");
  c->add_option("--alloc", m.alloc, "to-multiplying | to-nonrep | proportional");
  c->add_option("--N", m.N, "reference population size");
  c->add_option("--scenario", m.scenario, "scenario file (.scen); constant size when omitted");
  c->add_option("--mode", m.mode, "schedule mode: exact | ramped");
  c->add_option("--calibration-trials", m.calibration_trials, "Monte Carlo trials for c_N (Schweinsberg)");
  c->add_option("--cN", m.c_N, "override the time scale c_N");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple-merger coalescents under fluctuating population size"};
  app.require_subcommand(1);

  RatesArgs rates;
  auto* c_rates = app.add_subcommand("rates", "merger rates, total rates and first-jump laws");
  c_rates->add_option("--measure", rates.measure, "measure literal")->required();
  c_rates->add_option("--n", rates.n, "largest block count");
  c_rates->add_option("--format", rates.format, "json | tsv");
  c_rates->add_option("--out", rates.out, "output file");

  auto* c_scen = app.add_subcommand("scenario", "scenario files");
  c_scen->require_subcommand(1);
  std::string scen_file;
  double scen_horizon = 1.0;
  auto* c_check = c_scen->add_subcommand("check", "validate and summarize a scenario");
  c_check->add_option("file", scen_file)->required();
  c_check->add_option("--horizon", scen_horizon, "time horizon")->required();
  auto* c_render = c_scen->add_subcommand("render", "print the canonical form");
  c_render->add_option("file", scen_file)->required();

  ModelArgs sched_model;
  double sched_horizon = 1.0;
  std::string sched_out = "-";
  auto* c_sched = app.add_subcommand("schedule", "per-generation population sizes as TSV");
  add_model_options(c_sched, sched_model);
  c_sched->add_option("--horizon", sched_horizon, "coalescent-time horizon")->required();
  c_sched->add_option("--out", sched_out, "output file");

  auto* c_sim = app.add_subcommand("simulate", "simulate genealogies");
  c_sim->require_subcommand(1);
  SimulateLimitArgs lim;
  auto* c_lim = c_sim->add_subcommand("limit", "time-changed Lambda coalescent");
  c_lim->add_option("--measure", lim.measure, "measure literal")->required();
  c_lim->add_option("--n", lim.n, "sample size");
  c_lim->add_option("--scenario", lim.scenario, "scenario file (.scen); constant size when omitted");
  c_lim->add_option("--gamma", lim.gamma, "clock exponent");
  c_lim->add_option("--reps", lim.reps, "replicates");
  c_lim->add_option("--seed", lim.seed, "master seed (required)");
  c_lim->add_option("--threads", lim.threads, "worker threads (default: MMCOAL_THREADS or 1)");
  c_lim->add_option("--theta", lim.theta, "mutation rate");
  c_lim->add_option("--events", lim.out.events, "event log TSV ('-' for stdout)");
  c_lim->add_option("--summary", lim.out.summary, "summary JSON");
  c_lim->add_option("--newick", lim.out.newick, "Newick trees, one per line");

  SimulateCanningsArgs can;
  auto* c_can = c_sim->add_subcommand("cannings", "discrete-generation model");
  add_model_options(c_can, can.model);
  c_can->add_option("--n", can.n, "sample size");
  c_can->add_option("--reps", can.reps, "replicates");
  c_can->add_option("--seed", can.seed, "master seed (required)");
  c_can->add_option("--threads", can.threads, "worker threads (default: MMCOAL_THREADS or 1)");
  c_can->add_option("--theta", can.theta, "mutation rate");
  c_can->add_option("--horizon", can.horizon, "coalescent-time horizon of the schedule");
  c_can->add_option("--stop", can.stop, "mrca | horizon");
  c_can->add_flag("--no-fast-path", can.no_fast_path, "step every generation");
  c_can->add_option("--events", can.out.events, "event log TSV ('-' for stdout)");
  c_can->add_option("--summary", can.out.summary, "summary JSON");
  c_can->add_option("--newick", can.out.newick, "Newick trees, one per line");

  CompareArgs cmp;
  std::string experiment;
  auto* c_cmp = app.add_subcommand("compare", "convergence experiments");
  c_cmp->add_option("experiment", experiment, "pair-time | first-merger | block-count | clock | negative-control")
      ->required();
  add_model_options(c_cmp, cmp.model);
  c_cmp->add_option("--n", cmp.n, "sample size");
  c_cmp->add_option("--reps", cmp.reps, "replicates");
  c_cmp->add_option("--seed", cmp.seed, "master seed (required)");
  c_cmp->add_option("--threads", cmp.threads, "worker threads (default: MMCOAL_THREADS or 1)");
  c_cmp->add_option("--tolerance", cmp.tolerance, "pass threshold for the test statistic");
  c_cmp->add_option("--out", cmp.out, "report JSON");
  c_cmp->add_option("--dump", cmp.dump, "CSV of raw statistic values");
  c_cmp->add_option("--scenario-b", cmp.scenario_b, "second scenario for a two-sample pair-time comparison");
  c_cmp->add_option("--kind", cmp.kind, "first-merger: oracle | limit");
  c_cmp->add_option("--times", cmp.times, "block-count: comma-separated times");
  c_cmp->add_option("--t-max", cmp.t_max, "clock: end of the time window");
  c_cmp->add_option("--m", cmp.m, "negative-control: relative expansion");
  c_cmp->add_option("--trials", cmp.trials, "negative-control: trials");
  c_cmp->add_flag("--no-fast-path", cmp.no_fast_path, "step every generation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (c_rates->parsed()) return cmd_rates(rates);
    if (c_check->parsed()) return cmd_scenario_check(scen_file, scen_horizon);
    if (c_render->parsed()) return cmd_scenario_render(scen_file);
    if (c_sched->parsed()) return cmd_schedule(sched_model, sched_horizon, sched_out);
    if (c_lim->parsed()) return cmd_simulate_limit(lim);
    if (c_can->parsed()) return cmd_simulate_cannings(can);
    if (c_cmp->parsed()) return cmd_compare(experiment, cmp);
  } catch (const ScenarioError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << "error: " << d.format() << '\n';
    return kExitConfig;
  } catch (const ScheduleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const HorizonError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const OverflowError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const StateError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
