#include <cmath>
#include <map>
#include <string>

#include <gtest/gtest.h>

#include <mmcoal/mmcoal.hpp>

using namespace mmcoal;

namespace {

const TimeChange kIdentity(SizeProfile::constant(), 0.0);

double first_event_time(const Genealogy& g) { return g.events().front().time; }

}  // namespace

TEST(Genealogy, MergeBookkeeping) {
  Genealogy g(4);
  EXPECT_EQ(g.block_count(), 4);
  EXPECT_THROW(g.tmrca(), StateError);
  const int a = g.merge(0.5, {2, 0});
  EXPECT_EQ(g.node_children(a), (std::vector<int>{0, 2}));
  const int b = g.merge(1.0, {a, 1, 3});
  EXPECT_TRUE(g.complete());
  EXPECT_EQ(g.root(), b);
  EXPECT_DOUBLE_EQ(g.tmrca(), 1.0);
  EXPECT_DOUBLE_EQ(g.total_branch_length(), 0.5 + 0.5 + 1.0 + 1.0 + 0.5);
  ASSERT_EQ(g.events().size(), 2u);
  EXPECT_EQ(g.events()[1].blocks_before, 3);
  EXPECT_EQ(g.events()[1].merger_size, 3);
  EXPECT_EQ(g.events()[1].blocks_after, 1);
}

TEST(Genealogy, RejectsInvalidMergers) {
  Genealogy g(3);
  EXPECT_THROW(g.merge(1.0, {0}), StateError);
  g.merge(1.0, {0, 1});
  EXPECT_THROW(g.merge(0.5, {2, 3}), StateError);
  EXPECT_THROW(g.merge(2.0, {0, 2}), StateError);
  EXPECT_THROW(g.merge(2.0, {2, 9}), DomainError);
}

TEST(Genealogy, RescaledAndNewick) {
  Genealogy g(2);
  g.merge(2.0, {0, 1});
  const auto r = g.rescaled(0.25);
  EXPECT_EQ(export_newick(r), "(1:0.5,2:0.5);");
  EXPECT_THROW(export_newick(Genealogy(3)), StateError);
}

TEST(Genealogy, StarNewick) {
  Rng rng = make_rng(1, 0);
  const auto g = simulate_limit(LambdaMeasure::dirac(1.0), 3, kIdentity, rng);
  const std::string t = format_shortest(g.tmrca());
  EXPECT_EQ(export_newick(g), "(1:" + t + ",2:" + t + ",3:" + t + ");");
}

TEST(Newick, ParsesLabelsAndLengths) {
  const auto t = parse_newick("((1:0.25,3:0.25):0.75,2:1);");
  EXPECT_EQ(t.leaf_count(), 3u);
  EXPECT_EQ(t.internal_heights(), (std::vector<double>{0.25, 1.0}));
  EXPECT_THROW(parse_newick("((1:0.25,3:0.25):0.75,2:1"), ParseError);
  EXPECT_THROW(parse_newick("(1:x,2:1);"), ParseError);
}

class LimitSeeds : public ::testing::TestWithParam<int> {};

TEST_P(LimitSeeds, TreeInvariantsAndNewickRoundTrip) {
  Rng rng = make_rng(99, static_cast<std::uint64_t>(GetParam()));
  const std::vector<LambdaMeasure> measures = {LambdaMeasure::kingman(), LambdaMeasure::beta(1.0, 1.0), LambdaMeasure::dirac(0.4)};
  for (const auto& m : measures) {
    const TimeChange tc(SizeProfile::exponential(0.5), 1.5);
    const int n = 2 + static_cast<int>(uniform_index(rng, 14));
    const auto g = simulate_limit(m, n, tc, rng);
    ASSERT_TRUE(g.complete());
    double prev = 0.0;
    int blocks = n;
    CompensatedSum length;
    for (const auto& ev : g.events()) {
      EXPECT_GT(ev.time, prev);
      EXPECT_EQ(ev.blocks_before, blocks);
      EXPECT_GE(ev.merger_size, 2);
      EXPECT_LE(ev.merger_size, blocks);
      EXPECT_EQ(ev.blocks_after, blocks - ev.merger_size + 1);
      length += (ev.time - prev) * blocks;
      prev = ev.time;
      blocks = ev.blocks_after;
    }
    EXPECT_EQ(blocks, 1);
    EXPECT_NEAR(g.total_branch_length(), length.value(), 1e-9 * length.value());

    std::vector<double> times;
    for (const auto& ev : g.events()) times.push_back(ev.time);
    const auto tree = parse_newick(export_newick(g));
    EXPECT_EQ(tree.leaf_count(), static_cast<std::size_t>(n));
    const auto heights = tree.internal_heights();
    ASSERT_EQ(heights.size(), times.size());
    for (std::size_t i = 0; i < times.size(); ++i) EXPECT_NEAR(heights[i], times[i], 1e-9 * (1.0 + times[i]));
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, LimitSeeds, ::testing::Range(0, 30));

TEST(Limit, KingmanPairIsExponential) {
  std::vector<double> t;
  for (int i = 0; i < 10000; ++i) {
    Rng rng = make_rng(3, static_cast<std::uint64_t>(i));
    const auto g = simulate_limit(LambdaMeasure::kingman(), 2, TimeChange(SizeProfile::constant(), 1.3), rng);
    ASSERT_EQ(g.events().size(), 1u);
    t.push_back(g.tmrca());
  }
  EXPECT_LE(ks_statistic(t, [](double x) { return -std::expm1(-x); }), 0.02);
}

TEST(Limit, StarCoalescentHasOneEvent) {
  Rng rng = make_rng(4, 0);
  const auto g = simulate_limit(LambdaMeasure::dirac(1.0), 6, TimeChange(SizeProfile::exponential(1.0), 1.5), rng);
  ASSERT_EQ(g.events().size(), 1u);
  EXPECT_EQ(g.events()[0].merger_size, 6);
}

TEST(Limit, RejectsNonProbabilityMeasure) {
  Rng rng = make_rng(4, 0);
  EXPECT_THROW(simulate_limit(LambdaMeasure::dirac(0.5, 2.0), 4, kIdentity, rng), NormalizationError);
}

TEST(Limit, EventTimesMatchWaitingTimeCdf) {
  const TimeChange tc(SizeProfile::exponential(0.5), 1.5);
  const auto m = LambdaMeasure::dirac(0.3);
  const double l2 = total_rate(m, 2);
  std::vector<double> t;
  for (int i = 0; i < 10000; ++i) {
    Rng rng = make_rng(5, static_cast<std::uint64_t>(i));
    t.push_back(simulate_limit(m, 2, tc, rng).tmrca());
  }
  EXPECT_LE(ks_statistic(t, [&](double x) { return waiting_time_cdf(l2, tc, 0.0, x); }), 0.02);
}

TEST(Limit, ConstantProfileFirstJumpFrequencies) {
  const auto m = LambdaMeasure::beta(1.0, 1.0);
  const int n = 8;
  const auto law = first_jump_law(m, n);
  const TimeChange tc(SizeProfile::constant(), 1.5);
  const RateTable rates(m, n);
  std::vector<double> freq(law.size(), 0.0);
  const int reps = 100000;
  Rng rng = make_rng(6, 0);
  for (int i = 0; i < reps; ++i) {
    const auto g = simulate_limit(rates, n, tc, rng);
    freq[static_cast<std::size_t>(g.events().front().merger_size - 2)] += 1.0 / reps;
  }
  EXPECT_LE(tv_distance(freq, law), 0.01);
}

TEST(Limit, ZeroGammaIgnoresProfile) {
  const auto m = LambdaMeasure::beta(0.8, 1.2);
  for (int i = 0; i < 200; ++i) {
    Rng a = make_rng(7, static_cast<std::uint64_t>(i));
    Rng b = make_rng(7, static_cast<std::uint64_t>(i));
    const auto ga = simulate_limit(m, 5, TimeChange(SizeProfile::constant(), 0.0), a);
    const auto gb = simulate_limit(m, 5, TimeChange(SizeProfile::exponential(1.0), 0.0), b);
    EXPECT_EQ(export_newick(ga), export_newick(gb));
  }
}

TEST(Limit, Deterministic) {
  const TimeChange tc(SizeProfile::exponential(0.5), 1.5);
  Rng a = make_rng(8, 3);
  Rng b = make_rng(8, 3);
  EXPECT_EQ(export_newick(simulate_limit(LambdaMeasure::beta(0.5, 1.5), 20, tc, a)),
            export_newick(simulate_limit(LambdaMeasure::beta(0.5, 1.5), 20, tc, b)));
}

TEST(WaitingTime, Examples) {
  EXPECT_EQ(waiting_time_cdf(3.0, kIdentity, 0.4, 0.0), 0.0);
  EXPECT_NEAR(waiting_time_cdf(1.0, kIdentity, 0.0, std::log(2.0)), 0.5, 1e-15);
  const TimeChange tc(SizeProfile::exponential(1.0), 2.0);
  EXPECT_NEAR(waiting_time_cdf(1.0, tc, 0.0, std::log1p(2.0 * std::log(2.0)) / 2.0), 0.5, 1e-14);
  EXPECT_NEAR(std::log1p(2.0 * std::log(2.0)) / 2.0, 0.434871, 1e-6);
}

TEST(WaitingTime, IsACdf) {
  const TimeChange tc(SizeProfile({Epoch{0.0, 1.0, ExponentialEpoch{1.0, 1.0}},
                                   Epoch{1.0, kInf, ConstantEpoch{0.3}}}),
                      1.7);
  double prev = 0.0;
  for (int i = 1; i <= 400; ++i) {
    const double p = waiting_time_cdf(2.5, tc, 0.3, 0.01 * i);
    EXPECT_GE(p, prev);
    EXPECT_LE(p, 1.0);
    prev = p;
  }
  EXPECT_GT(prev, 1.0 - 1e-12);
}

TEST(Gompertz, MedianAndDegenerateCase) {
  std::vector<double> t, e;
  for (int i = 0; i < 20000; ++i) {
    Rng rng = make_rng(9, static_cast<std::uint64_t>(i));
    t.push_back(sample_gompertz_event(1.0, 0.5, 1.5, 0.0, rng));
    Rng rng2 = make_rng(10, static_cast<std::uint64_t>(i));
    e.push_back(sample_gompertz_event(1.0, 0.0, 1.5, 0.0, rng2));
  }
  std::nth_element(t.begin(), t.begin() + 10000, t.end());
  EXPECT_NEAR(t[10000], std::log1p(0.75 * std::log(2.0)) / 0.75, 0.02);
  EXPECT_NEAR(std::log1p(0.75 * std::log(2.0)) / 0.75, 0.558158, 1e-6);
  EXPECT_LE(ks_statistic(e, [](double x) { return -std::expm1(-x); }), 0.015);
}

TEST(Gompertz, MatchesInternalClockPath) {
  const double rho = 0.5, gamma = 1.5;
  const auto m = LambdaMeasure::dirac(0.3);
  const double l2 = total_rate(m, 2);
  const TimeChange tc(SizeProfile::exponential(rho), gamma);
  std::vector<double> direct, clock;
  for (int i = 0; i < 10000; ++i) {
    Rng a = make_rng(11, static_cast<std::uint64_t>(i));
    direct.push_back(sample_gompertz_event(l2, rho, gamma, 0.0, a));
    Rng b = make_rng(12, static_cast<std::uint64_t>(i));
    clock.push_back(first_event_time(simulate_limit(m, 2, tc, b)));
  }
  EXPECT_LE(ks_statistic(direct, clock), 0.02);
}

TEST(Gompertz, ConditionalOnLaterStart) {
  // Starting at t0 = 1 scales the hazard by exp(rho gamma t0).
  const TimeChange tc(SizeProfile::exponential(0.8), 1.25);
  std::vector<double> t;
  for (int i = 0; i < 10000; ++i) {
    Rng rng = make_rng(13, static_cast<std::uint64_t>(i));
    t.push_back(sample_gompertz_event(2.0, 0.8, 1.25, 1.0, rng));
  }
  EXPECT_LE(ks_statistic(t, [&](double x) { return waiting_time_cdf(2.0, tc, 1.0, x); }), 0.02);
}

TEST(Mutations, ZeroThetaAndPoissonMean) {
  Rng rng = make_rng(14, 0);
  const auto g = simulate_limit(LambdaMeasure::beta(1.0, 1.0), 10, kIdentity, rng);
  EXPECT_EQ(drop_mutations(g, 0.0, rng).total_mutations(), 0);
  const int reps = 20000;
  double total = 0.0;
  for (int i = 0; i < reps; ++i) total += static_cast<double>(drop_mutations(g, 2.0, rng).total_mutations());
  const double mean = 2.0 * g.total_branch_length();
  EXPECT_NEAR(total / reps, mean, 4.0 * std::sqrt(mean / reps));
}

TEST(Mutations, KingmanPairExpectation) {
  const int reps = 100000;
  std::vector<double> x;
  x.reserve(reps);
  for (int i = 0; i < reps; ++i) {
    Rng rng = make_rng(15, static_cast<std::uint64_t>(i));
    const auto g = drop_mutations(simulate_limit(LambdaMeasure::kingman(), 2, kIdentity, rng), 1.0, rng);
    x.push_back(static_cast<double>(g.total_mutations()));
  }
  double mean = 0.0, sq = 0.0;
  for (double v : x) mean += v / reps;
  for (double v : x) sq += (v - mean) * (v - mean) / (reps - 1);
  EXPECT_NEAR(mean, 2.0, 3.0 * std::sqrt(sq / reps));
}
