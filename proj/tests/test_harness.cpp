#include <cmath>

#include <gtest/gtest.h>

#include <mmcoal/mmcoal.hpp>

using namespace mmcoal;

TEST(Stats, KsExamples) {
  EXPECT_DOUBLE_EQ(ks_statistic(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}), 0.0);
  EXPECT_NEAR(ks_statistic(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 4}), 1.0 / 3.0, 1e-15);
  EXPECT_THROW(ks_statistic(std::vector<double>{}, std::vector<double>{1.0}), DomainError);
  EXPECT_THROW(ks_statistic(std::vector<double>{}, [](double) { return 0.0; }), DomainError);
}

TEST(Stats, TvExamples) {
  EXPECT_DOUBLE_EQ(tv_distance({1.0, 0.0}, {0.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(tv_distance({0.5, 0.5}, {0.5, 0.5}), 0.0);
  EXPECT_THROW(tv_distance({}, {}), DomainError);
}

TEST(ClockExponent, KnownPairings) {
  EXPECT_DOUBLE_EQ(clock_exponent(CanningsModel::moran(LambdaMeasure::kingman())), 2.0);
  EXPECT_DOUBLE_EQ(clock_exponent(CanningsModel::schweinsberg(HeavyTailLaw(1.0, 1.0))), 0.0);
  EXPECT_DOUBLE_EQ(clock_exponent(CanningsModel::moran(LambdaMeasure::beta(0.5, 2.0))), 1.5);
  EXPECT_DOUBLE_EQ(clock_exponent(CanningsModel::moran_thinned(LambdaMeasure::dirac(0.3), 1.25)), 1.25);
  EXPECT_THROW(clock_exponent(CanningsModel::moran(LambdaMeasure::dirac(0.5))), ConfigError);
  const auto sch = CanningsModel::schweinsberg(HeavyTailLaw(1.5, 1.0));
  EXPECT_EQ(limit_measure(sch), LambdaMeasure::beta(0.5, 1.5));
  EXPECT_DOUBLE_EQ(clock_exponent(sch, LambdaMeasure::beta(0.5, 1.5)), 0.5);
  EXPECT_THROW(clock_exponent(sch, LambdaMeasure::kingman()), ConfigError);
}

TEST(Oracle, StandardMoranPairAtFour) {
  const auto p = one_generation_merger_oracle(OffspringLaw::point(4, 2), 2);
  EXPECT_DOUBLE_EQ(p[2], 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(p[0], 5.0 / 6.0);
}

TEST(Oracle, MatchesBruteForceEnumeration) {
  // Enumerate which of the N individuals are in the large family and which are sampled.
  const auto law = OffspringLaw::from_pmf(7, {2, 5}, {0.4, 0.6});
  const int n = 3;
  std::vector<double> brute(n + 1, 0.0);
  for (std::size_t i = 0; i < law.values().size(); ++i) {
    const int u = static_cast<int>(law.values()[i]);
    int total = 0;
    std::vector<int> hits(n + 1, 0);
    for (int mask = 0; mask < (1 << 7); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) != n) continue;
      ++total;
      const int j = __builtin_popcount(static_cast<unsigned>(mask) & ((1u << u) - 1));
      ++hits[j >= 2 ? j : 0];
    }
    for (int j = 0; j <= n; ++j) brute[static_cast<std::size_t>(j)] += law.probs()[i] * hits[static_cast<std::size_t>(j)] / total;
  }
  const auto p = one_generation_merger_oracle(law, n);
  for (int j = 0; j <= n; ++j) EXPECT_NEAR(p[static_cast<std::size_t>(j)], brute[static_cast<std::size_t>(j)], 1e-15);
}

TEST(Experiments, PairTimeKingmanAndThreadIndependence) {
  const auto model = CanningsModel::moran(LambdaMeasure::kingman());
  auto spec = make_spec(model, 2, 1000, SizeProfile::constant(), 4000, 17, 1);
  const auto one = pair_time_experiment(spec, 0.03);
  EXPECT_TRUE(one.pass) << one.distance;
  EXPECT_LE(one.distance, ks_critical_value(4000, 0, 0.001));
  spec.threads = 3;
  const auto three = pair_time_experiment(spec, 0.03);
  EXPECT_EQ(one.to_json(false).dump(), three.to_json(false).dump());
  EXPECT_EQ(one.values, three.values);
}

TEST(Experiments, PairTimeRejectsMultipleLineages) {
  auto spec = make_spec(CanningsModel::moran(LambdaMeasure::kingman()), 3, 1000, SizeProfile::constant(), 10, 1);
  EXPECT_THROW(pair_time_experiment(spec, 0.02), ConfigError);
}

TEST(Experiments, TwoSampleNeedsMatchingModels) {
  const auto a = make_spec(CanningsModel::moran(LambdaMeasure::kingman()), 2, 1000, SizeProfile::constant(), 10, 1);
  auto b = a;
  b.N = 2000;
  EXPECT_THROW(pair_time_two_sample(a, b, 0.05), ConfigError);
  auto c = make_spec(CanningsModel::moran(LambdaMeasure::beta(1.0, 1.0)), 2, 1000, SizeProfile::constant(), 10, 1);
  EXPECT_THROW(pair_time_two_sample(a, c, 0.05), ConfigError);
}

TEST(Experiments, StarLawFirstMerger) {
  const auto spec = ExperimentSpec{CanningsModel::moran(LambdaMeasure::dirac(1.0)), LambdaMeasure::dirac(1.0), 4, 100,
                                   SizeProfile::constant(), 0.0, 200, 3};
  const auto rep = first_merger_experiment(spec, FirstMergerMode::FullCollision, 0.0);
  EXPECT_DOUBLE_EQ(rep.distance, 0.0);
  for (double v : rep.values) EXPECT_EQ(v, 4.0);
}

TEST(Experiments, FirstMergerOneGenerationOracle) {
  auto spec = ExperimentSpec{CanningsModel::moran(LambdaMeasure::beta(1.5, 1.0)), LambdaMeasure::beta(1.5, 1.0), 5, 50,
                             SizeProfile::constant(), 0.5, 100000, 5};
  const auto rep = first_merger_experiment(spec, FirstMergerMode::OneGeneration, 0.01);
  EXPECT_TRUE(rep.pass) << rep.distance;
  EXPECT_EQ(rep.experiment, "first-merger-one-generation");
}

TEST(Experiments, BlockCountAtTimeZeroIsDegenerate) {
  const auto spec = make_spec(CanningsModel::moran(LambdaMeasure::kingman()), 6, 500, SizeProfile::constant(), 300, 9);
  const auto rep = block_count_experiment(spec, {0.0}, 0.0);
  EXPECT_DOUBLE_EQ(rep.distance, 0.0);
  EXPECT_TRUE(rep.pass);
}

TEST(Experiments, BlockCountKingmanSmall) {
  const auto spec = make_spec(CanningsModel::moran(LambdaMeasure::kingman()), 5, 500, SizeProfile::constant(), 3000, 10);
  const auto rep = block_count_experiment(spec, {0.2, 0.6}, 0.05);
  EXPECT_TRUE(rep.pass) << rep.distance;
  EXPECT_EQ(rep.details["per_time"].size(), 2u);
}

TEST(Experiments, ClockConstantProfileStaysWithinOneStep) {
  const auto model = CanningsModel::moran_thinned(LambdaMeasure::dirac(0.3), 1.5);
  const auto c = compare_clock(model, 2000, SizeProfile::constant(), 1.5, 1.0, CapsMode::Ramped);
  EXPECT_LE(c.sup_deviation, model.exact_c_N(2000) * (1.0 + 1e-9));
}

TEST(Experiments, ClockRefinesWithN) {
  const auto model = CanningsModel::moran_thinned(LambdaMeasure::dirac(0.3), 1.5);
  const auto coarse = compare_clock(model, 1000, SizeProfile::exponential(1.0), 1.5, 1.0, CapsMode::Ramped);
  const auto fine = compare_clock(model, 2000, SizeProfile::exponential(1.0), 1.5, 1.0, CapsMode::Ramped);
  EXPECT_LT(fine.sup_deviation, coarse.sup_deviation);
}

TEST(Experiments, ClockNeedsModifiedMoran) {
  EXPECT_THROW(compare_clock(CanningsModel::schweinsberg(HeavyTailLaw(1.5, 1.0)), 1000, SizeProfile::constant(), 0.5,
                             1.0, CapsMode::Ramped),
               ConfigError);
}

TEST(Experiments, NegativeControlSeparation) {
  const auto rep = negative_control_experiment(CanningsModel::moran(LambdaMeasure::kingman()), 10000, 1.0, 100000, 4);
  EXPECT_TRUE(rep.pass);
  EXPECT_GE(rep.distance, 0.2);
  EXPECT_LE(rep.details["baseline_c_N"].get<double>(), 1e-3);
  EXPECT_EQ(rep.details["regime"], "non-coalescent-limit regime");
  EXPECT_THROW(negative_control_experiment(CanningsModel::schweinsberg(HeavyTailLaw(1.5, 1.0)), 100, 1.0, 10, 1),
               ConfigError);
}

TEST(Experiments, TriangleScheduleRespectsStep) {
  const double c = 0.01;
  const auto s = triangle_schedule(1000, c, 2000);
  EXPECT_EQ(s.length(), 2000);
  for (std::int64_t r = 1; r <= 2000; ++r) {
    EXPECT_LE(std::llabs(s.change(r)), 100);
    EXPECT_GE(s.size(r), 500);
    EXPECT_LE(s.size(r), 1000);
  }
}

TEST(Experiments, ShortfallRunCountsGenerations) {
  const auto run = shortfall_experiment(CanningsModel::schweinsberg(HeavyTailLaw(1.5, 1.0)), 500, 2000, 3);
  EXPECT_EQ(run.generations, 2000);
  EXPECT_GT(run.step, 0);
  EXPECT_THROW(shortfall_experiment(CanningsModel::moran(LambdaMeasure::kingman()), 500, 10, 3), ConfigError);
}

TEST(Report, JsonShape) {
  const auto spec = make_spec(CanningsModel::moran(LambdaMeasure::kingman()), 2, 100, SizeProfile::exponential(0.5), 50, 8);
  const auto j = echo(spec);
  EXPECT_EQ(j["model"], "moran:dirac:0");
  EXPECT_EQ(j["allocation"], "to-multiplying");
  EXPECT_EQ(j["scenario"], "epoch 0 inf exp rate=0.5\n");
  const auto rep = pair_time_experiment(spec, 0.5);
  const auto full = rep.to_json();
  const auto bare = rep.to_json(false);
  EXPECT_TRUE(full.contains("runtime_s"));
  EXPECT_FALSE(bare.contains("runtime_s"));
  EXPECT_EQ(bare["seed"], 8u);
  EXPECT_TRUE(bare["details"].contains("c_N_asymptotic"));
}
