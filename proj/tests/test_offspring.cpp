#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include <mmcoal/mmcoal.hpp>

using namespace mmcoal;

namespace {

/// P(U' = j) for Lambda = delta_p by direct summation in long double.
std::vector<long double> dirac_pmf(long double p, int N) {
  std::vector<long double> w(static_cast<std::size_t>(N + 1), 0.0L);
  long double total = 0.0L;
  for (int j = 2; j <= N; ++j) {
    const long double logc = std::lgamma(static_cast<long double>(N + 1)) - std::lgamma(static_cast<long double>(j + 1)) -
                             std::lgamma(static_cast<long double>(N - j + 1));
    w[static_cast<std::size_t>(j)] = std::exp(logc + (j - 2) * std::log(p) + (N - j) * std::log1p(-p));
    total += w[static_cast<std::size_t>(j)];
  }
  for (auto& x : w) x /= total;
  return w;
}

LambdaMeasure random_measure(Rng& rng) {
  std::vector<MeasureComponent> parts;
  const int count = 1 + static_cast<int>(uniform_index(rng, 3));
  for (int i = 0; i < count; ++i) {
    if (uniform01(rng) < 0.5) {
      parts.push_back(MeasureComponent{PointMass{uniform01(rng)}, 1.0 / count});
    } else {
      parts.push_back(
          MeasureComponent{BetaShape{0.2 + 2.0 * uniform01(rng), 0.2 + 2.0 * uniform01(rng)}, 1.0 / count});
    }
  }
  return LambdaMeasure(parts);
}

}  // namespace

TEST(OffspringLaw, KingmanIsStandardMoran) {
  const auto law = offspring_law(LambdaMeasure::kingman(), 50);
  EXPECT_EQ(law.values(), (std::vector<std::int64_t>{2}));
  EXPECT_DOUBLE_EQ(law.probability(2), 1.0);
}

TEST(OffspringLaw, StarLawIsWholePopulation) {
  const auto law = offspring_law(LambdaMeasure::dirac(1.0), 8);
  EXPECT_DOUBLE_EQ(law.probability(8), 1.0);
  EXPECT_DOUBLE_EQ(factorial_moment(law, 3), 336.0);
  EXPECT_DOUBLE_EQ(coalescence_prob(law), 1.0);
}

TEST(OffspringLaw, DiracHalfAgainstBruteForce) {
  const auto law = offspring_law(LambdaMeasure::dirac(0.5), 100);
  const double lambda_N = 4.0 * (1.0 - std::pow(0.5, 100) - 100.0 * 0.5 * std::pow(0.5, 99));
  EXPECT_NEAR(law.source_total_rate(), lambda_N, 1e-12);
  const auto oracle = dirac_pmf(0.5L, 100);
  for (int j = 2; j <= 100; ++j) {
    EXPECT_NEAR(law.probability(j), static_cast<double>(oracle[static_cast<std::size_t>(j)]),
                1e-12 * static_cast<double>(oracle[static_cast<std::size_t>(j)]) + 1e-300)
        << j;
  }
  long double m4 = 0.0L;
  for (int j = 4; j <= 100; ++j) m4 += oracle[static_cast<std::size_t>(j)] * j * (j - 1.0L) * (j - 2.0L) * (j - 3.0L);
  const double closed = 100.0 * 99.0 * 98.0 * 97.0 * 0.25 / lambda_N;
  EXPECT_NEAR(factorial_moment(law, 4), closed, 1e-10 * closed);
  EXPECT_NEAR(static_cast<double>(m4), closed, 1e-10 * closed);
}

TEST(OffspringLaw, PointLawMoments) {
  const auto law = OffspringLaw::point(4, 2);
  EXPECT_DOUBLE_EQ(factorial_moment(law, 2), 2.0);
  EXPECT_DOUBLE_EQ(factorial_moment(law, 3), 0.0);
  EXPECT_DOUBLE_EQ(coalescence_prob(law), 1.0 / 6.0);
}

TEST(OffspringLaw, Validation) {
  EXPECT_THROW(offspring_law(LambdaMeasure::dirac(0.5), 2), DomainError);
  EXPECT_THROW(offspring_law(LambdaMeasure::dirac(0.5, 3.0), 10), NormalizationError);
  EXPECT_THROW(OffspringLaw::from_pmf(10, {1}, {1.0}), DomainError);
  EXPECT_THROW(OffspringLaw::from_pmf(10, {11}, {1.0}), DomainError);
  EXPECT_THROW(OffspringLaw::from_pmf(10, {2, 2}, {0.5, 0.5}), DomainError);
  EXPECT_THROW(OffspringLaw::from_pmf(10, {2, 3}, {0.5, -0.5}), DomainError);
  EXPECT_THROW(OffspringLaw::from_pmf(10, {2}, {0.0}), DegenerateError);
  EXPECT_THROW(factorial_moment(OffspringLaw::point(4, 2), -1), DomainError);
}

TEST(OffspringLaw, FromPmfNormalizesAndSorts) {
  const auto law = OffspringLaw::from_pmf(10, {7, 3}, {3.0, 1.0});
  EXPECT_EQ(law.values(), (std::vector<std::int64_t>{3, 7}));
  EXPECT_DOUBLE_EQ(law.probability(7), 0.75);
  EXPECT_DOUBLE_EQ(law.mean(), 6.0);
  EXPECT_EQ(law.min_support(), 3);
  EXPECT_DOUBLE_EQ(law.probability(5), 0.0);
}

TEST(OffspringLaw, SamplingMatchesPmf) {
  const auto law = offspring_law(LambdaMeasure::beta(1.0, 1.0), 30);
  std::vector<int> draws;
  Rng rng = make_rng(21, 0);
  for (int i = 0; i < 200000; ++i) draws.push_back(static_cast<int>(law.sample(rng)));
  const auto freq = empirical_pmf(draws, 31);
  std::vector<double> p(31, 0.0);
  for (int j = 2; j <= 30; ++j) p[static_cast<std::size_t>(j)] = law.probability(j);
  EXPECT_LE(tv_distance(freq, p), 0.01);
}

class RandomLaws : public ::testing::TestWithParam<int> {};

TEST_P(RandomLaws, FactorialMomentsFollowLambdaMoments) {
  // E((U')_k) = (N)_k E(X^{k-2}) / lambda_N, so in particular c_N = 1 / lambda_N.
  Rng rng = make_rng(31, static_cast<std::uint64_t>(GetParam()));
  const auto m = random_measure(rng);
  const std::int64_t N = 3 + uniform_index(rng, 300);
  const auto law = offspring_law(m, N);
  double sum = 0.0;
  for (double p : law.probs()) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_NEAR(law.c_N() * law.source_total_rate(), 1.0, 1e-10);
  for (int k = 2; k <= 6 && k <= N; ++k) {
    const double expected = falling_factorial(static_cast<double>(N), k) * moment(m, k - 2) / law.source_total_rate();
    EXPECT_NEAR(law.factorial_moment(k), expected, 1e-9 * expected) << "k=" << k << " N=" << N;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomLaws, ::testing::Range(0, 40));

TEST(ThinnedLaw, DiracHalfClosedForm) {
  auto base = std::make_shared<const OffspringLaw>(offspring_law(LambdaMeasure::dirac(0.5), 100));
  const ThinnedLaw law(base, 1.5);
  const double lambda_N = base->source_total_rate();
  EXPECT_NEAR(law.p_active(), lambda_N * 1e-3, 1e-15);
  EXPECT_NEAR(law.p_active(), 0.004, 1e-12);
  const double c = 1e-3 + (1.0 - law.p_active()) * 2.0 / 9900.0;
  EXPECT_NEAR(coalescence_prob(law), c, 1e-15);
  EXPECT_NEAR(c, 1.201e-3, 1e-6);
  EXPECT_NEAR(law.effective().c_N(), c, 1e-15);
  EXPECT_THROW(ThinnedLaw(base, 2.0), DomainError);
  EXPECT_THROW(ThinnedLaw(std::make_shared<const OffspringLaw>(OffspringLaw::point(10, 3)), 1.5), DomainError);
}

TEST(ThinnedLaw, ModelUsesTheSameMixture) {
  const auto model = CanningsModel::moran_thinned(LambdaMeasure::dirac(0.5), 1.5);
  auto base = std::make_shared<const OffspringLaw>(offspring_law(LambdaMeasure::dirac(0.5), 100));
  EXPECT_NEAR(model.exact_c_N(100), ThinnedLaw(base, 1.5).c_N(), 1e-15);
}

TEST(HeavyTail, SurvivalAndPmf) {
  const HeavyTailLaw t(1.5, 1.0);
  EXPECT_DOUBLE_EQ(t.survival(1), 1.0);
  EXPECT_NEAR(t.pmf(1), 1.0 - std::pow(2.0, -1.5), 1e-15);
  EXPECT_NEAR(t.pmf(1), 0.646447, 1e-6);
  EXPECT_NEAR(t.mean(), std::riemann_zeta(1.5), 1e-12);
  EXPECT_NEAR(t.mean(), 2.612, 1e-3);
  const HeavyTailLaw wide(1.5, 4.0);
  EXPECT_DOUBLE_EQ(wide.survival(2), 1.0);
  EXPECT_NEAR(wide.survival(3), 4.0 * std::pow(3.0, -1.5), 1e-15);
  double direct = 0.0;
  for (int k = 1; k < 2000000; ++k) direct += wide.survival(k);
  EXPECT_NEAR(wide.mean(), direct + 4.0 * 2.0 / std::sqrt(2e6), 1e-6);
  EXPECT_TRUE(std::isinf(HeavyTailLaw(1.0, 1.0).mean()));
}

TEST(HeavyTail, Validation) {
  EXPECT_THROW(HeavyTailLaw(1.5, 0.3), DomainError);
  EXPECT_THROW(HeavyTailLaw(2.0, 1.0), DomainError);
  EXPECT_THROW(HeavyTailLaw(0.9, 1.0), DomainError);
}

TEST(HeavyTail, SampleFrequencyOfOne) {
  const HeavyTailLaw t(1.5, 1.0);
  Rng rng = make_rng(41, 0);
  const int draws = 1000000;
  int ones = 0;
  for (int i = 0; i < draws; ++i) ones += sample_heavy_tail(t, rng) == 1;
  const double p = t.pmf(1);
  EXPECT_NEAR(static_cast<double>(ones) / draws, p, 3.0 * std::sqrt(p * (1.0 - p) / draws));
}

TEST(HeavyTail, SampleMean) {
  const HeavyTailLaw t(1.5, 1.0);
  Rng rng = make_rng(42, 0);
  const int draws = 10000000;
  double sum = 0.0;
  for (int i = 0; i < draws; ++i) sum += static_cast<double>(sample_heavy_tail(t, rng));
  EXPECT_NEAR(sum / draws, std::riemann_zeta(1.5), 0.05 * std::riemann_zeta(1.5));
}
