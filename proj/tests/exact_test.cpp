#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <ssep/exact.hpp>
#include <ssep/spectral.hpp>

#include "oracle.hpp"

namespace {

using ssep::Configuration;
using ssep::ModelParams;
using namespace ssep::exact;

TEST(BuildGenerator, SingleSiteHalfDensities) {
  const auto gen = build_generator(ModelParams{1, 0.5, 0.5, true});
  ASSERT_EQ(gen.dim(), 2u);
  EXPECT_DOUBLE_EQ(gen(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(gen(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(gen(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(gen(1, 1), -1.0);
}

TEST(BuildGenerator, RowsSumToZeroAndMatchTransitions) {
  for (int n = 1; n <= 6; ++n) {
    const ModelParams params{n, 0.3, 0.8, true};
    const auto gen = build_generator(params);
    for (std::size_t s = 0; s < gen.dim(); ++s) {
      double sum = 0.0;
      for (std::size_t t = 0; t < gen.dim(); ++t) sum += gen(s, t);
      EXPECT_NEAR(sum, 0.0, 1e-12);
      for (const auto& tr : ssep::transitions(Configuration::from_index(s, n), params))
        EXPECT_DOUBLE_EQ(gen(s, tr.target.index()), tr.rate);
    }
  }
}

TEST(BuildGenerator, AbsorbingEmptyState) {
  const auto gen = build_generator(ModelParams{2, 0.0, 0.0, true});
  for (std::size_t t = 0; t < gen.dim(); ++t) EXPECT_EQ(gen(0, t), 0.0);
}

TEST(BuildGenerator, CapacityLimit) {
  EXPECT_THROW(build_generator(ModelParams{kMaxSites + 1, 0.5, 0.5, true}), ssep::CapacityError);
}

TEST(Stationary, SingleSiteBalance) {
  const auto pi = stationary(build_generator(ModelParams{1, 0.2, 0.6, true}));
  EXPECT_NEAR(pi[0], 0.6, 1e-12);
  EXPECT_NEAR(pi[1], 0.4, 1e-12);
}

TEST(Stationary, ProductLawForEqualDensities) {
  const auto pi = stationary(build_generator(ModelParams{4, 0.3, 0.3, true}));
  EXPECT_LE(tv_distance(pi, DistributionVector::product_bernoulli(4, 0.3)), 1e-12);
}

TEST(Stationary, MeanWeightAndResidual) {
  for (int n : {2, 5, 7}) {
    const ModelParams params{n, 0.2, 0.7, true};
    const auto gen = build_generator(params);
    const auto pi = stationary(gen);
    EXPECT_LE(stationary_residual(gen, pi), 1e-10);
    EXPECT_NEAR(weight_moments(pi).mean, n * (0.2 + 0.7) / 2, 1e-10);
    // independent route: long-time limit of the dense exponential
    const auto limit = oracle::long_time_law(gen);
    for (std::size_t s = 0; s < gen.dim(); ++s) EXPECT_NEAR(pi[s], limit[s], 1e-9);
  }
}

TEST(Stationary, SymmetriesOfTheLaw) {
  for (int n : {3, 5}) {
    const auto base = stationary(build_generator(ModelParams{n, 0.15, 0.65, true}));
    const auto dual = stationary(build_generator(ModelParams{n, 0.85, 0.35, true}));
    const auto mirror = stationary(build_generator(ModelParams{n, 0.65, 0.15, true}));
    EXPECT_LE(tv_distance(base, dual.complemented()), 1e-10);
    EXPECT_LE(tv_distance(base, mirror.reflected()), 1e-10);
  }
}

TEST(Stationary, RejectsReducibleModels) {
  EXPECT_THROW(stationary(build_generator(ModelParams{3, 0.0, 0.0, true})), ssep::ReducibleModelError);
  EXPECT_THROW(stationary(build_generator(ModelParams{3, 1.0, 1.0, true})), ssep::ReducibleModelError);
}

TEST(TvDistance, Basics) {
  const auto a = DistributionVector::point_mass(4, 1);
  const auto b = DistributionVector::point_mass(4, 2);
  EXPECT_DOUBLE_EQ(tv_distance(a, b), 1.0);
  EXPECT_DOUBLE_EQ(tv_distance(a, a), 0.0);
  EXPECT_NEAR(tv_distance(DistributionVector({0.7, 0.3}), DistributionVector({0.45, 0.55})), 0.25, 1e-15);
  EXPECT_THROW(tv_distance(a, DistributionVector({0.5, 0.5})), ssep::DomainError);
}

TEST(DistributionVector, Validation) {
  EXPECT_THROW(DistributionVector({0.6, 0.6}), ssep::ValidationError);
  EXPECT_THROW(DistributionVector({1.1, -0.1}), ssep::ValidationError);
}

TEST(Evolve, ZeroTimeIsIdentity) {
  const auto gen = build_generator(ModelParams{3, 0.4, 0.1, true});
  const auto d0 = DistributionVector::point_mass(Configuration::parse("101"));
  EXPECT_EQ(evolve(gen, d0, 0.0, 1e-12).probs(), d0.probs());
  EXPECT_THROW(evolve(gen, d0, -1.0, 1e-12), ssep::DomainError);
}

TEST(Evolve, SingleSiteAbsorbingDecay) {
  const auto gen = build_generator(ModelParams{1, 0.0, 0.0, true});
  const auto d0 = DistributionVector::point_mass(2, 1);
  for (double t : {0.01, 0.3, 1.0, 4.0}) EXPECT_NEAR(evolve(gen, d0, t, 1e-13)[1], std::exp(-2.0 * t), 1e-12);
}

TEST(Evolve, MatchesDenseExponential) {
  const std::vector<ModelParams> cases{{3, 0.3, 0.6, true}, {4, 0.0, 0.9, true}, {4, 0.5, 0.5, false},
                                       {5, 0.1, 0.2, true}};
  for (const auto& params : cases) {
    const auto gen = build_generator(params);
    for (double t : {0.02, 0.17, 0.9}) {
      const auto p = oracle::transition_matrix(gen, t);
      for (std::size_t start : {std::size_t{0}, gen.dim() - 1, gen.dim() / 3}) {
        const auto got = evolve(gen, DistributionVector::point_mass(gen.dim(), start), t, 1e-12);
        const DistributionVector want(oracle::row(p, static_cast<Eigen::Index>(start)));
        EXPECT_LE(tv_distance(got, want), 1e-10) << "N=" << params.n_sites << " t=" << t;
      }
    }
  }
}

TEST(Evolve, ConvergesToStationary) {
  const ModelParams params{4, 0.25, 0.75, true};
  const auto gen = build_generator(params);
  const double lambda1 = ssep::spectral::eigenvalue(4, 1);
  const auto d = evolve(gen, DistributionVector::point_mass(gen.dim(), gen.dim() - 1), 50.0 / lambda1, 1e-12);
  EXPECT_LE(tv_distance(d, stationary(gen)), 1e-8);
}

TEST(Evolve, SemigroupProperty) {
  const auto gen = build_generator(ModelParams{5, 0.35, 0.05, true});
  const auto d0 = DistributionVector::point_mass(Configuration::parse("11010"));
  constexpr double kTol = 1e-11;
  const auto two_steps = evolve(gen, evolve(gen, d0, 0.07, kTol), 0.11, kTol);
  const auto one_step = evolve(gen, d0, 0.18, kTol);
  EXPECT_LE(tv_distance(two_steps, one_step), 2 * kTol);
}

TEST(WorstCase, InitialValue) {
  const auto gen = build_generator(ModelParams{4, 0.3, 0.7, true});
  const auto pi = stationary(gen);
  const auto wc = worst_case_distance(gen, pi, 0.0, 1e-12);
  double min_pi = 1.0;
  std::size_t arg = 0;
  for (std::size_t s = 0; s < pi.dim(); ++s)
    if (pi[s] < min_pi) min_pi = pi[s], arg = s;
  EXPECT_NEAR(wc.distance, 1.0 - min_pi, 1e-14);
  EXPECT_EQ(wc.argmax.index(), arg);
}

TEST(WorstCase, MatchesBruteForceAndDecreases) {
  const auto gen = build_generator(ModelParams{4, 0.3, 0.3, true});
  const auto pi = stationary(gen);
  double prev = 1.0;
  for (double t : {0.0, 0.05, 0.1, 0.2, 0.4, 1.0, 2.0}) {
    const auto wc = worst_case_distance(gen, pi, t, 1e-12);
    EXPECT_NEAR(wc.distance, oracle::worst_case(gen, pi.probs(), t), 1e-10);
    EXPECT_LE(wc.distance, prev + 2e-12);
    prev = wc.distance;
  }
}

TEST(WorstCase, CurveCrossesQuarter) {
  const auto gen = build_generator(ModelParams{6, 0.3, 0.3, true});
  const auto pi = stationary(gen);
  EXPECT_GT(worst_case_distance(gen, pi, 0.0, 1e-12).distance, 0.25);
  EXPECT_LT(worst_case_distance(gen, pi, 2.0, 1e-12).distance, 0.25);
}

TEST(MixingTime, AgreesWithBruteForceBisection) {
  const auto gen = build_generator(ModelParams{4, 0.2, 0.5, true});
  const auto pi = stationary(gen);
  constexpr double kTol = 1e-6;
  const double got = mixing_time(gen, pi, 0.25, kTol);
  double lo = 0.0;
  double hi = 5.0;
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (oracle::worst_case(gen, pi.probs(), mid) <= 0.25 ? hi : lo) = mid;
  }
  EXPECT_NEAR(got, hi, kTol);
}

TEST(MixingTime, MonotoneInEpsilonAndTrivialNearOne) {
  const auto gen = build_generator(ModelParams{5, 0.3, 0.3, true});
  const auto pi = stationary(gen);
  EXPECT_GE(mixing_time(gen, pi, 0.25, 1e-6), mixing_time(gen, pi, 0.5, 1e-6));
  EXPECT_EQ(mixing_time(gen, pi, 1.0 - 1e-15, 1e-6), 0.0);
  EXPECT_THROW(mixing_time(gen, pi, 1.0, 1e-6), ssep::DomainError);
  EXPECT_THROW(mixing_time(gen, pi, 0.0, 1e-6), ssep::DomainError);
}

TEST(CheckNd, ProductAndPointMasses) {
  EXPECT_LE(check_nd(DistributionVector::product_bernoulli(5, 0.37)).max_violation, 1e-15);
  EXPECT_EQ(check_nd(DistributionVector::point_mass(Configuration::ones(4))).max_violation, 0.0);
}

TEST(CheckNd, DetectsPositiveCorrelation) {
  // η(1) = η(2) with probability one, each Ber(1/2).
  const auto report = check_nd(DistributionVector({0.5, 0.0, 0.0, 0.5}));
  EXPECT_NEAR(report.max_violation, 0.25, 1e-15);
  EXPECT_EQ(report.worst_subset, Configuration::parse("11"));
}

TEST(CheckNd, EvolvedLawsStayNegativelyDependent) {
  for (int n = 2; n <= 5; ++n) {
    for (auto [p, q] : std::vector<std::pair<double, double>>{{0.3, 0.7}, {0.0, 1.0}, {0.5, 0.5}, {0.9, 0.1}}) {
      const auto gen = build_generator(ModelParams{n, p, q, true});
      for (std::size_t s = 0; s < gen.dim(); ++s) {
        for (double t : {0.01, 0.1, 0.5}) {
          const auto d = evolve(gen, DistributionVector::point_mass(gen.dim(), s), t, 1e-13);
          EXPECT_LE(check_nd(d).max_violation, 1e-10);
          const auto m = weight_moments(d);
          EXPECT_LE(m.variance, m.mean + 1e-10);
        }
      }
    }
  }
}

}  // namespace
