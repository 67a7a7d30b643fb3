#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include <ssep/rng.hpp>
#include <ssep/stats.hpp>

namespace {

using ssep::rng::Family;
using ssep::rng::PhiloxCounter;
using ssep::rng::Stream;

// Known answers generated with TensorFlow's independent Philox4x32-10.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(ssep::rng::philox4x32({0, 0, 0, 0}, {0, 0}),
            (PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(ssep::rng::philox4x32({0, 0, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (PhiloxCounter{0x3d3be307, 0x716983d6, 0x70094bed, 0x36c3cf91}));
  EXPECT_EQ(ssep::rng::philox4x32({0, 0, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (PhiloxCounter{0xb60a410e, 0x61bd7780, 0xa53f3958, 0x3d51eb3f}));
  EXPECT_EQ(ssep::rng::philox4x32({5, 0, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (PhiloxCounter{0xeea8d1c1, 0x074b6f8d, 0xfa38e894, 0xdc6f2628}));
}

TEST(Stream, ReproducibleAndNamed) {
  Stream a(42, Family::Green, 3);
  Stream b(42, Family::Green, 3);
  Stream c(42, Family::Green, 4);
  Stream d(42, Family::BulkRB, 3);
  for (int k = 0; k < 100; ++k) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
    EXPECT_NE(x, d.next_u64());
  }
}

TEST(Stream, DerivedSeedsDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(ssep::rng::derive_seed(7, r));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(ssep::rng::derive_seed(7, 3), ssep::rng::derive_seed(7, 3));
}

TEST(Stream, UniformAndExponentialMoments) {
  Stream s(2024, Family::Misc, 0);
  ssep::Moments u;
  ssep::Moments e;
  constexpr int kSamples = 200000;
  for (int k = 0; k < kSamples; ++k) {
    const double x = s.uniform();
    ASSERT_GT(x, 0.0);
    ASSERT_LT(x, 1.0);
    u.add(x);
    e.add(s.exponential(4.0));
  }
  EXPECT_NEAR(u.mean(), 0.5, 5 * std::sqrt(1.0 / 12 / kSamples));
  EXPECT_NEAR(u.variance(), 1.0 / 12, 0.002);
  EXPECT_NEAR(e.mean(), 0.25, 5 * 0.25 / std::sqrt(kSamples));
}

}  // namespace
