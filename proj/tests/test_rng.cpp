#include <gtest/gtest.h>

#include "tsim/rng.hpp"

using namespace tsim;

TEST(Rng, DeterministicStreams) {
    Rng a(123), b(123);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
    Rng c(123), d(124);
    bool differ = false;
    for (int i = 0; i < 10; ++i) differ |= (c.next_u64() != d.next_u64());
    EXPECT_TRUE(differ);
}

TEST(Rng, UniformRange) {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Rng, GaussianMoments) {
    Rng rng(99);
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sum2 += g * g;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.005);
    EXPECT_NEAR(sum2 / n, 1.0, 0.01);
}

TEST(Rng, BelowIsUnbiasedEnough) {
    Rng rng(5);
    int counts[7] = {0};
    const int n = 700000;
    for (int i = 0; i < n; ++i) counts[rng.below(7)]++;
    for (int c : counts) EXPECT_NEAR(c, n / 7.0, 5.0 * std::sqrt(n / 7.0));
}

TEST(Rng, DerivedSeedsAreDistinct) {
    const uint64_t base = derive_seed(1, StreamTag::Channel, 0, 0);
    EXPECT_NE(base, derive_seed(1, StreamTag::Channel, 0, 1));
    EXPECT_NE(base, derive_seed(1, StreamTag::Channel, 1, 0));
    EXPECT_NE(base, derive_seed(1, StreamTag::InfoBits, 0, 0));
    EXPECT_NE(base, derive_seed(2, StreamTag::Channel, 0, 0));
}
