#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "hiermap/rng.hpp"

using hiermap::Pcg32;

TEST(Pcg32, ReferenceSequence) {
    // pcg32_srandom(42, 54) from the reference implementation.
    Pcg32 g(42, 54);
    const std::uint32_t expected[] = {0xa15c02b7, 0x7b47f409, 0xba1d3330, 0x83d2f293, 0xbfa4784b, 0xcbed606e};
    for (const std::uint32_t e : expected) EXPECT_EQ(g.next_u32(), e);
}

TEST(Pcg32, UniformsInRange) {
    Pcg32 g(7, 1);
    for (int i = 0; i < 100000; ++i) {
        const double u = g.next_uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        const double v = g.next_open_uniform();
        ASSERT_GT(v, 0.0);
        ASSERT_LT(v, 1.0);
    }
}

TEST(NormalStream, Moments) {
    hiermap::NormalStream z(11, 3);
    const int n = 200000;
    double s1 = 0.0;
    double s2 = 0.0;
    double s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = z.next();
        s1 += x;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    EXPECT_NEAR(s1 / n, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(s4 / n, 3.0, 0.1);
}

TEST(DeriveStream, DeterministicAndDistinct) {
    const auto a = hiermap::derive_stream(5, "truth", 0);
    const auto b = hiermap::derive_stream(5, "truth", 0);
    EXPECT_EQ(a.seed, b.seed);
    EXPECT_EQ(a.stream, b.stream);
    std::set<std::uint64_t> seeds;
    for (const char* purpose : {"truth", "noise", "replicate"}) {
        for (std::uint64_t i = 0; i < 100; ++i) seeds.insert(hiermap::derive_seed(5, purpose, i));
    }
    EXPECT_EQ(seeds.size(), 300u);
    EXPECT_NE(hiermap::derive_seed(5, "truth", 0), hiermap::derive_seed(6, "truth", 0));
}

TEST(NormalStream, PrefixProperty) {
    auto first = hiermap::make_normal_stream(9, "noise");
    auto second = hiermap::make_normal_stream(9, "noise");
    std::vector<double> a;
    for (int i = 0; i < 17; ++i) a.push_back(first.next());
    for (int i = 0; i < 17; ++i) EXPECT_EQ(second.next(), a[static_cast<std::size_t>(i)]);
}
