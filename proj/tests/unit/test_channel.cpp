// SPDX-License-Identifier: Apache-2.0

#include "nomafb/channel.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace nomafb;

namespace {

std::vector<double> draws(double mean, std::size_t n, std::uint64_t seed, std::size_t receiver = 0) {
    std::vector<double> out(n);
    const std::vector<double> variances = {1.0, mean};
    const std::vector<double> one = {mean};
    std::vector<double> g(2);
    for (std::size_t t = 0; t < n; ++t) {
        if (receiver == 0) {
            sample_gains(one, {seed, t}, std::span(g).first(1));
        } else {
            sample_gains(variances, {seed, t}, g);
            g[0] = g[1];
        }
        out[t] = g[0];
    }
    return out;
}

} // namespace

// Known-answer vectors published with the Random123 library (philox4x32_10).
TEST(Philox, KnownAnswerZero) {
    const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
    const auto out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
    const auto out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(ChannelParams, Defaults) {
    EXPECT_EQ(ChannelParams::defaults(2).variances, (std::vector<double>{1.0, 0.5}));
    const auto four = ChannelParams::defaults(4).variances;
    ASSERT_EQ(four.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k)
        EXPECT_DOUBLE_EQ(four[k], 1.0 / static_cast<double>(k + 1));
    EXPECT_THROW(ChannelParams::defaults(0), std::invalid_argument);
}

TEST(ChannelParams, Validation) {
    EXPECT_THROW(ChannelParams{}.validate(), std::invalid_argument);
    EXPECT_THROW((ChannelParams{{1.0, 0.0}}.validate()), std::invalid_argument);
    EXPECT_THROW((ChannelParams{{1.0, -2.0}}.validate()), std::invalid_argument);
    EXPECT_THROW((ChannelParams{{NAN}}.validate()), std::invalid_argument);
    EXPECT_THROW((ChannelParams{{INFINITY}}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((ChannelParams{{1.0, 0.5}}.validate()));
    EXPECT_THROW(sample_channel(ChannelParams{}, {0, 0}), std::invalid_argument);
}

TEST(TrialStream, UniformRange) {
    TrialStream s({7, 3});
    for (int i = 0; i < 100000; ++i) {
        const double u = s.next_uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(TrialStream, PureFunctionOfSeedAndTrial) {
    TrialStream a({11, 5}), b({11, 5}), c({11, 6}), d({12, 5});
    for (int i = 0; i < 10; ++i) {
        const auto va = a.next_u64();
        EXPECT_EQ(va, b.next_u64());
        EXPECT_NE(va, c.next_u64());
        EXPECT_NE(va, d.next_u64());
    }
}

TEST(SampleChannel, MeanOfFirstReceiver) {
    const auto h = draws(1.0, 1'000'000, 2024);
    const double mean = std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(h.size());
    EXPECT_NEAR(mean, 1.0, 0.01);
}

TEST(SampleChannel, MedianOfSecondReceiver) {
    // exponential median is lambda ln 2
    const auto h = draws(0.5, 1'000'000, 99, 1);
    const double threshold = 0.5 * std::log(2.0);
    const auto below = std::count_if(h.begin(), h.end(), [&](double v) { return v <= threshold; });
    EXPECT_NEAR(static_cast<double>(below) / static_cast<double>(h.size()), 0.5, 0.01);
}

TEST(SampleChannel, KolmogorovSmirnov) {
    const std::size_t n = 200'000;
    auto h = draws(0.5, n, 1, 1);
    std::sort(h.begin(), h.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = 1.0 - std::exp(-h[i] / 0.5);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    // 0.1% critical value 1.95/sqrt(n)
    EXPECT_LT(d, 1.95 / std::sqrt(static_cast<double>(n)));
}

TEST(SampleChannel, ReceiversUncorrelated) {
    const std::size_t n = 500'000;
    const std::vector<double> lambda = {1.0, 0.5};
    std::vector<double> g(2);
    double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
    for (std::size_t t = 0; t < n; ++t) {
        sample_gains(lambda, {5, t}, g);
        s1 += g[0];
        s2 += g[1];
        s11 += g[0] * g[0];
        s22 += g[1] * g[1];
        s12 += g[0] * g[1];
    }
    const double nn = static_cast<double>(n);
    const double cov = s12 / nn - (s1 / nn) * (s2 / nn);
    const double rho = cov / std::sqrt((s11 / nn - s1 * s1 / nn / nn) * (s22 / nn - s2 * s2 / nn / nn));
    EXPECT_LT(std::abs(rho), 0.01);
}

TEST(SampleChannel, Deterministic) {
    const ChannelParams params = ChannelParams::defaults(3);
    for (std::uint64_t t = 0; t < 100; ++t) {
        const auto a = sample_channel(params, {42, t});
        const auto b = sample_channel(params, {42, t});
        EXPECT_EQ(a.gains, b.gains);
        for (double g : a.gains)
            EXPECT_GT(g, 0.0);
    }
}

TEST(SampleChannel, SeedsDecorrelate) {
    const ChannelParams params = ChannelParams::defaults(2);
    int equal = 0;
    for (std::uint64_t t = 0; t < 1000; ++t)
        equal += sample_channel(params, {1, t}).gains == sample_channel(params, {2, t}).gains;
    EXPECT_EQ(equal, 0);
}
