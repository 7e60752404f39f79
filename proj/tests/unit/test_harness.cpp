// SPDX-License-Identifier: Apache-2.0

#include "nomafb/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "nomafb/quantizer.hpp"

using namespace nomafb;

namespace {

ExperimentConfig config(ExperimentKind kind, std::vector<double> p_db, std::vector<DeltaRule> deltas,
                        std::uint64_t trials) {
    ExperimentConfig cfg;
    cfg.kind = kind;
    cfg.p_db = std::move(p_db);
    cfg.deltas = std::move(deltas);
    cfg.trials = trials;
    return cfg;
}

const Stat& metric(const RunStats& s, double p_db, const DeltaRule& rule, const std::string& name) {
    for (const auto& pt : s.points)
        if (pt.p_db == p_db && pt.rule == rule)
            return pt.metrics.at(name);
    throw std::out_of_range("no point");
}

// Expected codeword length of a quantized Exp(lambda) gain, summed over the
// geometric level distribution.
double expected_vle(double delta, double lambda, std::int64_t t, Flavor flavor) {
    const double q = std::exp(-delta / lambda);
    double e = 0.0;
    if (flavor == Flavor::RateAdaptation) {
        for (std::int64_t n = 0; n < t; ++n)
            e += std::pow(q, n) * (1 - q) * std::floor(std::log2(n + 2.0));
        e += std::pow(q, t) * std::floor(std::log2(t + 2.0));
    } else {
        for (std::int64_t n = 1; n <= t; ++n)
            e += std::pow(q, n - 1) * (1 - q) * std::floor(std::log2(n + 2.0));
        e += std::pow(q, t) * std::floor(std::log2(t + 3.0));
    }
    return e;
}

bool same_bits(double a, double b) {
    return std::memcmp(&a, &b, sizeof a) == 0;
}

void expect_identical(const RunStats& a, const RunStats& b) {
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        ASSERT_EQ(a.points[i].trials, b.points[i].trials);
        ASSERT_EQ(a.points[i].metrics.size(), b.points[i].metrics.size());
        for (const auto& [name, stat] : a.points[i].metrics) {
            const Stat& other = b.points[i].metrics.at(name);
            EXPECT_TRUE(same_bits(stat.value, other.value)) << name;
            EXPECT_TRUE(same_bits(stat.std_error, other.std_error)) << name;
        }
    }
    ASSERT_EQ(a.slopes.size(), b.slopes.size());
    for (std::size_t i = 0; i < a.slopes.size(); ++i)
        EXPECT_TRUE(same_bits(a.slopes[i].slope, b.slopes[i].slope));
}

} // namespace

TEST(ExperimentKind, Names) {
    for (auto kind : {ExperimentKind::MinRate, ExperimentKind::RateLoss, ExperimentKind::Outage,
                      ExperimentKind::OutageLoss, ExperimentKind::FeedbackRate, ExperimentKind::Diversity,
                      ExperimentKind::KUser})
        EXPECT_EQ(parse_experiment_kind(to_string(kind)), kind);
    EXPECT_EQ(to_string(ExperimentKind::FeedbackRate), "feedback");
    EXPECT_FALSE(parse_experiment_kind("Outage").has_value());
}

TEST(DeltaRule, Policies) {
    EXPECT_EQ(DeltaRule::fixed(0.05).at(1000.0), 0.05);
    EXPECT_NEAR(DeltaRule::cube_root().at(1000.0), 0.1, 1e-15);
    EXPECT_NEAR(DeltaRule::capped_cube_root().at(1000.0), 0.1, 1e-15);
    EXPECT_EQ(DeltaRule::capped_cube_root().at(10.0), 0.2);
    EXPECT_EQ(DeltaRule::fixed(0.01).label(), "0.01");
    EXPECT_EQ(DeltaRule::cube_root().label(), "pcube");
    EXPECT_EQ(DeltaRule::capped_cube_root().label(), "min02-pcube");
    EXPECT_EQ(DeltaRule::parse_policy("min02-pcube"), DeltaRule::capped_cube_root());
    EXPECT_FALSE(DeltaRule::parse_policy("0.1").has_value());
}

TEST(Config, Validation) {
    auto cfg = config(ExperimentKind::RateLoss, {10}, {DeltaRule::fixed(1.5)}, 10);
    try {
        cfg.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "delta");
    }
    cfg.deltas = {DeltaRule::fixed(0.1)};
    EXPECT_NO_THROW(cfg.validate());
    cfg.p_db.clear();
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.p_db = {10};
    cfg.trials = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.trials = 10;
    cfg.channel.variances = {0.5, 1.0};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.channel = ChannelParams::defaults(3);
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.kind = ExperimentKind::KUser;
    EXPECT_NO_THROW(cfg.validate());
    cfg.min_outage_events = 10;
    EXPECT_NO_THROW(cfg.validate());
    cfg.kind = ExperimentKind::MinRate;
    cfg.channel = ChannelParams::defaults(2);
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, DiversityNeedsFourPointsInWindow) {
    auto cfg = config(ExperimentKind::Diversity, {0, 10, 20, 25, 30}, {DeltaRule::fixed(0.2)}, 10);
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.p_db = {0, 10, 20, 23, 27, 30};
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, WrongRunner) {
    const auto cfg = config(ExperimentKind::Outage, {10}, {DeltaRule::fixed(0.1)}, 10);
    EXPECT_THROW(run_min_rate(cfg), ConfigError);
}

TEST(FitDiversity, RecoversPowerLaw) {
    for (double d : {0.5, 1.0, 1.7}) {
        std::vector<CurvePoint> curve;
        for (double p_db = 0; p_db <= 40; p_db += 2.5)
            curve.push_back({p_db, 0.3 * std::pow(std::pow(10.0, p_db / 10), -d)});
        const auto fit = fit_diversity(curve, 20, 30);
        EXPECT_NEAR(fit.slope, d, 1e-6);
        EXPECT_EQ(fit.points, 5u);
        EXPECT_NEAR(estimate_diversity(curve, 0, 40), d, 1e-6);
    }
}

TEST(FitDiversity, Rejections) {
    const std::vector<CurvePoint> zero = {{20, 0.1}, {25, 0.0}, {30, 0.01}};
    EXPECT_THROW(fit_diversity(zero, 20, 30), std::invalid_argument);
    const std::vector<CurvePoint> two = {{20, 0.1}, {30, 0.01}};
    EXPECT_THROW(fit_diversity(two, 20, 30), std::invalid_argument);
}

TEST(MinRate, QuantizedBetweenTdmaAndFull) {
    const std::vector<DeltaRule> rules = {DeltaRule::fixed(0.01), DeltaRule::fixed(0.05)};
    const auto s = run_min_rate(config(ExperimentKind::MinRate, {0, 10, 20, 30}, rules, 100'000));
    ASSERT_EQ(s.points.size(), 8u);
    for (double p : {0.0, 10.0, 20.0, 30.0}) {
        for (const auto& r : rules) {
            EXPECT_LE(metric(s, p, r, "r_qr").value, metric(s, p, r, "r_full").value);
            EXPECT_GT(metric(s, p, r, "r_qr").value, metric(s, p, r, "r_tdma").value) << p;
        }
    }
    const auto& r01 = rules[0];
    EXPECT_LE(metric(s, 10, r01, "r_full").value - metric(s, 10, r01, "r_qr").value, 0.02);
}

TEST(MinRate, Reproducible) {
    auto cfg = config(ExperimentKind::MinRate, {10}, {DeltaRule::fixed(0.05)}, 1);
    cfg.seed = 77;
    expect_identical(run_min_rate(cfg), run_min_rate(cfg));
}

TEST(RateLoss, MonotoneAndBounded) {
    const std::vector<DeltaRule> rules = {DeltaRule::fixed(0.01), DeltaRule::fixed(0.02), DeltaRule::fixed(0.05),
                                          DeltaRule::fixed(0.1), DeltaRule::fixed(0.2)};
    const auto s = run_rate_loss(config(ExperimentKind::RateLoss, {10}, rules, 100'000));
    double prev = -1.0;
    for (const auto& r : rules) {
        const double loss = metric(s, 10, r, "rate_loss").value;
        EXPECT_GE(loss, prev);
        EXPECT_LE(loss, metric(s, 10, r, "rate_loss_bound").value);
        EXPECT_LE(metric(s, 10, r, "vle_bits_1").value, metric(s, 10, r, "vle_bound_1").value);
        EXPECT_LE(metric(s, 10, r, "vle_bits_2").value, metric(s, 10, r, "vle_bound_2").value);
        EXPECT_EQ(metric(s, 10, r, "t_bins").value, static_cast<double>(default_t_rate(r.value, 1.0)));
        prev = loss;
    }
}

TEST(RateLoss, DeltaToBeatTdma) {
    std::vector<DeltaRule> rules;
    for (int i = 5; i <= 25; ++i)
        rules.push_back(DeltaRule::fixed(i / 100.0));
    const auto s = run_rate_loss(config(ExperimentKind::RateLoss, {10}, rules, 100'000));
    const double tdma = metric(s, 10, rules[0], "r_tdma").value;
    double crossing = -1.0;
    for (std::size_t i = 1; i < rules.size(); ++i) {
        const double a = metric(s, 10, rules[i - 1], "r_qr").value - tdma;
        const double b = metric(s, 10, rules[i], "r_qr").value - tdma;
        if (a > 0 && b <= 0) {
            crossing = rules[i - 1].value + (rules[i].value - rules[i - 1].value) * a / (a - b);
            break;
        }
    }
    EXPECT_NEAR(crossing, 0.15, 0.03);
}

TEST(Outage, OrderingAndLowPower) {
    const std::vector<DeltaRule> rules = {DeltaRule::fixed(0.01), DeltaRule::fixed(0.2)};
    auto cfg = config(ExperimentKind::Outage, {-10, 0, 10, 20, 30}, rules, 1);
    cfg.min_outage_events = 2000;
    const auto s = run_outage(cfg);
    for (const auto& pt : s.points) {
        const double full = pt.metrics.at("out_full").value;
        EXPECT_GE(pt.metrics.at("out_q").value, full);
        EXPECT_NEAR(pt.metrics.at("out_q").value - full, pt.metrics.at("outage_loss").value, 1e-12);
        EXPECT_TRUE(pt.target_reached);
        EXPECT_GE(pt.metrics.at("out_full").value * static_cast<double>(pt.trials), 2000.0);
        EXPECT_GE(pt.metrics.at("out_q_rx1").value * static_cast<double>(pt.trials), 2000.0);
    }
    EXPECT_NEAR(metric(s, -10, rules[1], "out_q").value, metric(s, -10, rules[1], "out_full").value, 0.02);
    // fine bins track the full-CSI curve on a log scale (the gap itself is
    // strictly positive, so it is not a sampling-noise comparison)
    for (double p : {0.0, 10.0, 20.0, 30.0}) {
        const double full = metric(s, p, rules[0], "out_full").value;
        EXPECT_LE(std::log10(metric(s, p, rules[0], "out_q").value / full), 0.05) << p;
        EXPECT_GT(std::log10(metric(s, p, rules[1], "out_q").value / full),
                  std::log10(metric(s, p, rules[0], "out_q").value / full)) << p;
    }
    EXPECT_GT(metric(s, 30, rules[1], "outage_loss").value, metric(s, 30, rules[0], "outage_loss").value);
}

TEST(Outage, TrialCapFlagsPoint) {
    auto cfg = config(ExperimentKind::Outage, {30}, {DeltaRule::fixed(0.2)}, 1);
    cfg.min_outage_events = 1'000'000;
    cfg.trial_cap = 5000;
    const auto s = run_outage(cfg);
    EXPECT_FALSE(s.points[0].target_reached);
    EXPECT_EQ(s.points[0].trials, 5000u);
}

TEST(OutageLoss, ShapeInDeltaAndPower) {
    const std::vector<DeltaRule> rules = {DeltaRule::fixed(0.01), DeltaRule::fixed(0.05), DeltaRule::fixed(0.2)};
    const std::vector<double> p = {-10, 0, 10, 20, 30, 40};
    const auto s = run_outage_loss(config(ExperimentKind::OutageLoss, p, rules, 100'000));
    for (double x : p) {
        double prev = -1.0;
        for (const auto& r : rules) {
            const Stat& loss = metric(s, x, r, "outage_loss");
            EXPECT_GE(loss.value + 2 * loss.std_error, prev) << x;
            prev = loss.value;
            EXPECT_NEAR(metric(s, x, r, "sqrt_delta").value, std::sqrt(r.value), 1e-15);
        }
    }
    const auto& r = rules[2];
    EXPECT_LT(metric(s, -10, r, "outage_loss").value, 0.02);
    EXPECT_LT(metric(s, 40, r, "outage_loss").value, 0.02);
    EXPECT_GT(metric(s, 10, r, "outage_loss").value, metric(s, -10, r, "outage_loss").value);
    EXPECT_GT(metric(s, 10, r, "outage_loss").value, metric(s, 40, r, "outage_loss").value);
}

TEST(Feedback, MatchesAnalyticExpectation) {
    const std::vector<DeltaRule> rules = {DeltaRule::fixed(0.01), DeltaRule::fixed(0.05), DeltaRule::fixed(0.2)};
    const auto s = run_feedback_rate(config(ExperimentKind::FeedbackRate, {10}, rules, 200'000));
    for (const auto& r : rules) {
        const std::int64_t tr = default_t_rate(r.value, 1.0), to = default_t_outage(r.value, 1.0);
        const double lambda[2] = {1.0, 0.5};
        for (int k = 0; k < 2; ++k) {
            const std::string idx = std::to_string(k + 1);
            const Stat& vr = metric(s, 10, r, "vle_rate_" + idx);
            const Stat& vo = metric(s, 10, r, "vle_outage_" + idx);
            EXPECT_NEAR(vr.value, expected_vle(r.value, lambda[k], tr, Flavor::RateAdaptation), 4 * vr.std_error);
            EXPECT_NEAR(vo.value, expected_vle(r.value, lambda[k], to, Flavor::Outage), 4 * vo.std_error);
            EXPECT_LE(vr.value, metric(s, 10, r, "vle_bound_" + idx).value);
        }
        EXPECT_EQ(metric(s, 10, r, "fle_rate").value, fle_bits(tr, Flavor::RateAdaptation));
        EXPECT_EQ(metric(s, 10, r, "fle_outage").value, fle_bits(to, Flavor::Outage));
    }
}

TEST(Feedback, PolicyFlatThenRising) {
    const std::vector<DeltaRule> rules = {DeltaRule::capped_cube_root()};
    const auto s = run_feedback_rate(config(ExperimentKind::FeedbackRate, {0, 10, 20, 25, 30, 40}, rules, 50'000));
    // Delta stays at 0.2 until P^{-1/3} drops below it near 21 dB
    EXPECT_EQ(metric(s, 0, rules[0], "vle_rate_1").value, metric(s, 20, rules[0], "vle_rate_1").value);
    EXPECT_GT(metric(s, 25, rules[0], "vle_rate_1").value, metric(s, 20, rules[0], "vle_rate_1").value);
    EXPECT_GT(metric(s, 40, rules[0], "vle_rate_1").value, metric(s, 30, rules[0], "vle_rate_1").value);
}

TEST(Diversity, SlopesReported) {
    auto cfg = config(ExperimentKind::Diversity, {0, 10, 20, 22.5, 25, 27.5, 30},
                      {DeltaRule::fixed(0.2), DeltaRule::capped_cube_root()}, 1);
    cfg.min_outage_events = 1000;
    const auto s = run_diversity(cfg);
    ASSERT_EQ(s.slopes.size(), 7u);
    EXPECT_EQ(s.slopes[0].series, "full");
    EXPECT_EQ(s.slopes[0].window_lo_db, 20.0);
    EXPECT_EQ(s.slopes[0].points, 5u);
    EXPECT_NEAR(s.slopes[0].slope, 1.0, 0.15);
}

TEST(KUser, EqualRateSpreadAndTwoUserAgreement) {
    auto cfg = config(ExperimentKind::KUser, {10}, {DeltaRule::fixed(0.05), DeltaRule::fixed(0.2)}, 20'000);
    cfg.channel = ChannelParams::defaults(4);
    const auto s4 = run_k_user(cfg);
    for (const auto& pt : s4.points) {
        EXPECT_LE(pt.metrics.at("max_rate_spread").value, 10 * cfg.eps);
        EXPECT_GE(pt.metrics.at("rate_loss").value, 0.0);
        EXPECT_GE(pt.metrics.at("out_q").value, pt.metrics.at("out_full").value);
    }
    EXPECT_GT(metric(s4, 10, cfg.deltas[1], "rate_loss").value, metric(s4, 10, cfg.deltas[0], "rate_loss").value);

    // With equal variances the per-receiver bin counts coincide with the
    // two-receiver rules, so only the solver differs.
    cfg.channel.variances = {1.0, 1.0};
    cfg.trials = 100'000;
    const auto k2 = run_k_user(cfg);
    auto two = cfg;
    two.kind = ExperimentKind::RateLoss;
    const auto rl = run_rate_loss(two);
    two.kind = ExperimentKind::OutageLoss;
    const auto ol = run_outage_loss(two);
    for (const auto& r : cfg.deltas) {
        const Stat& a = metric(k2, 10, r, "rate_loss");
        const Stat& b = metric(rl, 10, r, "rate_loss");
        EXPECT_NEAR(a.value, b.value, 2 * std::hypot(a.std_error, b.std_error)) << r.value;
        const Stat& c = metric(k2, 10, r, "outage_loss");
        const Stat& d = metric(ol, 10, r, "outage_loss");
        EXPECT_NEAR(c.value, d.value, 2 * std::hypot(c.std_error, d.std_error)) << r.value;
    }
}

TEST(Determinism, WorkerCountIndependent) {
    auto cfg = config(ExperimentKind::Outage, {0, 15, 30}, {DeltaRule::fixed(0.1), DeltaRule::cube_root()}, 1);
    cfg.min_outage_events = 500;
    cfg.seed = 5;
    RunOptions one, many;
    many.workers = 4;
    expect_identical(run_outage(cfg, one), run_outage(cfg, many));

    auto k = config(ExperimentKind::KUser, {10}, {DeltaRule::fixed(0.1)}, 30'000);
    k.channel = ChannelParams::defaults(3);
    expect_identical(run_k_user(k, one), run_k_user(k, many));
}

TEST(Determinism, CommonRandomNumbersAcrossDeltas) {
    // out_full depends only on the channel draws, so it must be identical for every rule
    const auto s = run_outage(config(ExperimentKind::Outage, {10}, {DeltaRule::fixed(0.1), DeltaRule::fixed(0.2)},
                                     50'000));
    EXPECT_TRUE(same_bits(s.points[0].metrics.at("out_full").value, s.points[1].metrics.at("out_full").value));
}
