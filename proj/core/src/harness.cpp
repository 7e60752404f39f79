// SPDX-License-Identifier: Apache-2.0

#include "nomafb/harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>

#include "nomafb/alloc.hpp"
#include "nomafb/evaluator.hpp"
#include "nomafb/montecarlo.hpp"
#include "nomafb/quantizer.hpp"

namespace nomafb {

namespace {

constexpr std::array<std::pair<ExperimentKind, std::string_view>, 7> kKindNames{{
    {ExperimentKind::MinRate, "minrate"},
    {ExperimentKind::RateLoss, "rateloss"},
    {ExperimentKind::Outage, "outage"},
    {ExperimentKind::OutageLoss, "outageloss"},
    {ExperimentKind::FeedbackRate, "feedback"},
    {ExperimentKind::Diversity, "diversity"},
    {ExperimentKind::KUser, "kuser"},
}};

std::string shortest(double value) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

bool is_two_user(ExperimentKind kind) {
    return kind != ExperimentKind::KUser && kind != ExperimentKind::FeedbackRate;
}

bool is_outage_kind(ExperimentKind kind) {
    return kind == ExperimentKind::Outage || kind == ExperimentKind::OutageLoss ||
           kind == ExperimentKind::Diversity || kind == ExperimentKind::KUser;
}

// The default bin-count rules need delta < 1; the cube-root policy reaches
// delta >= 1 at P <= 0 dB, where a single bin is used.
std::int64_t bins_rate(double delta, double lambda) {
    return delta < 1.0 ? default_t_rate(delta, lambda) : 1;
}

std::int64_t bins_outage(double delta, double lambda) {
    return delta < 1.0 ? default_t_outage(delta, lambda) : 1;
}

Stat from_moments(const Moments& m) {
    return {m.mean(), m.standard_error(), m.count};
}

Stat constant(double value, std::uint64_t samples) {
    return {value, 0.0, samples};
}

void require_kind(const ExperimentConfig& cfg, ExperimentKind kind) {
    if (cfg.kind != kind)
        throw ConfigError("kind", std::string("harness: expected a ") + std::string(to_string(kind)) +
                                      " configuration, got " + std::string(to_string(cfg.kind)));
    cfg.validate();
}

void report(const RunOptions& options, const std::string& message) {
    if (options.progress)
        options.progress(message);
}

RunControl control_for(const ExperimentConfig& cfg, StopRule stop = {}) {
    RunControl control;
    control.trials = cfg.trials;
    control.trial_cap = cfg.trial_cap;
    if (cfg.min_outage_events > 0)
        control.stop = std::move(stop);
    return control;
}

SweepPoint make_point(double p_db, const DeltaRule& rule, const MonteCarloResult& mc) {
    SweepPoint point;
    point.p_db = p_db;
    point.rule = rule;
    point.delta = rule.at(db_to_linear(p_db));
    point.trials = mc.trials;
    point.target_reached = mc.stop_satisfied;
    return point;
}

// ---------------------------------------------------------------------------
// Rate-adaptation pipeline (two receivers).

namespace rate_slots {
constexpr std::size_t kFull = 0;
constexpr std::size_t kTdma = 1;
constexpr std::size_t kGroup = 2;
constexpr std::size_t kAdapted = 0;
constexpr std::size_t kLoss = 1;
constexpr std::size_t kVle1 = 2;
constexpr std::size_t kVle2 = 3;
constexpr std::size_t kPerRule = 4;
} // namespace rate_slots

struct RateGroup {
    double p_db;
    std::vector<QuantizerConfig> quantizers;
    MonteCarloResult mc;
};

std::vector<RateGroup> run_rate_pipeline(const ExperimentConfig& cfg, const RunOptions& options) {
    using namespace rate_slots;
    const double lambda1 = cfg.channel.variances[0];
    std::vector<RateGroup> groups;
    for (double p_db : cfg.p_db) {
        const double p = db_to_linear(p_db);
        RateGroup group{p_db, {}, {}};
        for (const DeltaRule& rule : cfg.deltas) {
            const double delta = rule.at(p);
            group.quantizers.push_back({delta, bins_rate(delta, lambda1), Flavor::RateAdaptation});
        }
        const auto quantizers = group.quantizers;
        const auto variances = cfg.channel.variances;
        const OutageConfig outage = OutageConfig::from_threshold(cfg.r_th);
        const std::uint64_t seed = cfg.seed;
        BlockKernel kernel = [=](std::uint64_t first, std::uint64_t last, std::span<Moments> slots) {
            std::array<double, 2> h{};
            for (std::uint64_t t = first; t < last; ++t) {
                sample_gains(variances, {seed, t}, h);
                slots[kFull].add(max_min_rate_two_user(h[0], h[1], p));
                slots[kTdma].add(tdma_min_rate(h, p));
                for (std::size_t j = 0; j < quantizers.size(); ++j) {
                    const TrialOutcome out = evaluate_trial(h[0], h[1], p, quantizers[j], outage);
                    Moments* s = &slots[kGroup + j * kPerRule];
                    s[kAdapted].add(out.r_adapted_min);
                    s[kLoss].add(out.rate_loss);
                    s[kVle1].add(out.feedback_bits[0]);
                    s[kVle2].add(out.feedback_bits[1]);
                }
            }
        };
        group.mc = run_monte_carlo(kGroup + kPerRule * quantizers.size(), kernel, control_for(cfg), options.workers);
        report(options, std::string(to_string(cfg.kind)) + ": P = " + shortest(p_db) + " dB, " +
                            std::to_string(group.mc.trials) + " trials");
        groups.push_back(std::move(group));
    }
    return groups;
}

// ---------------------------------------------------------------------------
// Outage pipeline (two receivers).

namespace outage_slots {
constexpr std::size_t kFull = 0;
constexpr std::size_t kTdma = 1;
constexpr std::size_t kGroup = 2;
constexpr std::size_t kOutQ = 0;
constexpr std::size_t kRx1 = 1;
constexpr std::size_t kRx2 = 2;
constexpr std::size_t kLossEvent = 3;
constexpr std::size_t kVle1 = 4;
constexpr std::size_t kVle2 = 5;
constexpr std::size_t kPerRule = 6;
} // namespace outage_slots

struct OutageGroup {
    double p_db;
    std::vector<QuantizerConfig> quantizers;
    MonteCarloResult mc;
};

// Adaptive stopping waits until the full-CSI curve and every quantized curve
// (min rate and each receiver) have reached the event target.
StopRule outage_stop_rule(std::size_t rules, std::uint64_t target) {
    using namespace outage_slots;
    return [=](std::span<const Moments> totals, std::uint64_t) {
        const auto reached = [&](std::size_t slot) { return totals[slot].sum >= static_cast<double>(target); };
        if (!reached(kFull))
            return false;
        for (std::size_t j = 0; j < rules; ++j) {
            const std::size_t base = kGroup + j * kPerRule;
            if (!reached(base + kOutQ) || !reached(base + kRx1) || !reached(base + kRx2))
                return false;
        }
        return true;
    };
}

std::vector<OutageGroup> run_outage_pipeline(const ExperimentConfig& cfg, const RunOptions& options) {
    using namespace outage_slots;
    const double lambda1 = cfg.channel.variances[0];
    std::vector<OutageGroup> groups;
    for (double p_db : cfg.p_db) {
        const double p = db_to_linear(p_db);
        OutageGroup group{p_db, {}, {}};
        for (const DeltaRule& rule : cfg.deltas) {
            const double delta = rule.at(p);
            group.quantizers.push_back({delta, bins_outage(delta, lambda1), Flavor::Outage});
        }
        const auto quantizers = group.quantizers;
        const auto variances = cfg.channel.variances;
        const OutageConfig outage = OutageConfig::from_threshold(cfg.r_th);
        const std::uint64_t seed = cfg.seed;
        BlockKernel kernel = [=](std::uint64_t first, std::uint64_t last, std::span<Moments> slots) {
            std::array<double, 2> h{};
            for (std::uint64_t t = first; t < last; ++t) {
                sample_gains(variances, {seed, t}, h);
                const bool full = max_min_rate_two_user(h[0], h[1], p) < outage.r_th;
                slots[kFull].add(full ? 1.0 : 0.0);
                slots[kTdma].add(tdma_min_rate(h, p) < outage.r_th ? 1.0 : 0.0);
                for (std::size_t j = 0; j < quantizers.size(); ++j) {
                    const TrialOutcome out = evaluate_trial(h[0], h[1], p, quantizers[j], outage);
                    Moments* s = &slots[kGroup + j * kPerRule];
                    s[kOutQ].add(out.outage_q ? 1.0 : 0.0);
                    s[kRx1].add(out.r_actual.first < outage.r_th ? 1.0 : 0.0);
                    s[kRx2].add(out.r_actual.second < outage.r_th ? 1.0 : 0.0);
                    s[kLossEvent].add(out.outage_q && !full ? 1.0 : 0.0);
                    s[kVle1].add(out.feedback_bits[0]);
                    s[kVle2].add(out.feedback_bits[1]);
                }
            }
        };
        group.mc = run_monte_carlo(kGroup + kPerRule * quantizers.size(), kernel,
                                   control_for(cfg, outage_stop_rule(quantizers.size(), cfg.min_outage_events)),
                                   options.workers);
        std::string message = std::string(to_string(cfg.kind)) + ": P = " + shortest(p_db) + " dB, " +
                              std::to_string(group.mc.trials) + " trials";
        if (!group.mc.stop_satisfied)
            message += " (trial cap reached before the outage-event target)";
        report(options, message);
        groups.push_back(std::move(group));
    }
    return groups;
}

void add_outage_curves(SweepPoint& point, const MonteCarloResult& mc, std::size_t rule) {
    using namespace outage_slots;
    const std::size_t base = kGroup + rule * kPerRule;
    point.metrics["out_full"] = from_moments(mc.totals[kFull]);
    point.metrics["out_q"] = from_moments(mc.totals[base + kOutQ]);
    point.metrics["out_q_rx1"] = from_moments(mc.totals[base + kRx1]);
    point.metrics["out_q_rx2"] = from_moments(mc.totals[base + kRx2]);
    point.metrics["out_tdma"] = from_moments(mc.totals[kTdma]);
    point.metrics["outage_loss"] = from_moments(mc.totals[base + kLossEvent]);
}

} // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
    for (const auto& [k, name] : kKindNames)
        if (k == kind)
            return name;
    return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) noexcept {
    for (const auto& [k, n] : kKindNames)
        if (n == name)
            return k;
    return std::nullopt;
}

double DeltaRule::at(double p) const noexcept {
    switch (policy) {
    case DeltaPolicy::Fixed:
        return value;
    case DeltaPolicy::CubeRoot:
        return std::cbrt(1.0 / p);
    case DeltaPolicy::CappedCubeRoot:
        return std::min(0.2, std::cbrt(1.0 / p));
    }
    return value;
}

std::string DeltaRule::label() const {
    switch (policy) {
    case DeltaPolicy::Fixed:
        return shortest(value);
    case DeltaPolicy::CubeRoot:
        return "pcube";
    case DeltaPolicy::CappedCubeRoot:
        return "min02-pcube";
    }
    return "?";
}

std::optional<DeltaRule> DeltaRule::parse_policy(std::string_view name) noexcept {
    if (name == "pcube")
        return cube_root();
    if (name == "min02-pcube")
        return capped_cube_root();
    return std::nullopt;
}

double db_to_linear(double db) noexcept {
    return std::pow(10.0, db / 10.0);
}

void ExperimentConfig::validate() const {
    try {
        channel.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("lambda", e.what());
    }
    if (is_two_user(kind)) {
        if (channel.size() != 2)
            throw ConfigError("k", "config: this experiment needs exactly two receivers");
        if (channel.variances[0] < channel.variances[1])
            throw ConfigError("lambda", "config: receiver 1 must have the larger variance (lambda1 >= lambda2)");
    }
    if (kind == ExperimentKind::KUser && channel.size() < 2)
        throw ConfigError("k", "config: the K-receiver experiment needs at least two receivers");

    if (p_db.empty())
        throw ConfigError("p-db", "config: the power sweep is empty");
    for (double v : p_db)
        if (!std::isfinite(v))
            throw ConfigError("p-db", "config: power values must be finite");

    if (deltas.empty())
        throw ConfigError("delta", "config: no bin size or bin-size policy given");
    for (const DeltaRule& rule : deltas) {
        if (rule.policy == DeltaPolicy::Fixed && !(rule.value > 0.0 && rule.value < 1.0))
            throw ConfigError("delta", "config: bin size " + shortest(rule.value) +
                                           " is outside (0, 1), where the default bin-count rules apply");
    }

    if (!(r_th > 0.0) || !std::isfinite(r_th))
        throw ConfigError("r-th", "config: target rate must be positive");
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw ConfigError("eps", "config: bisection accuracy must be positive");
    if (trials < 1)
        throw ConfigError("trials", "config: at least one trial is required");
    if (trial_cap < 1)
        throw ConfigError("trial-cap", "config: trial cap must be at least 1");
    if (min_outage_events > 0 && !is_outage_kind(kind))
        throw ConfigError("min-outage-events", "config: adaptive stopping applies to outage experiments only");
    if (!(window_db > 0.0) || !std::isfinite(window_db))
        throw ConfigError("window-db", "config: diversity window must be positive");

    if (kind == ExperimentKind::Diversity) {
        const double hi = *std::max_element(p_db.begin(), p_db.end());
        const auto in_window = std::count_if(p_db.begin(), p_db.end(),
                                             [&](double v) { return v >= hi - window_db && v <= hi; });
        if (in_window < 4)
            throw ConfigError("p-db", "config: the diversity window needs at least four power points");
    }
}

RunStats run_min_rate(const ExperimentConfig& cfg, const RunOptions& options) {
    using namespace rate_slots;
    require_kind(cfg, ExperimentKind::MinRate);
    RunStats stats{cfg.kind, cfg.seed, {}, {}};
    for (const RateGroup& g : run_rate_pipeline(cfg, options)) {
        for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
            SweepPoint point = make_point(g.p_db, cfg.deltas[j], g.mc);
            const std::size_t base = kGroup + j * kPerRule;
            point.metrics["r_full"] = from_moments(g.mc.totals[kFull]);
            point.metrics["r_qr"] = from_moments(g.mc.totals[base + kAdapted]);
            point.metrics["r_tdma"] = from_moments(g.mc.totals[kTdma]);
            stats.points.push_back(std::move(point));
        }
    }
    return stats;
}

RunStats run_rate_loss(const ExperimentConfig& cfg, const RunOptions& options) {
    using namespace rate_slots;
    require_kind(cfg, ExperimentKind::RateLoss);
    const double lambda1 = cfg.channel.variances[0];
    const double lambda2 = cfg.channel.variances[1];
    RunStats stats{cfg.kind, cfg.seed, {}, {}};
    for (const RateGroup& g : run_rate_pipeline(cfg, options)) {
        const double p = db_to_linear(g.p_db);
        for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
            SweepPoint point = make_point(g.p_db, cfg.deltas[j], g.mc);
            const QuantizerConfig& q = g.quantizers[j];
            const std::size_t base = kGroup + j * kPerRule;
            const std::uint64_t n = g.mc.trials;
            const Stat vle1 = from_moments(g.mc.totals[base + kVle1]);
            const Stat vle2 = from_moments(g.mc.totals[base + kVle2]);
            point.metrics["r_full"] = from_moments(g.mc.totals[kFull]);
            point.metrics["r_qr"] = from_moments(g.mc.totals[base + kAdapted]);
            point.metrics["r_tdma"] = from_moments(g.mc.totals[kTdma]);
            point.metrics["rate_loss"] = from_moments(g.mc.totals[base + kLoss]);
            point.metrics["rate_loss_bound"] = constant(rate_loss_bound(p, q.delta, q.t, lambda1, lambda2), n);
            point.metrics["vle_bits_1"] = vle1;
            point.metrics["vle_bits_2"] = vle2;
            point.metrics["vle_bits_min"] = vle1.value <= vle2.value ? vle1 : vle2;
            point.metrics["vle_bound_1"] = constant(vle_rate_bound(q.delta, lambda1), n);
            point.metrics["vle_bound_2"] = constant(vle_rate_bound(q.delta, lambda2), n);
            point.metrics["fle_bits"] = constant(fle_bits(q.t, Flavor::RateAdaptation), n);
            point.metrics["t_bins"] = constant(static_cast<double>(q.t), n);
            stats.points.push_back(std::move(point));
        }
    }
    return stats;
}

RunStats run_outage(const ExperimentConfig& cfg, const RunOptions& options) {
    require_kind(cfg, ExperimentKind::Outage);
    RunStats stats{cfg.kind, cfg.seed, {}, {}};
    for (const OutageGroup& g : run_outage_pipeline(cfg, options)) {
        for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
            SweepPoint point = make_point(g.p_db, cfg.deltas[j], g.mc);
            add_outage_curves(point, g.mc, j);
            stats.points.push_back(std::move(point));
        }
    }
    return stats;
}

RunStats run_outage_loss(const ExperimentConfig& cfg, const RunOptions& options) {
    using namespace outage_slots;
    require_kind(cfg, ExperimentKind::OutageLoss);
    RunStats stats{cfg.kind, cfg.seed, {}, {}};
    for (const OutageGroup& g : run_outage_pipeline(cfg, options)) {
        for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
            SweepPoint point = make_point(g.p_db, cfg.deltas[j], g.mc);
            const QuantizerConfig& q = g.quantizers[j];
            const std::size_t base = kGroup + j * kPerRule;
            const std::uint64_t n = g.mc.trials;
            const Stat vle1 = from_moments(g.mc.totals[base + kVle1]);
            const Stat vle2 = from_moments(g.mc.totals[base + kVle2]);
            point.metrics["outage_loss"] = from_moments(g.mc.totals[base + kLossEvent]);
            point.metrics["out_full"] = from_moments(g.mc.totals[kFull]);
            point.metrics["out_q"] = from_moments(g.mc.totals[base + kOutQ]);
            point.metrics["sqrt_delta"] = constant(std::sqrt(q.delta), n);
            point.metrics["vle_bits_1"] = vle1;
            point.metrics["vle_bits_2"] = vle2;
            point.metrics["vle_bits_min"] = vle1.value <= vle2.value ? vle1 : vle2;
            point.metrics["fle_bits"] = constant(fle_bits(q.t, Flavor::Outage), n);
            point.metrics["t_bins"] = constant(static_cast<double>(q.t), n);
            stats.points.push_back(std::move(point));
        }
    }
    return stats;
}

RunStats run_feedback_rate(const ExperimentConfig& cfg, const RunOptions& options) {
    require_kind(cfg, ExperimentKind::FeedbackRate);
    const std::size_t users = cfg.channel.size();
    const double lambda1 = cfg.channel.variances[0];
    RunStats stats{cfg.kind, cfg.seed, {}, {}};
    for (double p_db : cfg.p_db) {
        const double p = db_to_linear(p_db);
        std::vector<QuantizerConfig> rate_q, outage_q;
        for (const DeltaRule& rule : cfg.deltas) {
            const double delta = rule.at(p);
            rate_q.push_back({delta, bins_rate(delta, lambda1), Flavor::RateAdaptation});
            outage_q.push_back({delta, bins_outage(delta, lambda1), Flavor::Outage});
        }
        const auto variances = cfg.channel.variances;
        const std::uint64_t seed = cfg.seed;
        const std::size_t per_rule = 2 * users;
        BlockKernel kernel = [=](std::uint64_t first, std::uint64_t last, std::span<Moments> slots) {
            std::vector<double> h(users);
            for (std::uint64_t t = first; t < last; ++t) {
                sample_gains(variances, {seed, t}, h);
                for (std::size_t j = 0; j < rate_q.size(); ++j) {
                    Moments* s = &slots[j * per_rule];
                    for (std::size_t k = 0; k < users; ++k) {
                        s[k].add(quantize_rate(h[k], rate_q[j]).bit_length);
                        s[users + k].add(quantize_outage(h[k], outage_q[j]).bit_length);
                    }
                }
            }
        };
        const MonteCarloResult mc =
            run_monte_carlo(per_rule * cfg.deltas.size(), kernel, control_for(cfg), options.workers);
        report(options, "feedback: P = " + shortest(p_db) + " dB, " + std::to_string(mc.trials) + " trials");

        for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
            SweepPoint point = make_point(p_db, cfg.deltas[j], mc);
            const std::size_t base = j * per_rule;
            Stat min_rate{std::numeric_limits<double>::infinity(), 0.0, 0};
            Stat min_outage = min_rate;
            for (std::size_t k = 0; k < users; ++k) {
                const std::string idx = std::to_string(k + 1);
                const Stat r = from_moments(mc.totals[base + k]);
                const Stat o = from_moments(mc.totals[base + users + k]);
                point.metrics["vle_rate_" + idx] = r;
                point.metrics["vle_outage_" + idx] = o;
                point.metrics["vle_bound_" + idx] =
                    constant(vle_rate_bound(rate_q[j].delta, cfg.channel.variances[k]), mc.trials);
                if (r.value < min_rate.value)
                    min_rate = r;
                if (o.value < min_outage.value)
                    min_outage = o;
            }
            point.metrics["vle_rate_min"] = min_rate;
            point.metrics["vle_outage_min"] = min_outage;
            point.metrics["t_rate"] = constant(static_cast<double>(rate_q[j].t), mc.trials);
            point.metrics["t_outage"] = constant(static_cast<double>(outage_q[j].t), mc.trials);
            point.metrics["fle_rate"] = constant(fle_bits(rate_q[j].t, Flavor::RateAdaptation), mc.trials);
            point.metrics["fle_outage"] = constant(fle_bits(outage_q[j].t, Flavor::Outage), mc.trials);
            stats.points.push_back(std::move(point));
        }
    }
    return stats;
}

RunStats run_diversity(const ExperimentConfig& cfg, const RunOptions& options) {
    require_kind(cfg, ExperimentKind::Diversity);
    RunStats stats{cfg.kind, cfg.seed, {}, {}};
    const auto groups = run_outage_pipeline(cfg, options);
    for (const OutageGroup& g : groups) {
        for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
            SweepPoint point = make_point(g.p_db, cfg.deltas[j], g.mc);
            add_outage_curves(point, g.mc, j);
            stats.points.push_back(std::move(point));
        }
    }

    const double hi = *std::max_element(cfg.p_db.begin(), cfg.p_db.end());
    const double lo = hi - cfg.window_db;
    auto fit_series = [&](const std::string& series, const std::string& metric, std::size_t rule) {
        std::vector<CurvePoint> curve;
        for (const SweepPoint& point : stats.points)
            if (point.rule == cfg.deltas[rule])
                curve.push_back({point.p_db, point.metrics.at(metric).value});
        try {
            const DiversityFit fit = fit_diversity(curve, lo, hi);
            stats.slopes.push_back({series, "slope_" + metric, lo, hi, fit.slope, fit.std_error, fit.points});
        } catch (const std::invalid_argument& e) {
            report(options, "diversity: no slope for " + series + "/" + metric + ": " + e.what());
        }
    };
    fit_series("full", "out_full", 0);
    for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
        const std::string series = cfg.deltas[j].label();
        for (const char* metric : {"out_q", "out_q_rx1", "out_q_rx2"})
            fit_series(series, metric, j);
    }
    return stats;
}

RunStats run_k_user(const ExperimentConfig& cfg, const RunOptions& options) {
    require_kind(cfg, ExperimentKind::KUser);
    const std::size_t users = cfg.channel.size();
    // group: full-CSI rate, full-CSI outage, spread of full-CSI rates (max over trials)
    constexpr std::size_t kFull = 0, kOutFull = 1, kSpread = 2, kGroup = 3;
    // per rule: rate loss, quantized outage, loss event, then VLE bits per receiver for both quantizers
    constexpr std::size_t kLoss = 0, kOutQ = 1, kLossEvent = 2, kVle = 3;
    const std::size_t per_rule = kVle + 2 * users;

    RunStats stats{cfg.kind, cfg.seed, {}, {}};
    for (double p_db : cfg.p_db) {
        const double p = db_to_linear(p_db);
        std::vector<std::vector<QuantizerConfig>> rate_q(cfg.deltas.size()), outage_q(cfg.deltas.size());
        for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
            const double delta = cfg.deltas[j].at(p);
            // per-receiver bin counts from each receiver's own variance
            for (std::size_t k = 0; k < users; ++k) {
                const double lambda = cfg.channel.variances[k];
                rate_q[j].push_back({delta, bins_rate(delta, lambda), Flavor::RateAdaptation});
                outage_q[j].push_back({delta, bins_outage(delta, lambda), Flavor::Outage});
            }
        }
        const auto variances = cfg.channel.variances;
        const std::uint64_t seed = cfg.seed;
        const double eps = cfg.eps;
        const double r_th = cfg.r_th;
        BlockKernel kernel = [=](std::uint64_t first, std::uint64_t last, std::span<Moments> slots) {
            std::vector<double> h(users), q(users);
            std::vector<double> sorted_alpha(users);
            for (std::uint64_t t = first; t < last; ++t) {
                sample_gains(variances, {seed, t}, h);
                const SolverResult full = solve_max_min_k(h, p, eps);
                const bool out_full = full.r_max < r_th;
                slots[kFull].add(full.r_max);
                slots[kOutFull].add(out_full ? 1.0 : 0.0);

                double lo_rate = std::numeric_limits<double>::infinity();
                double hi_rate = -lo_rate;
                double stronger = 0.0;
                for (std::size_t pos = 0; pos < users; ++pos) {
                    const std::size_t k = full.allocation.order[pos];
                    const double a = full.allocation.alphas[k];
                    const double r = std::log2(1.0 + a / (stronger + 1.0 / (p * h[k])));
                    stronger += a;
                    lo_rate = std::min(lo_rate, r);
                    hi_rate = std::max(hi_rate, r);
                }
                slots[kSpread].add(hi_rate - lo_rate);

                for (std::size_t j = 0; j < rate_q.size(); ++j) {
                    Moments* s = &slots[kGroup + j * per_rule];

                    bool any_zero = false;
                    for (std::size_t k = 0; k < users; ++k) {
                        const FeedbackWord w = quantize_rate(h[k], rate_q[j][k]);
                        q[k] = w.reconstructed;
                        any_zero = any_zero || w.level == 0;
                        s[kVle + k].add(w.bit_length);
                    }
                    const double r_q = any_zero ? 0.0 : solve_max_min_k(q, p, eps).r_max;
                    s[kLoss].add(full.r_max - r_q);

                    for (std::size_t k = 0; k < users; ++k) {
                        const FeedbackWord w = quantize_outage(h[k], outage_q[j][k]);
                        q[k] = w.reconstructed;
                        s[kVle + users + k].add(w.bit_length);
                    }
                    const SolverResult quant = solve_max_min_k(q, p, eps);
                    double worst = std::numeric_limits<double>::infinity();
                    double above = 0.0;
                    for (std::size_t pos = 0; pos < users; ++pos) {
                        const std::size_t k = quant.allocation.order[pos];
                        const double a = quant.allocation.alphas[k];
                        worst = std::min(worst, std::log2(1.0 + a / (above + 1.0 / (p * h[k]))));
                        above += a;
                    }
                    const bool out_q = worst < r_th;
                    s[kOutQ].add(out_q ? 1.0 : 0.0);
                    s[kLossEvent].add(out_q && !out_full ? 1.0 : 0.0);
                }
            }
        };
        StopRule stop = [=](std::span<const Moments> totals, std::uint64_t) {
            if (totals[kOutFull].sum < static_cast<double>(cfg.min_outage_events))
                return false;
            for (std::size_t j = 0; j < rate_q.size(); ++j)
                if (totals[kGroup + j * per_rule + kOutQ].sum < static_cast<double>(cfg.min_outage_events))
                    return false;
            return true;
        };
        const MonteCarloResult mc =
            run_monte_carlo(kGroup + per_rule * cfg.deltas.size(), kernel, control_for(cfg, stop), options.workers);
        report(options, "kuser: P = " + shortest(p_db) + " dB, " + std::to_string(mc.trials) + " trials");

        for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
            SweepPoint point = make_point(p_db, cfg.deltas[j], mc);
            const std::size_t base = kGroup + j * per_rule;
            point.metrics["r_full"] = from_moments(mc.totals[kFull]);
            point.metrics["out_full"] = from_moments(mc.totals[kOutFull]);
            point.metrics["max_rate_spread"] = constant(mc.totals[kSpread].max, mc.trials);
            point.metrics["rate_loss"] = from_moments(mc.totals[base + kLoss]);
            point.metrics["out_q"] = from_moments(mc.totals[base + kOutQ]);
            point.metrics["outage_loss"] = from_moments(mc.totals[base + kLossEvent]);
            point.metrics["sqrt_delta"] = constant(std::sqrt(point.delta), mc.trials);
            Stat min_rate{std::numeric_limits<double>::infinity(), 0.0, 0};
            Stat min_outage = min_rate;
            for (std::size_t k = 0; k < users; ++k) {
                const Stat r = from_moments(mc.totals[base + kVle + k]);
                const Stat o = from_moments(mc.totals[base + kVle + users + k]);
                point.metrics["vle_rate_" + std::to_string(k + 1)] = r;
                point.metrics["vle_outage_" + std::to_string(k + 1)] = o;
                if (r.value < min_rate.value)
                    min_rate = r;
                if (o.value < min_outage.value)
                    min_outage = o;
            }
            point.metrics["vle_rate_min"] = min_rate;
            point.metrics["vle_outage_min"] = min_outage;
            stats.points.push_back(std::move(point));
        }
    }
    return stats;
}

RunStats run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
    switch (cfg.kind) {
    case ExperimentKind::MinRate:
        return run_min_rate(cfg, options);
    case ExperimentKind::RateLoss:
        return run_rate_loss(cfg, options);
    case ExperimentKind::Outage:
        return run_outage(cfg, options);
    case ExperimentKind::OutageLoss:
        return run_outage_loss(cfg, options);
    case ExperimentKind::FeedbackRate:
        return run_feedback_rate(cfg, options);
    case ExperimentKind::Diversity:
        return run_diversity(cfg, options);
    case ExperimentKind::KUser:
        return run_k_user(cfg, options);
    }
    throw ConfigError("kind", "harness: unknown experiment kind");
}

DiversityFit fit_diversity(std::span<const CurvePoint> curve, double lo_db, double hi_db) {
    std::vector<std::pair<double, double>> xy;
    for (const CurvePoint& c : curve) {
        if (c.p_db < lo_db || c.p_db > hi_db)
            continue;
        if (!(c.probability > 0.0))
            throw std::invalid_argument("diversity: zero outage probability at " + shortest(c.p_db) +
                                        " dB (too few events)");
        xy.emplace_back(c.p_db / 10.0, -std::log10(c.probability));
    }
    if (xy.size() < 3)
        throw std::invalid_argument("diversity: fewer than three points in the window");
    const auto n = static_cast<double>(xy.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : xy) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : xy) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (!(sxx > 0.0))
        throw std::invalid_argument("diversity: window points share one power value");
    DiversityFit fit;
    fit.slope = sxy / sxx;
    fit.points = xy.size();
    if (xy.size() > 2) {
        double ssr = 0.0;
        for (const auto& [x, y] : xy) {
            const double e = y - my - fit.slope * (x - mx);
            ssr += e * e;
        }
        fit.std_error = std::sqrt(ssr / (n - 2.0) / sxx);
    }
    return fit;
}

double estimate_diversity(std::span<const CurvePoint> curve, double lo_db, double hi_db) {
    return fit_diversity(curve, lo_db, hi_db).slope;
}

} // namespace nomafb
