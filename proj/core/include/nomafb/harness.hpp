// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo experiment drivers.
//
// Every sweep point at a given power reuses the same channel draws: trial t of
// any point is keyed by (seed, t). Quantizer variants at one power are scored on
// the same realisations, which keeps their differences low-variance.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nomafb/channel.hpp"

namespace nomafb {

enum class ExperimentKind { MinRate, RateLoss, Outage, OutageLoss, FeedbackRate, Diversity, KUser };

/// Subcommand name: minrate, rateloss, outage, outageloss, feedback, diversity, kuser.
std::string_view to_string(ExperimentKind kind) noexcept;
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) noexcept;

enum class DeltaPolicy {
    Fixed,
    /// P^{-1/3}
    CubeRoot,
    /// min{0.2, P^{-1/3}}
    CappedCubeRoot,
};

struct DeltaRule {
    DeltaPolicy policy = DeltaPolicy::Fixed;
    double value = 0.0;

    static DeltaRule fixed(double delta) noexcept { return {DeltaPolicy::Fixed, delta}; }
    static DeltaRule cube_root() noexcept { return {DeltaPolicy::CubeRoot, 0.0}; }
    static DeltaRule capped_cube_root() noexcept { return {DeltaPolicy::CappedCubeRoot, 0.0}; }

    /// Bin size at linear power `p`.
    double at(double p) const noexcept;
    /// "0.01", "pcube" or "min02-pcube".
    std::string label() const;
    static std::optional<DeltaRule> parse_policy(std::string_view name) noexcept;

    friend bool operator==(const DeltaRule&, const DeltaRule&) = default;
};

/// Thrown for invalid experiment settings; `field` names the offending setting
/// using the command-line spelling (e.g. "delta", "p-db").
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::MinRate;
    ChannelParams channel = ChannelParams::defaults(2);
    std::vector<double> p_db;
    std::vector<DeltaRule> deltas;
    /// Outage target rate in bits/s/Hz.
    double r_th = 1.0;
    /// Bisection accuracy for the K-receiver solver.
    double eps = 1e-4;
    /// Trials per power point when adaptive stopping is off.
    std::uint64_t trials = 100'000;
    /// Adaptive stopping for outage experiments: run until every reported outage
    /// curve has at least this many events. Zero disables it.
    std::uint64_t min_outage_events = 0;
    std::uint64_t trial_cap = 1'000'000'000;
    std::uint64_t seed = 0;
    /// Width of the high-power window used for diversity slopes.
    double window_db = 10.0;

    /// Throws ConfigError.
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct Stat {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t samples = 0;
};

struct SweepPoint {
    double p_db = 0.0;
    DeltaRule rule;
    /// Bin size in effect at this power.
    double delta = 0.0;
    std::uint64_t trials = 0;
    /// False when adaptive stopping hit the trial cap first.
    bool target_reached = true;
    std::map<std::string, Stat> metrics;
};

struct SlopeEstimate {
    /// "full" or the quantizer label
    std::string series;
    std::string metric;
    double window_lo_db = 0.0;
    double window_hi_db = 0.0;
    double slope = 0.0;
    double std_error = 0.0;
    std::size_t points = 0;
};

struct RunStats {
    ExperimentKind kind = ExperimentKind::MinRate;
    std::uint64_t seed = 0;
    std::vector<SweepPoint> points;
    std::vector<SlopeEstimate> slopes;
};

struct RunOptions {
    unsigned workers = 1;
    std::function<void(const std::string&)> progress;
};

double db_to_linear(double db) noexcept;

RunStats run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Full-CSI, rate-quantized and TDMA minimum rates versus power.
RunStats run_min_rate(const ExperimentConfig& cfg, const RunOptions& options = {});
/// Rate loss, its analytic bound and measured VLE feedback per bin size.
RunStats run_rate_loss(const ExperimentConfig& cfg, const RunOptions& options = {});
/// Full-CSI, outage-quantized and TDMA outage probabilities.
RunStats run_outage(const ExperimentConfig& cfg, const RunOptions& options = {});
/// Outage loss with sqrt(delta) and the minimum VLE rate as alternative abscissae.
RunStats run_outage_loss(const ExperimentConfig& cfg, const RunOptions& options = {});
/// Measured VLE bits per receiver and the fixed-length alternative.
RunStats run_feedback_rate(const ExperimentConfig& cfg, const RunOptions& options = {});
/// Outage curves plus high-power slopes of each of them.
RunStats run_diversity(const ExperimentConfig& cfg, const RunOptions& options = {});
/// K-receiver rate and outage losses using the bisection solver.
RunStats run_k_user(const ExperimentConfig& cfg, const RunOptions& options = {});

struct CurvePoint {
    double p_db = 0.0;
    double probability = 0.0;
};

struct DiversityFit {
    double slope = 0.0;
    double std_error = 0.0;
    std::size_t points = 0;
};

/// Least-squares slope of -log10(probability) against log10(P) over points with
/// lo_db <= p_db <= hi_db. Needs at least three points, all with probability > 0.
DiversityFit fit_diversity(std::span<const CurvePoint> curve, double lo_db, double hi_db);

double estimate_diversity(std::span<const CurvePoint> curve, double lo_db, double hi_db);

} // namespace nomafb
