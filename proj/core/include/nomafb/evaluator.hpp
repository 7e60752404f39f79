// SPDX-License-Identifier: Apache-2.0
//
// One channel realisation of the two-receiver limited-feedback pipeline:
// quantize both gains, pick the decoding order and power split from the
// quantized values, and score the result against the true channel.
//
// Throughout, `alpha` is the power fraction of the receiver that performs SIC
// (the one with the larger quantized gain).

#pragma once

#include <array>
#include <cstdint>

#include "nomafb/quantizer.hpp"

namespace nomafb {

/// Which receiver is treated as the stronger one and performs SIC.
enum class DecodingOrder { FirstStrong, SecondStrong };

/// Quantized-gain comparison; a tie makes receiver 1 the SIC receiver.
constexpr DecodingOrder order_from_quantized(double q1, double q2) noexcept {
    return q1 >= q2 ? DecodingOrder::FirstStrong : DecodingOrder::SecondStrong;
}

struct OutageConfig {
    double r_th = 1.0;
    /// 2^r_th - 1
    double beta = 1.0;

    static OutageConfig from_threshold(double r_th);
};

/// Rates indexed by receiver (first = receiver 1).
struct RatePair {
    double first = 0.0;
    double second = 0.0;

    double min() const noexcept { return first < second ? first : second; }
};

struct TrialOutcome {
    double r_max_full = 0.0;
    /// min of the rates the base station adapts to from feedback
    double r_adapted_min = 0.0;
    /// r_max_full - r_adapted_min
    double rate_loss = 0.0;
    /// min achieved rate with the feedback-based alpha on the true gains
    double r_q_actual = 0.0;
    RatePair r_actual;
    double alpha_q = 0.0;
    DecodingOrder order = DecodingOrder::FirstStrong;
    bool outage_full = false;
    bool outage_q = false;
    std::array<int, 2> feedback_bits{};
};

/// Equal-rate split on quantized gains; zero if either gain is zero.
/// Requires q_strong >= q_weak >= 0 and p > 0.
double alpha_from_quantized(double q_strong, double q_weak, double p);

/// Rates the base station assigns from feedback, as (strong message, weak message).
RatePair adapted_rates(double q_strong, double q_weak, double p);

/// True when the true channel supports the adapted rates: the weak receiver
/// decodes its message treating the other as noise, the strong receiver
/// decodes the weak message, then its own after cancellation.
bool achievable_check(double h_strong, double h_weak, double q_strong, double q_weak, double p);

/// Own-message rates of both receivers on the true gains.
RatePair actual_rates(double h1, double h2, double alpha_q, DecodingOrder order, double p);

double actual_min_rate(double h1, double h2, double alpha_q, DecodingOrder order, double p);

/// actual_min_rate < r_th (strict).
bool outage_indicator(double h1, double h2, double alpha_q, DecodingOrder order, double p,
                      const OutageConfig& cfg);

/// max{4 + lambda1/lambda2, lambda2}
double rate_loss_constant(double lambda1, double lambda2);

/// log2(1 + C0 p max{exp(-T delta/lambda1), delta})
double rate_loss_bound(double p, double delta, std::int64_t t, double lambda1, double lambda2);

struct OutageCounts {
    std::uint64_t trials = 0;
    std::uint64_t full_outages = 0;
    std::uint64_t quantized_outages = 0;
    /// quantized outage while the full-CSI system is not in outage
    std::uint64_t loss_events = 0;
};

/// Pr{quantized outage and no full-CSI outage}.
double outage_loss(const OutageCounts& counts);

/// 2xy / (sqrt((x+y)^2 + 4 x y^2 p) + x + y)
double g_ge(double x, double y, double p) noexcept;
/// 2xy / (sqrt((x+y)^2 + 4 x^2 y p) + x + y)
double g_lt(double x, double y, double p) noexcept;

struct SnrDecomposition {
    double snr_max = 0.0;
    double g_ge = 0.0;
    double g_lt = 0.0;
};

/// r_max = log2(1 + p snr_max), snr_max = g_ge(H1,H2) if H1 >= H2 else g_lt(H1,H2).
SnrDecomposition snr_decomposition(double h1, double h2, double p);

/// Full pipeline for one realisation. The quantizer flavor selects q_r or q_o.
TrialOutcome evaluate_trial(double h1, double h2, double p, const QuantizerConfig& quantizer,
                            const OutageConfig& outage);

} // namespace nomafb
