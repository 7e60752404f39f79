// SPDX-License-Identifier: Apache-2.0

#include "nomafb/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nomafb {

OutageConfig OutageConfig::from_threshold(double r_th) {
    if (!(r_th > 0.0) || !std::isfinite(r_th))
        throw std::invalid_argument("evaluator: target rate must be positive and finite");
    return {r_th, std::exp2(r_th) - 1.0};
}

namespace {

// log2(1 + snr) for the receiver that treats the other message as noise.
inline double noisy_rate(double h, double alpha, double p) noexcept {
    return std::log2(1.0 + p * h * (1.0 - alpha) / (p * h * alpha + 1.0));
}

inline double clean_rate(double h, double alpha, double p) noexcept {
    return std::log2(1.0 + p * alpha * h);
}

void require_ordered(double q_strong, double q_weak, double p) {
    if (!(q_weak >= 0.0))
        throw std::invalid_argument("evaluator: quantized gains must be nonnegative");
    if (q_strong < q_weak)
        throw std::invalid_argument("evaluator: q_strong must not be smaller than q_weak");
    if (!(p > 0.0))
        throw std::invalid_argument("evaluator: power must be positive");
}

} // namespace

double alpha_from_quantized(double q_strong, double q_weak, double p) {
    require_ordered(q_strong, q_weak, p);
    if (q_weak == 0.0)
        return 0.0;
    const double sum = q_strong + q_weak;
    return 2.0 * q_weak / (std::sqrt(sum * sum + 4.0 * q_strong * q_weak * q_weak * p) + sum);
}

RatePair adapted_rates(double q_strong, double q_weak, double p) {
    const double alpha = alpha_from_quantized(q_strong, q_weak, p);
    return {clean_rate(q_strong, alpha, p), noisy_rate(q_weak, alpha, p)};
}

bool achievable_check(double h_strong, double h_weak, double q_strong, double q_weak, double p) {
    const double alpha = alpha_from_quantized(q_strong, q_weak, p);
    const RatePair target = adapted_rates(q_strong, q_weak, p);
    const double weak_own = noisy_rate(h_weak, alpha, p);
    const double strong_decodes_weak = noisy_rate(h_strong, alpha, p);
    const double strong_own = clean_rate(h_strong, alpha, p);
    return weak_own >= target.second && strong_decodes_weak >= target.second && strong_own >= target.first;
}

RatePair actual_rates(double h1, double h2, double alpha_q, DecodingOrder order, double p) {
    if (order == DecodingOrder::FirstStrong)
        return {clean_rate(h1, alpha_q, p), noisy_rate(h2, alpha_q, p)};
    return {noisy_rate(h1, alpha_q, p), clean_rate(h2, alpha_q, p)};
}

double actual_min_rate(double h1, double h2, double alpha_q, DecodingOrder order, double p) {
    return actual_rates(h1, h2, alpha_q, order, p).min();
}

bool outage_indicator(double h1, double h2, double alpha_q, DecodingOrder order, double p,
                      const OutageConfig& cfg) {
    return actual_min_rate(h1, h2, alpha_q, order, p) < cfg.r_th;
}

double rate_loss_constant(double lambda1, double lambda2) {
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
        throw std::invalid_argument("evaluator: variances must be positive");
    return std::max(4.0 + lambda1 / lambda2, lambda2);
}

double rate_loss_bound(double p, double delta, std::int64_t t, double lambda1, double lambda2) {
    if (!(p > 0.0) || !(delta > 0.0) || t < 1)
        throw std::invalid_argument("evaluator: bound inputs must be positive");
    const double c0 = rate_loss_constant(lambda1, lambda2);
    const double tail = std::exp(-static_cast<double>(t) * delta / lambda1);
    return std::log2(1.0 + c0 * p * std::max(tail, delta));
}

double outage_loss(const OutageCounts& counts) {
    if (counts.trials == 0)
        return 0.0;
    return static_cast<double>(counts.loss_events) / static_cast<double>(counts.trials);
}

double g_ge(double x, double y, double p) noexcept {
    const double sum = x + y;
    return 2.0 * x * y / (std::sqrt(sum * sum + 4.0 * x * y * y * p) + sum);
}

double g_lt(double x, double y, double p) noexcept {
    const double sum = x + y;
    return 2.0 * x * y / (std::sqrt(sum * sum + 4.0 * x * x * y * p) + sum);
}

SnrDecomposition snr_decomposition(double h1, double h2, double p) {
    if (!(h1 > 0.0) || !(h2 > 0.0) || !(p > 0.0))
        throw std::invalid_argument("evaluator: gains and power must be positive");
    SnrDecomposition d;
    d.g_ge = g_ge(h1, h2, p);
    d.g_lt = g_lt(h1, h2, p);
    d.snr_max = h1 >= h2 ? d.g_ge : d.g_lt;
    return d;
}

TrialOutcome evaluate_trial(double h1, double h2, double p, const QuantizerConfig& quantizer,
                            const OutageConfig& outage) {
    const FeedbackWord w1 = quantize(h1, quantizer);
    const FeedbackWord w2 = quantize(h2, quantizer);

    TrialOutcome out;
    out.feedback_bits = {w1.bit_length, w2.bit_length};
    out.r_max_full = std::log2(1.0 + p * snr_decomposition(h1, h2, p).snr_max);
    out.order = order_from_quantized(w1.reconstructed, w2.reconstructed);

    const bool first_strong = out.order == DecodingOrder::FirstStrong;
    const double q_strong = first_strong ? w1.reconstructed : w2.reconstructed;
    const double q_weak = first_strong ? w2.reconstructed : w1.reconstructed;
    out.alpha_q = alpha_from_quantized(q_strong, q_weak, p);
    out.r_adapted_min = adapted_rates(q_strong, q_weak, p).min();
    out.rate_loss = out.r_max_full - out.r_adapted_min;

    out.r_actual = actual_rates(h1, h2, out.alpha_q, out.order, p);
    out.r_q_actual = out.r_actual.min();
    out.outage_full = out.r_max_full < outage.r_th;
    out.outage_q = out.r_q_actual < outage.r_th;
    return out;
}

} // namespace nomafb
