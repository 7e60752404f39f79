// SPDX-License-Identifier: Apache-2.0

#include "nomafb/quantizer.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nomafb {

void QuantizerConfig::validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("quantizer: bin size must be positive and finite");
    if (t < 1)
        throw std::invalid_argument("quantizer: bin count must be at least 1");
}

namespace {

FeedbackWord make_word(std::int64_t level, double delta) {
    return {level, vle_length(static_cast<std::uint64_t>(level)), static_cast<double>(level) * delta};
}

void require_default_t_inputs(double delta, double lambda1) {
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::invalid_argument("quantizer: default bin count needs 0 < delta < 1");
    if (!(lambda1 > 0.0) || !std::isfinite(lambda1))
        throw std::invalid_argument("quantizer: variance must be positive and finite");
}

std::int64_t checked_ceil(double value) {
    const double c = std::ceil(value);
    if (!(c < static_cast<double>(std::numeric_limits<std::int64_t>::max())))
        throw std::invalid_argument("quantizer: bin count overflows");
    return static_cast<std::int64_t>(c);
}

} // namespace

// The level is chosen against the reconstruction values n*delta as computed in
// floating point, so x = n*delta maps back to n exactly and the bracketing
// inequalities hold without rounding slack.

FeedbackWord quantize_rate(double x, const QuantizerConfig& cfg) {
    if (!(x >= 0.0))
        throw std::invalid_argument("quantizer: rate quantizer input must be nonnegative");
    const double delta = cfg.delta;
    if (x > static_cast<double>(cfg.t) * delta)
        return make_word(cfg.t, delta);
    auto n = static_cast<std::int64_t>(std::floor(x / delta));
    if (static_cast<double>(n) * delta > x)
        --n;
    else if (n < cfg.t && static_cast<double>(n + 1) * delta <= x)
        ++n;
    return make_word(n, delta);
}

FeedbackWord quantize_outage(double x, const QuantizerConfig& cfg) {
    if (!(x > 0.0))
        throw std::invalid_argument("quantizer: outage quantizer input must be positive");
    const double delta = cfg.delta;
    if (x > static_cast<double>(cfg.t) * delta)
        return make_word(cfg.t + 1, delta);
    auto n = static_cast<std::int64_t>(std::ceil(x / delta));
    if (n > 1 && static_cast<double>(n - 1) * delta >= x)
        --n;
    else if (static_cast<double>(n) * delta < x)
        ++n;
    if (n < 1)
        n = 1;
    return make_word(n, delta);
}

FeedbackWord quantize(double x, const QuantizerConfig& cfg) {
    return cfg.flavor == Flavor::RateAdaptation ? quantize_rate(x, cfg) : quantize_outage(x, cfg);
}

std::int64_t default_t_rate(double delta, double lambda1) {
    require_default_t_inputs(delta, lambda1);
    return checked_ceil(lambda1 / delta * std::log(1.0 / delta));
}

std::int64_t default_t_outage(double delta, double lambda1) {
    require_default_t_inputs(delta, lambda1);
    return checked_ceil(lambda1 / (2.0 * delta) * std::log(1.0 / delta));
}

int vle_length(std::uint64_t n) noexcept {
    // bit_width(n + 2) - 1 == floor(log2(n + 2)); n + 2 cannot wrap for levels in use.
    return static_cast<int>(std::bit_width(n + 2)) - 1;
}

std::string vle_encode(std::uint64_t n) {
    const int length = vle_length(n);
    const std::uint64_t offset = n + 2 - (std::uint64_t{1} << length);
    std::string bits(static_cast<std::size_t>(length), '0');
    for (int i = 0; i < length; ++i) {
        if ((offset >> (length - 1 - i)) & 1u)
            bits[static_cast<std::size_t>(i)] = '1';
    }
    return bits;
}

std::uint64_t vle_decode(std::string_view bits) {
    if (bits.empty())
        throw std::invalid_argument("quantizer: cannot decode an empty codeword");
    if (bits.size() > 63)
        throw std::invalid_argument("quantizer: codeword longer than 63 bits");
    std::uint64_t offset = 0;
    for (char c : bits) {
        if (c != '0' && c != '1')
            throw std::invalid_argument("quantizer: codeword must contain only '0' and '1'");
        offset = (offset << 1) | static_cast<std::uint64_t>(c == '1');
    }
    return offset + (std::uint64_t{1} << bits.size()) - 2;
}

int fle_bits(std::int64_t t, Flavor flavor) {
    if (t < 1)
        throw std::invalid_argument("quantizer: bin count must be at least 1");
    // ceil(log2(m)) for m >= 2 equals bit_width(m - 1).
    const auto levels = static_cast<std::uint64_t>(flavor == Flavor::RateAdaptation ? t + 1 : t + 2);
    return static_cast<int>(std::bit_width(levels - 1));
}

double vle_rate_bound(double delta, double lambda) {
    if (!(delta > 0.0) || !(lambda > 0.0))
        throw std::invalid_argument("quantizer: bin size and variance must be positive");
    return 2.0 / std::numbers::ln2 + 1.0 + std::log2(1.0 + lambda / delta);
}

} // namespace nomafb
