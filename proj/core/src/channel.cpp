// SPDX-License-Identifier: Apache-2.0

#include "nomafb/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nomafb {

void ChannelParams::validate() const {
    if (variances.empty())
        throw std::invalid_argument("channel: at least one receiver is required");
    for (std::size_t k = 0; k < variances.size(); ++k) {
        const double v = variances[k];
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("channel: variance of receiver " + std::to_string(k + 1) +
                                        " must be positive and finite");
    }
}

ChannelParams ChannelParams::defaults(std::size_t receivers) {
    if (receivers == 0)
        throw std::invalid_argument("channel: at least one receiver is required");
    ChannelParams params;
    if (receivers == 2) {
        params.variances = {1.0, 0.5};
        return params;
    }
    params.variances.resize(receivers);
    for (std::size_t k = 0; k < receivers; ++k)
        params.variances[k] = 1.0 / static_cast<double>(k + 1);
    return params;
}

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

TrialStream::TrialStream(StreamSeed seed) noexcept
    : key_{static_cast<std::uint32_t>(seed.master), static_cast<std::uint32_t>(seed.master >> 32)},
      trial_(seed.trial) {}

std::uint64_t TrialStream::next_u64() noexcept {
    if (used_ >= 4) {
        buffer_ = philox4x32({static_cast<std::uint32_t>(trial_), static_cast<std::uint32_t>(trial_ >> 32),
                              static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32)},
                             key_);
        ++block_;
        used_ = 0;
    }
    const std::uint64_t value = (static_cast<std::uint64_t>(buffer_[used_]) << 32) | buffer_[used_ + 1];
    used_ += 2;
    return value;
}

double TrialStream::next_uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double TrialStream::next_exponential(double mean) noexcept {
    double u = next_uniform();
    while (u == 0.0)
        u = next_uniform();
    // u < 1 always, so the result is strictly positive once u = 0 is redrawn.
    return -mean * std::log(u);
}

void sample_gains(std::span<const double> variances, StreamSeed seed, std::span<double> gains) noexcept {
    TrialStream stream(seed);
    for (std::size_t k = 0; k < variances.size(); ++k)
        gains[k] = stream.next_exponential(variances[k]);
}

ChannelState sample_channel(const ChannelParams& params, StreamSeed seed) {
    params.validate();
    ChannelState state;
    state.gains.resize(params.size());
    sample_gains(params.variances, seed, state.gains);
    return state;
}

} // namespace nomafb
