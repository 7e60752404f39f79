// SPDX-License-Identifier: Apache-2.0
//
// Rayleigh-fading channel power gains and counter-based random streams.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nomafb {

/// Mean channel power gain (lambda_k) of every receiver.
struct ChannelParams {
    std::vector<double> variances;

    std::size_t size() const noexcept { return variances.size(); }

    /// Throws std::invalid_argument if empty or any variance is not a positive finite number.
    void validate() const;

    /// (1, 0.5) for two receivers, lambda_k = 1/k otherwise.
    static ChannelParams defaults(std::size_t receivers);

    friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

/// Instantaneous power gains H_k, one per receiver.
struct ChannelState {
    std::vector<double> gains;
};

/// Key of one Monte Carlo trial. The pair alone determines every draw of the trial.
struct StreamSeed {
    std::uint64_t master = 0;
    std::uint64_t trial = 0;

    friend bool operator==(const StreamSeed&, const StreamSeed&) = default;
};

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Stream of uniform variates for one trial. The master seed is the Philox key,
/// the trial index and a draw counter form the Philox counter, so the output is a
/// pure function of (seed, trial, draw index).
class TrialStream {
public:
    explicit TrialStream(StreamSeed seed) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double next_uniform() noexcept;

    /// Exponential with the given mean, strictly positive (exact zeros are redrawn).
    double next_exponential(double mean) noexcept;

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t trial_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
};

/// Draws H_k ~ Exp(mean lambda_k) independently for each receiver.
ChannelState sample_channel(const ChannelParams& params, StreamSeed seed);

/// Allocation-free variant; `variances` must already be validated.
void sample_gains(std::span<const double> variances, StreamSeed seed, std::span<double> gains) noexcept;

} // namespace nomafb
