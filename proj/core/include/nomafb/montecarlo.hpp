// SPDX-License-Identifier: Apache-2.0
//
// Deterministic parallel Monte Carlo driver.
//
// Trials are cut into fixed-size blocks by trial index. Each block is summed
// sequentially, blocks of a round are merged pairwise in index order, and rounds
// are folded in order. None of this depends on which worker ran which block, so
// totals are bit-identical for any worker count.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace nomafb {

struct Moments {
    std::uint64_t count = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    double max = -std::numeric_limits<double>::infinity();

    void add(double value) noexcept {
        ++count;
        sum += value;
        sum_sq += value * value;
        if (value > max)
            max = value;
    }

    double mean() const noexcept;
    /// Sample standard deviation over sqrt(count); zero for fewer than two samples.
    double standard_error() const noexcept;

    static Moments merge(const Moments& a, const Moments& b) noexcept;
};

/// Runs trials [first, last) and accumulates into `slots` (one Moments per metric).
using BlockKernel = std::function<void(std::uint64_t first, std::uint64_t last, std::span<Moments> slots)>;

/// Inspects running totals after each round; true stops the run.
using StopRule = std::function<bool(std::span<const Moments> totals, std::uint64_t trials)>;

struct RunControl {
    /// Exact trial count when `stop` is empty.
    std::uint64_t trials = 0;
    /// Upper bound on trials when `stop` is set.
    std::uint64_t trial_cap = 1'000'000'000;
    StopRule stop;
    std::uint64_t block_size = 4096;
    std::uint64_t blocks_per_round = 64;
};

struct MonteCarloResult {
    std::vector<Moments> totals;
    std::uint64_t trials = 0;
    /// False when a stop rule was set but the trial cap ended the run.
    bool stop_satisfied = true;
};

MonteCarloResult run_monte_carlo(std::size_t slot_count, const BlockKernel& kernel, const RunControl& control,
                                 unsigned workers);

/// Worker count from NOMAFB_WORKERS, else hardware concurrency (at least 1).
unsigned default_worker_count();

} // namespace nomafb
