// SPDX-License-Identifier: Apache-2.0

#include "nomafb/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace nomafb {

double Moments::mean() const noexcept {
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double Moments::standard_error() const noexcept {
    if (count < 2)
        return 0.0;
    const auto n = static_cast<double>(count);
    const double variance = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    return std::sqrt(variance / n);
}

Moments Moments::merge(const Moments& a, const Moments& b) noexcept {
    return {a.count + b.count, a.sum + b.sum, a.sum_sq + b.sum_sq, std::max(a.max, b.max)};
}

namespace {

using SlotBlock = std::vector<Moments>;

void merge_into(SlotBlock& dst, const SlotBlock& src) {
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = Moments::merge(dst[i], src[i]);
}

// Pairwise reduction of blocks[lo, hi) in index order.
SlotBlock pairwise(std::vector<SlotBlock>& blocks, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1)
        return blocks[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    SlotBlock left = pairwise(blocks, lo, mid);
    merge_into(left, pairwise(blocks, mid, hi));
    return left;
}

// Computes one round of blocks covering trials [first, last).
SlotBlock run_round(std::size_t slot_count, const BlockKernel& kernel, std::uint64_t first, std::uint64_t last,
                    std::uint64_t block_size, unsigned workers) {
    const std::uint64_t n_blocks = (last - first + block_size - 1) / block_size;
    std::vector<SlotBlock> blocks(n_blocks, SlotBlock(slot_count));

    auto work = [&](std::uint64_t b) {
        const std::uint64_t lo = first + b * block_size;
        const std::uint64_t hi = std::min(last, lo + block_size);
        kernel(lo, hi, blocks[b]);
    };

    const unsigned threads = static_cast<unsigned>(std::min<std::uint64_t>(workers, n_blocks));
    if (threads <= 1) {
        for (std::uint64_t b = 0; b < n_blocks; ++b)
            work(b);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        {
            std::vector<std::jthread> pool;
            pool.reserve(threads);
            for (unsigned t = 0; t < threads; ++t) {
                pool.emplace_back([&] {
                    for (std::uint64_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) {
                        try {
                            work(b);
                        } catch (...) {
                            std::lock_guard lock(failure_mutex);
                            if (!failure)
                                failure = std::current_exception();
                            next.store(n_blocks);
                        }
                    }
                });
            }
        }
        if (failure)
            std::rethrow_exception(failure);
    }
    return pairwise(blocks, 0, blocks.size());
}

} // namespace

MonteCarloResult run_monte_carlo(std::size_t slot_count, const BlockKernel& kernel, const RunControl& control,
                                 unsigned workers) {
    if (control.block_size == 0 || control.blocks_per_round == 0)
        throw std::invalid_argument("montecarlo: block size and round length must be positive");
    workers = std::max(1u, workers);

    MonteCarloResult result;
    result.totals.assign(slot_count, Moments{});
    const std::uint64_t round_trials = control.block_size * control.blocks_per_round;
    const bool adaptive = static_cast<bool>(control.stop);
    const std::uint64_t limit = adaptive ? control.trial_cap : control.trials;

    std::uint64_t done = 0;
    while (done < limit) {
        if (adaptive && control.stop(result.totals, done))
            break;
        const std::uint64_t end = std::min(limit, done + round_trials);
        merge_into(result.totals, run_round(slot_count, kernel, done, end, control.block_size, workers));
        done = end;
    }
    result.trials = done;
    if (adaptive)
        result.stop_satisfied = control.stop(result.totals, done);
    return result;
}

unsigned default_worker_count() {
    if (const char* env = std::getenv("NOMAFB_WORKERS")) {
        try {
            const unsigned long value = std::stoul(env);
            if (value > 0)
                return static_cast<unsigned>(value);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace nomafb
