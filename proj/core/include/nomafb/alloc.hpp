// SPDX-License-Identifier: Apache-2.0
//
// Full-CSI max-min power allocation for downlink NOMA.
//
// Rates are in bits/s/Hz, noise power is 1, so `p` is the transmit SNR per unit
// channel gain. For K receivers sorted by descending gain H_1 >= ... >= H_K the
// receiver at position k decodes and cancels the messages of all weaker receivers
// and sees the stronger ones as interference:
//
//   r_k(alpha) = log2(1 + alpha_k / (sum_{i<k} alpha_i + 1/(p H_k)))

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nomafb {

struct PowerAllocation {
    /// Power fraction per receiver, indexed by the caller's receiver order.
    std::vector<double> alphas;
    /// Receiver indices from strongest to weakest; ties keep the lower index first.
    std::vector<std::size_t> order;
};

struct SolverResult {
    double r_max = 0.0;
    PowerAllocation allocation;
    int iterations = 0;
    /// |varpi(r_max) - 1|
    double residual = 0.0;
};

/// Power fraction of the stronger receiver that equalises both rates.
/// Requires h_strong >= h_weak > 0 and p > 0.
double optimal_alpha_two_user(double h_strong, double h_weak, double p);

/// Maximum over alpha of min{r_1, r_2}, for either ordering of h1 and h2.
double max_min_rate_two_user(double h1, double h2, double p);

/// Rate of the receiver at position `k` (0-based) of a descending gain vector.
double rate_k(std::span<const double> alphas, std::span<const double> gains_desc, double p, std::size_t k);

/// (2^r - 1) * sum_i 2^{(K-1-i) r} / (p H_i) over 0-based positions i.
/// Strictly increasing in r, zero at r = 0; the max-min rate is its root at 1.
double varpi(double r, std::span<const double> gains_desc, double p);

/// Allocation giving every receiver exactly rate `r`; sums to varpi(r).
std::vector<double> alloc_from_rate(double r, std::span<const double> gains_desc, double p);

/// Bisection for the K-receiver max-min rate. Gains may be in any order.
/// The reported rate is the lower end of the final bracket, which keeps the
/// returned allocation feasible; alphas are normalised to sum to one.
SolverResult solve_max_min_k(std::span<const double> gains, double p, double eps);

/// Number of halvings solve_max_min_k performs for the given bracket.
int bisection_iterations(double r_ub, double eps);

/// Time sharing: min_k (1/K) log2(1 + p H_k).
double tdma_min_rate(std::span<const double> gains, double p);

/// Receiver indices sorted by descending gain, ties broken by index.
std::vector<std::size_t> descending_order(std::span<const double> gains);

} // namespace nomafb
