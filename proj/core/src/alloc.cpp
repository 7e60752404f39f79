// SPDX-License-Identifier: Apache-2.0

#include "nomafb/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nomafb {

namespace {

void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value))
        throw std::invalid_argument(std::string("alloc: ") + what + " must be positive and finite");
}

void require_positive_gains(std::span<const double> gains) {
    if (gains.empty())
        throw std::invalid_argument("alloc: gain vector is empty");
    for (double g : gains)
        require_positive(g, "channel gain");
}

void require_descending(std::span<const double> gains) {
    if (!std::is_sorted(gains.begin(), gains.end(), std::greater<>{}))
        throw std::invalid_argument("alloc: gains must be sorted in descending order");
}

} // namespace

double optimal_alpha_two_user(double h_strong, double h_weak, double p) {
    require_positive(h_strong, "h_strong");
    require_positive(h_weak, "h_weak");
    require_positive(p, "power");
    if (h_strong < h_weak)
        throw std::invalid_argument("alloc: h_strong must not be smaller than h_weak");
    const double sum = h_strong + h_weak;
    return 2.0 * h_weak / (std::sqrt(sum * sum + 4.0 * h_strong * h_weak * h_weak * p) + sum);
}

double max_min_rate_two_user(double h1, double h2, double p) {
    require_positive(h1, "h1");
    require_positive(h2, "h2");
    require_positive(p, "power");
    const double strong = std::max(h1, h2);
    const double weak = std::min(h1, h2);
    const double sum = h1 + h2;
    const double snr = 2.0 * h1 * h2 / (std::sqrt(sum * sum + 4.0 * strong * weak * weak * p) + sum);
    return std::log2(1.0 + p * snr);
}

double rate_k(std::span<const double> alphas, std::span<const double> gains_desc, double p, std::size_t k) {
    require_positive_gains(gains_desc);
    require_descending(gains_desc);
    require_positive(p, "power");
    if (alphas.size() != gains_desc.size())
        throw std::invalid_argument("alloc: alpha and gain vectors differ in length");
    if (k >= gains_desc.size())
        throw std::out_of_range("alloc: receiver position out of range");
    const double total = std::accumulate(alphas.begin(), alphas.end(), 0.0);
    if (total > 1.0 + 1e-9)
        throw std::invalid_argument("alloc: power fractions sum to more than one");
    double interference = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        interference += alphas[i];
    return std::log2(1.0 + alphas[k] / (interference + 1.0 / (p * gains_desc[k])));
}

double varpi(double r, std::span<const double> gains_desc, double p) {
    require_positive_gains(gains_desc);
    require_positive(p, "power");
    if (!(r >= 0.0))
        throw std::invalid_argument("alloc: rate must be nonnegative");
    // Horner form of sum_i 2^{(K-1-i) r} / (p H_i).
    const double growth = std::exp2(r);
    double acc = 0.0;
    for (double h : gains_desc)
        acc = acc * growth + 1.0 / (p * h);
    return (growth - 1.0) * acc;
}

std::vector<double> alloc_from_rate(double r, std::span<const double> gains_desc, double p) {
    require_positive_gains(gains_desc);
    require_positive(p, "power");
    if (!(r >= 0.0))
        throw std::invalid_argument("alloc: rate must be nonnegative");
    // alpha_k = (2^r - 1) (sum_{i<k} alpha_i + 1/(p H_k)), the closed form unrolled.
    const double excess = std::exp2(r) - 1.0;
    std::vector<double> alphas(gains_desc.size());
    double stronger = 0.0;
    for (std::size_t k = 0; k < gains_desc.size(); ++k) {
        alphas[k] = excess * (stronger + 1.0 / (p * gains_desc[k]));
        stronger += alphas[k];
    }
    return alphas;
}

int bisection_iterations(double r_ub, double eps) {
    if (!(eps > 0.0))
        throw std::invalid_argument("alloc: eps must be positive");
    if (r_ub <= eps)
        return 0;
    return static_cast<int>(std::ceil(std::log2(r_ub / eps)));
}

std::vector<std::size_t> descending_order(std::span<const double> gains) {
    std::vector<std::size_t> order(gains.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });
    return order;
}

SolverResult solve_max_min_k(std::span<const double> gains, double p, double eps) {
    require_positive_gains(gains);
    require_positive(p, "power");
    if (!(eps > 0.0))
        throw std::invalid_argument("alloc: eps must be positive");

    constexpr int kIterationCap = 64;

    SolverResult result;
    result.allocation.order = descending_order(gains);
    std::vector<double> sorted(gains.size());
    for (std::size_t i = 0; i < gains.size(); ++i)
        sorted[i] = gains[result.allocation.order[i]];

    const double r_ub = std::log2(1.0 + p * sorted.back());
    const int iterations = bisection_iterations(r_ub, eps);
    if (iterations > kIterationCap)
        throw std::runtime_error("alloc: bisection would exceed the iteration cap");

    double lo = 0.0;
    double hi = r_ub;
    for (int it = 0; it < iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (varpi(mid, sorted, p) < 1.0)
            lo = mid;
        else
            hi = mid;
    }
    result.iterations = iterations;
    result.r_max = lo;
    result.residual = std::abs(varpi(lo, sorted, p) - 1.0);

    // With r_ub <= eps no halving happens and lo stays 0, which carries no
    // allocation; the upper end is then within eps of the root as well.
    std::vector<double> positional = alloc_from_rate(lo > 0.0 ? lo : hi, sorted, p);
    const double total = std::accumulate(positional.begin(), positional.end(), 0.0);
    result.allocation.alphas.assign(gains.size(), 1.0 / static_cast<double>(gains.size()));
    if (total > 0.0) {
        for (std::size_t i = 0; i < positional.size(); ++i)
            result.allocation.alphas[result.allocation.order[i]] = positional[i] / total;
    }
    return result;
}

double tdma_min_rate(std::span<const double> gains, double p) {
    require_positive_gains(gains);
    require_positive(p, "power");
    const double share = 1.0 / static_cast<double>(gains.size());
    double worst = std::numeric_limits<double>::infinity();
    for (double h : gains)
        worst = std::min(worst, share * std::log2(1.0 + p * h));
    return worst;
}

} // namespace nomafb
