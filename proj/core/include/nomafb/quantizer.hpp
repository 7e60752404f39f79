// SPDX-License-Identifier: Apache-2.0
//
// Uniform scalar quantizers for channel-gain feedback and the codes used to
// send their indices.
//
// Rate adaptation rounds a gain down to the left edge of its bin, so the
// reconstruction never exceeds the true gain. The outage quantizer rounds up to
// the right edge and never reconstructs zero. Both saturate after T bins.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace nomafb {

enum class Flavor { RateAdaptation, Outage };

struct QuantizerConfig {
    double delta = 0.0;
    std::int64_t t = 1;
    Flavor flavor = Flavor::RateAdaptation;

    /// Throws std::invalid_argument unless delta > 0 and t >= 1.
    void validate() const;
};

struct FeedbackWord {
    std::int64_t level = 0;
    /// Length of the variable-length codeword for `level`.
    int bit_length = 0;
    /// level * delta
    double reconstructed = 0.0;
};

/// Largest n <= T with n*delta <= x. Rejects negative x.
FeedbackWord quantize_rate(double x, const QuantizerConfig& cfg);

/// Smallest n >= 1 with n*delta >= x when x <= T*delta, otherwise T+1.
/// Rejects x <= 0.
FeedbackWord quantize_outage(double x, const QuantizerConfig& cfg);

/// Dispatches on cfg.flavor.
FeedbackWord quantize(double x, const QuantizerConfig& cfg);

/// ceil((lambda1/delta) ln(1/delta)), so that exp(-T delta/lambda1) <= delta.
std::int64_t default_t_rate(double delta, double lambda1);

/// ceil((lambda1/(2 delta)) ln(1/delta)), so that exp(-T delta/lambda1) <= sqrt(delta).
std::int64_t default_t_outage(double delta, double lambda1);

/// floor(log2(n + 2)).
int vle_length(std::uint64_t n) noexcept;

/// The (n+1)-th nonempty binary string in length-then-lexicographic order:
/// "0", "1", "00", "01", "10", "11", "000", ...
///
/// The code is not prefix-free. A receiver of a stream of codewords needs the
/// lengths from elsewhere; here only the count of bits matters, and decoding
/// takes a whole codeword whose length is known.
std::string vle_encode(std::uint64_t n);

/// Inverse of vle_encode. Throws std::invalid_argument on an empty string,
/// a character other than '0'/'1', or a codeword longer than 63 bits.
std::uint64_t vle_decode(std::string_view bits);

/// Fixed-length code size: ceil(log2(T+1)) for levels 0..T (rate flavor),
/// ceil(log2(T+2)) for levels 1..T+1 (outage flavor).
int fle_bits(std::int64_t t, Flavor flavor);

/// 2/ln2 + 1 + log2(1 + lambda/delta): upper bound on the expected VLE length
/// of a rate-quantized Exp(lambda) gain.
double vle_rate_bound(double delta, double lambda);

} // namespace nomafb
