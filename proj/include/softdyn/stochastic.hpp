#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace softdyn {

/// Probability encoded as the density of ones in a bitstream.
struct StochasticNumber {
    std::vector<std::uint8_t> bits;
    unsigned width = 7;

    std::size_t size() const { return bits.size(); }
    double probability() const;
};

/// Sequential reader over k-bit random integers.
class IntegerStream {
public:
    IntegerStream(std::span<const std::uint32_t> values, unsigned width);

    std::size_t remaining() const { return values_.size() - pos_; }
    /// Throws InsufficientRandomnessError when exhausted.
    std::span<const std::uint32_t> take(std::size_t n);

private:
    std::span<const std::uint32_t> values_;
    std::size_t pos_ = 0;
    unsigned width_;
};

/// Comparator generator: bit i is 1 iff rnd_i < X.
StochasticNumber sng(std::uint32_t x, unsigned k, IntegerStream& rnd, std::size_t n);

StochasticNumber and_multiply(const StochasticNumber& a, const StochasticNumber& b);

/// Product scale: 2^(2k) by default, (2^k - 1)^2 for the alternative encoding.
enum class Denominator { PowerOfTwo, PowerOfTwoMinusOne };

double product_scale(unsigned k, Denominator d);

/// round(p * scale).
long long decode_product(const StochasticNumber& s, unsigned k, Denominator d = Denominator::PowerOfTwo);

struct MultiplyResult {
    std::uint32_t x1 = 0;
    std::uint32_t x2 = 0;
    unsigned k = 7;
    std::size_t n = 0;
    long long estimate = 0;
    long long exact = 0;
    double rel_error = 0.0;
    std::vector<double> running_estimate;  // scaled estimate after each prefix length 1..n
};

/// Operand one consumes rnd[0, n), operand two rnd[n, 2n).
MultiplyResult stochastic_multiply(std::uint32_t x1, std::uint32_t x2, unsigned k, std::size_t n,
                                   std::span<const std::uint32_t> rnd, Denominator d = Denominator::PowerOfTwo);

struct SweepPoint {
    std::uint32_t multiplier = 0;
    long long estimate = 0;
    long long exact = 0;
};

struct MultiplierSweep {
    std::vector<SweepPoint> points;
    double distance = 0.0;  // root of the summed squared error
};

/// Multiplies `x1` by each multiplier in turn, consuming 2n integers per product.
MultiplierSweep multiplier_sweep(std::uint32_t x1, const std::vector<std::uint32_t>& multipliers, unsigned k,
                                 std::size_t n, std::span<const std::uint32_t> rnd,
                                 Denominator d = Denominator::PowerOfTwo);

/// k-bit integers from the top bits of a seeded 64-bit Mersenne Twister.
std::vector<std::uint32_t> reference_integers(std::uint64_t seed, std::size_t count, unsigned k);

std::string multiply_json(const MultiplyResult& r);
std::string convergence_csv(const MultiplyResult& r);

}  // namespace softdyn
