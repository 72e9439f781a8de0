#pragma once

#include "softdyn/oscillator.hpp"
#include "softdyn/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace softdyn {

/// Concatenated Poincare coordinates from one or more runs.
struct RawCoordinateStream {
    std::vector<double> values;
    std::vector<std::size_t> run_starts;  // offsets into values, sorted, first is 0

    void append_run(std::span<const double> run);
};

struct UniformStream {
    std::vector<double> values;      // each in (0, 1]
    std::vector<std::size_t> block;  // source block of each value
};

struct WhitenOptions {
    std::size_t block_size = 1500;
    std::size_t trim = 10;  // removed from each end of the sorted block
};

/// Collapses runs of equal consecutive values to a single value. Runs are stripped
/// inside each source run; nothing merges across run boundaries.
std::vector<double> strip_constant_runs(const RawCoordinateStream& stream);

/// Run-strip, block, trim extremes, rank-transform through each block's empirical CDF.
/// Ties share the largest rank. Trailing partial blocks are dropped.
UniformStream whiten_blocks(const RawCoordinateStream& stream, const WhitenOptions& options = {});

struct BitStream {
    std::vector<std::uint8_t> bits;
    unsigned width = 7;

    std::size_t size() const { return bits.size(); }
    /// Width-k integers, most significant bit first. Throws LengthError if the bit count
    /// is not a multiple of the width.
    std::vector<std::uint32_t> integers() const;
    static BitStream from_integers(std::span<const std::uint32_t> values, unsigned width);
};

/// Keeps values 0, stride, 2 stride, ... and quantizes each to floor(u 2^k), clamped
/// to 2^k - 1.
BitStream decimate_quantize(const UniformStream& u, std::size_t stride = 5, unsigned k = 7);

std::uint32_t quantize(double u, unsigned k);

/// Normalized autocorrelation for lags 0..max_lag; rho[0] = 1.
std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag);
std::vector<double> autocorrelation(std::span<const std::uint32_t> series, std::size_t max_lag);

struct UniformityReport {
    std::vector<double> theoretical_q;
    std::vector<double> sample_q;
    double max_qq_deviation = 0.0;
    double ks_statistic = 0.0;
    double ks_p_value = 0.0;
};

/// Q-Q points against Uniform[0,1] (theoretical quantile i/n) and the one-sample KS test.
UniformityReport uniformity_diagnostics(std::span<const double> u);

/// Asymptotic Kolmogorov tail probability with Stephens' small-sample correction.
double ks_p_value(double d, std::size_t n);

/// Pearson chi-square p-value of integers against a uniform law over `bins` values.
double chi_square_uniform_p(std::span<const std::uint32_t> values, std::size_t bins);

struct TrngSourceOptions {
    DriveParams drive{8.5, 35.0, 0.0};
    double duration_s = 480.0;
    std::size_t runs = 5;
    double settle_s = 10.0;
    std::size_t steps_per_period = 50;
    double initial_spread = 0.05;  // rad, random offset of the starting angles per run
    bool include_y = false;        // interleave y after x for each period
};

/// Poincare x (optionally y) coordinates of independent simulated runs. Starting
/// states come from the named substream "trng/initial".
RawCoordinateStream simulate_coordinate_stream(const OscillatorConfig& config, const TrngSourceOptions& options,
                                               const SeedTree& seeds);

struct TrngPipelineOptions {
    TrngSourceOptions source{};
    WhitenOptions whiten{};
    std::size_t stride = 5;
    unsigned bits = 7;
    std::size_t max_lag = 50;
};

struct TrngOutput {
    RawCoordinateStream raw;
    UniformStream uniform;
    BitStream bits;
    std::vector<std::uint32_t> integers;
    std::vector<double> rho;  // autocorrelation of the integer stream, lags 0..max_lag
    UniformityReport uniformity;
    double chi_square_p = 0.0;
    double max_abs_rho = 0.0;  // over lags >= 1
    double rho_bound = 0.0;    // 3 / sqrt(n)
};

/// Simulation, whitening, decimation and the diagnostics in one pass.
TrngOutput run_trng_pipeline(const OscillatorConfig& config, const TrngPipelineOptions& options,
                             const SeedTree& seeds);

/// ASCII bits, 64 per line.
std::string bits_ascii(const BitStream& bits);
BitStream parse_bits_ascii(std::string_view text, unsigned width = 7);
std::string integers_csv(std::span<const std::uint32_t> values);
/// Reads `index,value` rows back; values must be below 2^width.
std::vector<std::uint32_t> parse_integers_csv(std::string_view text, unsigned width = 7);
std::string autocorrelation_csv(std::span<const double> rho);
std::string qq_csv(const UniformityReport& report);

}  // namespace softdyn
