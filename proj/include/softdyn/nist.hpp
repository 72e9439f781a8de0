#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace softdyn {

using Bits = std::span<const std::uint8_t>;

struct TestResult {
    std::string name;
    std::vector<double> p_values;
    bool applicable = true;
    bool pass = false;  // applicable and every p-value >= alpha
    std::vector<std::pair<std::string, double>> params;
    std::size_t bits_consumed = 0;
    std::string note;

    double min_p() const;
    double param(const std::string& key) const;
};

struct NistConfig {
    double alpha = 0.01;
    std::size_t block_frequency_m = 128;
    std::size_t longest_run_m = 0;  // 0 picks 8, 128 or 10^4 from n
    std::size_t rank_rows = 32;
    std::size_t rank_cols = 32;
    std::string non_overlapping_template = "000000001";
    std::size_t non_overlapping_blocks = 8;
    std::size_t overlapping_m = 9;
    std::size_t overlapping_block = 1032;
    std::vector<double> overlapping_probabilities;  // empty: derived from m and the block length
    std::size_t universal_l = 0;  // 0 picks L from n
    std::size_t universal_q = 0;  // 0 means 10 * 2^L
    std::size_t linear_complexity_m = 500;
    std::vector<double> linear_complexity_probabilities;  // empty: exact class probabilities
    std::size_t serial_m = 5;
    std::size_t approximate_entropy_m = 2;
    /// Off only for the short worked examples of the reference document.
    bool enforce_length = true;

    void validate() const;
};

TestResult frequency_monobit(Bits bits, const NistConfig& config = {});
TestResult block_frequency(Bits bits, const NistConfig& config = {});
TestResult runs_test(Bits bits, const NistConfig& config = {});
TestResult longest_run_of_ones(Bits bits, const NistConfig& config = {});
TestResult binary_matrix_rank(Bits bits, const NistConfig& config = {});
TestResult dft_spectral_test(Bits bits, const NistConfig& config = {});
TestResult non_overlapping_template(Bits bits, const NistConfig& config = {});
TestResult overlapping_template(Bits bits, const NistConfig& config = {});
TestResult universal_test(Bits bits, const NistConfig& config = {});
TestResult linear_complexity(Bits bits, const NistConfig& config = {});
TestResult serial_test(Bits bits, const NistConfig& config = {});
TestResult approximate_entropy(Bits bits, const NistConfig& config = {});
TestResult cumulative_sums(Bits bits, const NistConfig& config = {});
TestResult random_excursions(Bits bits, const NistConfig& config = {});
TestResult random_excursions_variant(Bits bits, const NistConfig& config = {});

/// Linear complexity of a bit block over GF(2).
std::size_t berlekamp_massey(Bits block);

/// Rank over GF(2) of a rows x cols matrix filled row by row; cols <= 64.
std::size_t gf2_rank(Bits bits, std::size_t rows, std::size_t cols);

/// Probability that a random rows x cols GF(2) matrix has rank r.
double gf2_rank_probability(std::size_t r, std::size_t rows, std::size_t cols);

/// Class probabilities of the overlapping-template test for the given block shape.
std::vector<double> overlapping_template_probabilities(std::size_t m, std::size_t block, std::size_t classes = 6);

/// p-value of the universal statistic. With `finite_k_correction` false the plain
/// variance is used, as in the reference document's short worked example.
double universal_p_value(double fn, std::size_t l, std::size_t k, bool finite_k_correction = true);

/// Seeded cryptographic-quality reference bits (ChaCha20 keystream, MSB first).
std::vector<std::uint8_t> reference_bits(std::uint64_t seed, std::size_t n);

struct BatterySummary {
    std::vector<TestResult> results;
    std::size_t applicable = 0;
    std::size_t passed = 0;
};

/// Runs all fifteen tests. A test whose length precondition fails is reported as
/// not applicable instead of failing the battery.
BatterySummary run_battery(Bits bits, const NistConfig& config = {});

/// JSON array `[{name, p_values, pass, applicable, params}]`.
std::string battery_json(const BatterySummary& summary, int indent = 2);

}  // namespace softdyn
