#include "softdyn/nist.hpp"

#include "softdyn/error.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <fftw3.h>
#include <nlohmann/json.hpp>
#include <sodium.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>

namespace softdyn {

namespace {

double igamc(double a, double x)
{
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(a, x);
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double clamp_p(double p)
{
    if (std::isnan(p)) return 0.0;
    return std::clamp(p, 0.0, 1.0);
}

void require_length(const NistConfig& c, bool ok, const std::string& what)
{
    if (c.enforce_length && !ok) throw LengthError(what);
}

void require_bits(Bits bits)
{
    for (std::uint8_t b : bits)
        if (b > 1) throw ValidationError("bits", "values must be 0 or 1");
}

TestResult finish(TestResult r, const NistConfig& c)
{
    for (double& p : r.p_values) p = clamp_p(p);
    r.pass = r.applicable && !r.p_values.empty() &&
             std::all_of(r.p_values.begin(), r.p_values.end(), [&](double p) { return p >= c.alpha; });
    return r;
}

TestResult start(const std::string& name, Bits bits)
{
    require_bits(bits);
    TestResult r;
    r.name = name;
    r.bits_consumed = bits.size();
    return r;
}

TestResult not_applicable(TestResult r, const std::string& why)
{
    r.applicable = false;
    r.pass = false;
    r.note = why;
    return r;
}

// Empirical frequencies of overlapping m-bit patterns with wrap-around.
std::vector<std::size_t> pattern_counts(Bits bits, std::size_t m)
{
    const std::size_t n = bits.size();
    std::vector<std::size_t> counts(std::size_t{1} << m, 0);
    if (m == 0) return counts;
    const std::size_t mask = (std::size_t{1} << m) - 1;
    std::size_t v = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) v = (v << 1) | bits[i % n];
    for (std::size_t i = 0; i < n; ++i) {
        v = ((v << 1) | bits[(i + m - 1) % n]) & mask;
        ++counts[v];
    }
    return counts;
}

double psi_squared(Bits bits, std::size_t m)
{
    if (m == 0) return 0.0;
    const auto counts = pattern_counts(bits, m);
    const double n = static_cast<double>(bits.size());
    double sum = 0.0;
    for (std::size_t c : counts) sum += static_cast<double>(c) * static_cast<double>(c);
    return std::ldexp(1.0, static_cast<int>(m)) / n * sum - n;
}

double apen_phi(Bits bits, std::size_t m)
{
    if (m == 0) return 0.0;
    const auto counts = pattern_counts(bits, m);
    const double n = static_cast<double>(bits.size());
    double sum = 0.0;
    for (std::size_t c : counts)
        if (c > 0) {
            const double p = static_cast<double>(c) / n;
            sum += p * std::log(p);
        }
    return sum;
}

std::mutex& fft_plan_mutex()
{
    static std::mutex m;
    return m;
}

}  // namespace

double TestResult::min_p() const
{
    if (p_values.empty()) return std::numeric_limits<double>::quiet_NaN();
    return *std::min_element(p_values.begin(), p_values.end());
}

double TestResult::param(const std::string& key) const
{
    for (const auto& [k, v] : params)
        if (k == key) return v;
    throw Error("no parameter " + key + " in " + name);
}

void NistConfig::validate() const
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("tests.alpha", "must lie in (0, 1)");
    if (block_frequency_m == 0) throw ValidationError("tests.block_frequency_m", "must be >= 1");
    if (rank_rows == 0 || rank_cols == 0 || rank_cols > 64)
        throw ValidationError("tests.rank", "matrix shape must be positive with at most 64 columns");
    if (non_overlapping_template.empty() || non_overlapping_template.size() > 24 ||
        non_overlapping_template.find_first_not_of("01") != std::string::npos)
        throw ValidationError("tests.non_overlapping_template", "must be a 0/1 string of 1..24 bits");
    if (overlapping_m == 0 || overlapping_m > 24) throw ValidationError("tests.overlapping_m", "must lie in [1, 24]");
    if (overlapping_block < overlapping_m) throw ValidationError("tests.overlapping_block", "must be >= overlapping_m");
    if (linear_complexity_m < 2) throw ValidationError("tests.linear_complexity_m", "must be >= 2");
    if (serial_m < 2 || serial_m > 24) throw ValidationError("tests.serial_m", "must lie in [2, 24]");
    if (approximate_entropy_m < 1 || approximate_entropy_m > 24)
        throw ValidationError("tests.approximate_entropy_m", "must lie in [1, 24]");
    if (universal_l > 16) throw ValidationError("tests.universal_l", "must be <= 16");
}

TestResult frequency_monobit(Bits bits, const NistConfig& c)
{
    TestResult r = start("frequency", bits);
    const std::size_t n = bits.size();
    require_length(c, n >= 100, "frequency test needs n >= 100");
    if (n == 0) throw LengthError("empty input");
    long long s = 0;
    for (std::uint8_t b : bits) s += b ? 1 : -1;
    const double s_obs = std::abs(static_cast<double>(s)) / std::sqrt(static_cast<double>(n));
    r.params = {{"s_obs", s_obs}};
    r.p_values = {std::erfc(s_obs / std::numbers::sqrt2)};
    return finish(r, c);
}

TestResult block_frequency(Bits bits, const NistConfig& c)
{
    TestResult r = start("block_frequency", bits);
    const std::size_t n = bits.size();
    const std::size_t m = c.block_frequency_m;
    require_length(c, n >= 100, "block frequency test needs n >= 100");
    if (n < m) throw LengthError("block frequency test needs at least one block");
    const std::size_t blocks = n / m;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < blocks; ++i) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < m; ++j) ones += bits[i * m + j];
        const double pi = static_cast<double>(ones) / static_cast<double>(m) - 0.5;
        chi2 += pi * pi;
    }
    chi2 *= 4.0 * static_cast<double>(m);
    r.params = {{"M", static_cast<double>(m)}, {"N", static_cast<double>(blocks)}, {"chi2", chi2}};
    r.bits_consumed = blocks * m;
    r.p_values = {igamc(static_cast<double>(blocks) / 2.0, chi2 / 2.0)};
    return finish(r, c);
}

TestResult runs_test(Bits bits, const NistConfig& c)
{
    TestResult r = start("runs", bits);
    const std::size_t n = bits.size();
    require_length(c, n >= 100, "runs test needs n >= 100");
    if (n < 2) throw LengthError("runs test needs at least 2 bits");
    const double dn = static_cast<double>(n);
    const double pi = static_cast<double>(std::count(bits.begin(), bits.end(), std::uint8_t{1})) / dn;
    r.params = {{"pi", pi}};
    if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(dn))
        return not_applicable(r, "frequency prerequisite failed (|pi - 1/2| >= 2/sqrt(n))");
    std::size_t v = 1;
    for (std::size_t i = 0; i + 1 < n; ++i) v += bits[i] != bits[i + 1];
    const double num = std::abs(static_cast<double>(v) - 2.0 * dn * pi * (1.0 - pi));
    const double den = 2.0 * std::sqrt(2.0 * dn) * pi * (1.0 - pi);
    r.params.emplace_back("V", static_cast<double>(v));
    r.p_values = {std::erfc(num / den)};
    return finish(r, c);
}

TestResult longest_run_of_ones(Bits bits, const NistConfig& c)
{
    TestResult r = start("longest_run", bits);
    const std::size_t n = bits.size();
    if (n < 128) throw LengthError("longest-run test needs n >= 128");
    std::size_t m = c.longest_run_m;
    if (m == 0) m = n < 6272 ? 8 : (n < 750000 ? 128 : 10000);

    std::vector<double> pi;
    std::size_t lo = 0;
    if (m == 8) {
        pi = {0.21484375, 0.3671875, 0.23046875, 0.1875};
        lo = 1;
    } else if (m == 128) {
        pi = {0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847};
        lo = 4;
    } else if (m == 10000) {
        pi = {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727};
        lo = 10;
    } else {
        throw ValidationError("tests.longest_run_m", "must be 8, 128 or 10000");
    }
    const std::size_t k = pi.size() - 1;
    const std::size_t blocks = n / m;
    std::vector<double> nu(pi.size(), 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        std::size_t run = 0;
        std::size_t longest = 0;
        for (std::size_t j = 0; j < m; ++j) {
            run = bits[b * m + j] ? run + 1 : 0;
            longest = std::max(longest, run);
        }
        const std::size_t cls = longest <= lo ? 0 : std::min(longest - lo, k);
        nu[cls] += 1.0;
    }
    double chi2 = 0.0;
    const double nb = static_cast<double>(blocks);
    for (std::size_t i = 0; i < pi.size(); ++i) chi2 += (nu[i] - nb * pi[i]) * (nu[i] - nb * pi[i]) / (nb * pi[i]);
    r.params = {{"M", static_cast<double>(m)}, {"N", nb}, {"chi2", chi2}};
    r.bits_consumed = blocks * m;
    r.p_values = {igamc(static_cast<double>(k) / 2.0, chi2 / 2.0)};
    return finish(r, c);
}

std::size_t gf2_rank(Bits bits, std::size_t rows, std::size_t cols)
{
    if (cols == 0 || cols > 64) throw ValidationError("cols", "must lie in [1, 64]");
    if (bits.size() < rows * cols) throw LengthError("not enough bits for the matrix");
    std::vector<std::uint64_t> m(rows, 0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (bits[i * cols + j]) m[i] |= std::uint64_t{1} << (cols - 1 - j);
    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        const std::uint64_t bit = std::uint64_t{1} << (cols - 1 - col);
        std::size_t pivot = rank;
        while (pivot < rows && !(m[pivot] & bit)) ++pivot;
        if (pivot == rows) continue;
        std::swap(m[rank], m[pivot]);
        for (std::size_t i = 0; i < rows; ++i)
            if (i != rank && (m[i] & bit)) m[i] ^= m[rank];
        ++rank;
    }
    return rank;
}

double gf2_rank_probability(std::size_t r, std::size_t rows, std::size_t cols)
{
    if (r > std::min(rows, cols)) return 0.0;
    const double dr = static_cast<double>(r);
    double log2p = dr * static_cast<double>(rows + cols) - dr * dr - static_cast<double>(rows * cols);
    double prod = 1.0;
    for (std::size_t i = 0; i < r; ++i) {
        const double di = static_cast<double>(i);
        prod *= (1.0 - std::exp2(di - static_cast<double>(rows))) * (1.0 - std::exp2(di - static_cast<double>(cols))) /
                (1.0 - std::exp2(di - dr));
    }
    return std::exp2(log2p) * prod;
}

TestResult binary_matrix_rank(Bits bits, const NistConfig& c)
{
    TestResult r = start("rank", bits);
    const std::size_t rows = c.rank_rows;
    const std::size_t cols = c.rank_cols;
    const std::size_t size = rows * cols;
    const std::size_t n = bits.size();
    const std::size_t matrices = n / size;
    require_length(c, matrices >= 38, "rank test needs at least 38 matrices");
    if (matrices == 0) throw LengthError("rank test needs at least one matrix");
    const std::size_t full = std::min(rows, cols);
    double f_full = 0.0;
    double f_minus1 = 0.0;
    for (std::size_t i = 0; i < matrices; ++i) {
        const std::size_t rk = gf2_rank(bits.subspan(i * size, size), rows, cols);
        if (rk == full) f_full += 1.0;
        else if (rk + 1 == full) f_minus1 += 1.0;
    }
    const double p_full = gf2_rank_probability(full, rows, cols);
    const double p_minus1 = full >= 1 ? gf2_rank_probability(full - 1, rows, cols) : 0.0;
    const double p_rest = 1.0 - p_full - p_minus1;
    const double nm = static_cast<double>(matrices);
    const double f_rest = nm - f_full - f_minus1;
    const double chi2 = (f_full - p_full * nm) * (f_full - p_full * nm) / (p_full * nm) +
                        (f_minus1 - p_minus1 * nm) * (f_minus1 - p_minus1 * nm) / (p_minus1 * nm) +
                        (f_rest - p_rest * nm) * (f_rest - p_rest * nm) / (p_rest * nm);
    r.params = {{"M", static_cast<double>(rows)}, {"Q", static_cast<double>(cols)}, {"N", nm}, {"chi2", chi2}};
    r.bits_consumed = matrices * size;
    r.p_values = {std::exp(-chi2 / 2.0)};
    return finish(r, c);
}

TestResult dft_spectral_test(Bits bits, const NistConfig& c)
{
    TestResult r = start("dft", bits);
    const std::size_t n = bits.size();
    require_length(c, n >= 1000, "DFT test needs n >= 1000");
    if (n < 2) throw LengthError("DFT test needs at least 2 bits");
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    for (std::size_t i = 0; i < n; ++i) in[i] = bits[i] ? 1.0 : -1.0;
    fftw_plan plan = nullptr;
    {
        std::lock_guard<std::mutex> lock(fft_plan_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    const double dn = static_cast<double>(n);
    const double threshold = std::sqrt(std::log(1.0 / 0.05) * dn);
    std::size_t below = 0;
    for (std::size_t j = 0; j < n / 2; ++j)
        if (std::hypot(out[j][0], out[j][1]) < threshold) ++below;
    {
        std::lock_guard<std::mutex> lock(fft_plan_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    const double n0 = 0.95 * dn / 2.0;
    const double d = (static_cast<double>(below) - n0) / std::sqrt(dn * 0.95 * 0.05 / 4.0);
    r.params = {{"N0", n0}, {"N1", static_cast<double>(below)}, {"d", d}};
    r.p_values = {std::erfc(std::abs(d) / std::numbers::sqrt2)};
    return finish(r, c);
}

TestResult non_overlapping_template(Bits bits, const NistConfig& c)
{
    TestResult r = start("non_overlapping_template", bits);
    const std::string& tpl = c.non_overlapping_template;
    const std::size_t m = tpl.size();
    const std::size_t blocks = c.non_overlapping_blocks;
    const std::size_t n = bits.size();
    if (blocks == 0) throw ValidationError("tests.non_overlapping_blocks", "must be >= 1");
    const std::size_t len = n / blocks;
    if (len < m) throw LengthError("non-overlapping template test: blocks shorter than the template");
    const double mu = static_cast<double>(len - m + 1) / std::ldexp(1.0, static_cast<int>(m));
    require_length(c, mu >= 5.0, "non-overlapping template test needs >= 5 expected hits per block");
    const double var = static_cast<double>(len) *
                       (1.0 / std::ldexp(1.0, static_cast<int>(m)) -
                        static_cast<double>(2 * m - 1) / std::ldexp(1.0, static_cast<int>(2 * m)));
    double chi2 = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto block = bits.subspan(b * len, len);
        std::size_t hits = 0;
        std::size_t i = 0;
        while (i + m <= len) {
            bool match = true;
            for (std::size_t j = 0; j < m && match; ++j) match = block[i + j] == static_cast<std::uint8_t>(tpl[j] - '0');
            if (match) {
                ++hits;
                i += m;
            } else {
                ++i;
            }
        }
        chi2 += (static_cast<double>(hits) - mu) * (static_cast<double>(hits) - mu) / var;
    }
    r.params = {{"m", static_cast<double>(m)}, {"N", static_cast<double>(blocks)}, {"M", static_cast<double>(len)},
                {"chi2", chi2}};
    r.note = "template " + tpl;
    r.bits_consumed = blocks * len;
    r.p_values = {igamc(static_cast<double>(blocks) / 2.0, chi2 / 2.0)};
    return finish(r, c);
}

std::vector<double> overlapping_template_probabilities(std::size_t m, std::size_t block, std::size_t classes)
{
    if (m == 9 && block == 1032 && classes == 6)
        return {0.364091, 0.185659, 0.139381, 0.100571, 0.070432, 0.139865};
    const double lambda = static_cast<double>(block - m + 1) / std::ldexp(1.0, static_cast<int>(m));
    const double eta = lambda / 2.0;
    std::vector<double> pi(classes, 0.0);
    double acc = 0.0;
    for (std::size_t u = 0; u + 1 < classes; ++u) {
        double p = 0.0;
        if (u == 0) {
            p = std::exp(-eta);
        } else {
            for (std::size_t l = 1; l <= u; ++l) {
                // C(u-1, l-1) eta^l / l!
                const double log_term = std::lgamma(static_cast<double>(u)) - std::lgamma(static_cast<double>(l)) -
                                        std::lgamma(static_cast<double>(u - l + 1)) + static_cast<double>(l) * std::log(eta) -
                                        std::lgamma(static_cast<double>(l + 1));
                p += std::exp(log_term);
            }
            p *= std::exp(-eta) / std::ldexp(1.0, static_cast<int>(u));
        }
        pi[u] = p;
        acc += p;
    }
    pi[classes - 1] = 1.0 - acc;
    return pi;
}

TestResult overlapping_template(Bits bits, const NistConfig& c)
{
    TestResult r = start("overlapping_template", bits);
    const std::size_t m = c.overlapping_m;
    const std::size_t len = c.overlapping_block;
    const std::size_t n = bits.size();
    const std::size_t blocks = n / len;
    if (blocks == 0) throw LengthError("overlapping template test needs at least one block");
    const std::vector<double> pi =
        c.overlapping_probabilities.empty() ? overlapping_template_probabilities(m, len) : c.overlapping_probabilities;
    if (pi.size() < 2) throw ValidationError("tests.overlapping_probabilities", "need at least two classes");
    const double nb = static_cast<double>(blocks);
    require_length(c, nb * *std::min_element(pi.begin(), pi.end()) > 5.0,
                   "overlapping template test needs N min(pi) > 5");
    const std::size_t k = pi.size() - 1;
    std::vector<double> nu(pi.size(), 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        std::size_t hits = 0;
        std::size_t run = 0;
        for (std::size_t j = 0; j < len; ++j) {
            run = bits[b * len + j] ? run + 1 : 0;
            if (run >= m) ++hits;
        }
        nu[std::min(hits, k)] += 1.0;
    }
    double chi2 = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) chi2 += (nu[i] - nb * pi[i]) * (nu[i] - nb * pi[i]) / (nb * pi[i]);
    r.params = {{"m", static_cast<double>(m)}, {"M", static_cast<double>(len)}, {"N", nb}, {"chi2", chi2}};
    for (std::size_t i = 0; i < nu.size(); ++i) r.params.emplace_back("nu" + std::to_string(i), nu[i]);
    r.bits_consumed = blocks * len;
    r.p_values = {igamc(static_cast<double>(k) / 2.0, chi2 / 2.0)};
    return finish(r, c);
}

namespace {

struct UniversalRow {
    std::size_t min_n;
    double expected;
    double variance;
};

// Index L - 1. min_n is where the reference document starts recommending L.
constexpr std::array<UniversalRow, 16> kUniversal{{
    {0, 0.7326495, 0.690},          {0, 1.5374383, 1.338},          {0, 2.4016068, 1.901},
    {0, 3.3112247, 2.358},          {0, 4.2534266, 2.705},          {387840, 5.2177052, 2.954},
    {904960, 6.1962507, 3.125},     {2068480, 7.1836656, 3.238},    {4654080, 8.1764248, 3.311},
    {10342400, 9.1723243, 3.356},   {22753280, 10.170032, 3.384},   {49643520, 11.168765, 3.401},
    {107560960, 12.168070, 3.410},  {231669760, 13.167693, 3.416},  {496435200, 14.167488, 3.419},
    {1059061760, 15.167379, 3.421},
}};

}  // namespace

double universal_p_value(double fn, std::size_t l, std::size_t k, bool finite_k_correction)
{
    if (l < 1 || l > 16) throw ValidationError("L", "must lie in [1, 16]");
    const UniversalRow& row = kUniversal[l - 1];
    double sigma = std::sqrt(row.variance);
    if (finite_k_correction) {
        const double dl = static_cast<double>(l);
        const double cfac = 0.7 - 0.8 / dl + (4.0 + 32.0 / dl) * std::pow(static_cast<double>(k), -3.0 / dl) / 15.0;
        sigma = cfac * std::sqrt(row.variance / static_cast<double>(k));
    }
    return std::erfc(std::abs(fn - row.expected) / (std::numbers::sqrt2 * sigma));
}

TestResult universal_test(Bits bits, const NistConfig& c)
{
    TestResult r = start("universal", bits);
    const std::size_t n = bits.size();
    std::size_t l = c.universal_l;
    if (l == 0) {
        for (std::size_t i = 5; i < kUniversal.size(); ++i)
            if (n >= kUniversal[i].min_n) l = i + 1;
        if (l == 0) throw LengthError("universal test needs n >= 387840");
    }
    const std::size_t q = c.universal_q ? c.universal_q : 10 * (std::size_t{1} << l);
    const std::size_t total_blocks = n / l;
    if (total_blocks <= q) throw LengthError("universal test: no test blocks after initialization");
    const std::size_t k = total_blocks - q;

    std::vector<std::size_t> last(std::size_t{1} << l, 0);
    auto block_value = [&](std::size_t i) {
        std::size_t v = 0;
        for (std::size_t j = 0; j < l; ++j) v = (v << 1) | bits[(i - 1) * l + j];
        return v;
    };
    for (std::size_t i = 1; i <= q; ++i) last[block_value(i)] = i;
    double sum = 0.0;
    for (std::size_t i = q + 1; i <= q + k; ++i) {
        const std::size_t v = block_value(i);
        sum += std::log2(static_cast<double>(i - last[v]));
        last[v] = i;
    }
    const double fn = sum / static_cast<double>(k);
    r.params = {{"L", static_cast<double>(l)}, {"Q", static_cast<double>(q)}, {"K", static_cast<double>(k)}, {"fn", fn}};
    r.bits_consumed = (q + k) * l;
    r.p_values = {universal_p_value(fn, l, k, true)};
    return finish(r, c);
}

std::size_t berlekamp_massey(Bits block)
{
    const std::size_t n = block.size();
    std::vector<std::uint8_t> cpoly(n + 1, 0), bpoly(n + 1, 0), tpoly(n + 1, 0);
    cpoly[0] = bpoly[0] = 1;
    std::size_t l = 0;
    long long m = -1;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint8_t d = block[i];
        for (std::size_t j = 1; j <= l; ++j) d ^= cpoly[j] & block[i - j];
        if (!d) continue;
        tpoly = cpoly;
        const auto shift = static_cast<std::size_t>(static_cast<long long>(i) - m);
        for (std::size_t j = 0; j + shift <= n; ++j) cpoly[j + shift] ^= bpoly[j];
        if (2 * l <= i) {
            l = i + 1 - l;
            m = static_cast<long long>(i);
            bpoly = tpoly;
        }
    }
    return l;
}

TestResult linear_complexity(Bits bits, const NistConfig& c)
{
    TestResult r = start("linear_complexity", bits);
    const std::size_t m = c.linear_complexity_m;
    const std::size_t blocks = bits.size() / m;
    require_length(c, blocks >= 200, "linear complexity test needs at least 200 blocks");
    if (blocks == 0) throw LengthError("linear complexity test needs at least one block");
    const double dm = static_cast<double>(m);
    const double sign = m % 2 == 0 ? 1.0 : -1.0;  // (-1)^M
    const double mu = dm / 2.0 + (9.0 - sign) / 36.0 - (dm / 3.0 + 2.0 / 9.0) / std::pow(2.0, dm);
    std::array<double, 7> pi{1.0 / 96.0, 0.03125, 0.125, 0.5, 0.25, 0.0625, 1.0 / 48.0};
    if (!c.linear_complexity_probabilities.empty()) {
        if (c.linear_complexity_probabilities.size() != 7)
            throw ValidationError("tests.linear_complexity_probabilities", "need exactly 7 classes");
        std::copy(c.linear_complexity_probabilities.begin(), c.linear_complexity_probabilities.end(), pi.begin());
    }
    std::array<double, 7> nu{};
    for (std::size_t b = 0; b < blocks; ++b) {
        const double lc = static_cast<double>(berlekamp_massey(bits.subspan(b * m, m)));
        const double t = sign * (lc - mu) + 2.0 / 9.0;
        std::size_t cls = 0;
        if (t <= -2.5) cls = 0;
        else if (t <= -1.5) cls = 1;
        else if (t <= -0.5) cls = 2;
        else if (t <= 0.5) cls = 3;
        else if (t <= 1.5) cls = 4;
        else if (t <= 2.5) cls = 5;
        else cls = 6;
        nu[cls] += 1.0;
    }
    const double nb = static_cast<double>(blocks);
    double chi2 = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) chi2 += (nu[i] - nb * pi[i]) * (nu[i] - nb * pi[i]) / (nb * pi[i]);
    r.params = {{"M", dm}, {"N", nb}, {"chi2", chi2}};
    for (std::size_t i = 0; i < nu.size(); ++i) r.params.emplace_back("nu" + std::to_string(i), nu[i]);
    r.bits_consumed = blocks * m;
    r.p_values = {igamc(3.0, chi2 / 2.0)};
    return finish(r, c);
}

TestResult serial_test(Bits bits, const NistConfig& c)
{
    TestResult r = start("serial", bits);
    const std::size_t n = bits.size();
    const std::size_t m = c.serial_m;
    if (n == 0) throw LengthError("empty input");
    require_length(c, static_cast<double>(m) < std::floor(std::log2(static_cast<double>(n))) - 2.0,
                   "serial test needs m < floor(log2 n) - 2");
    const double p0 = psi_squared(bits, m);
    const double p1 = psi_squared(bits, m - 1);
    const double p2 = psi_squared(bits, m - 2);
    const double del1 = p0 - p1;
    const double del2 = p0 - 2.0 * p1 + p2;
    r.params = {{"m", static_cast<double>(m)}, {"del1", del1}, {"del2", del2}};
    r.p_values = {igamc(std::ldexp(1.0, static_cast<int>(m) - 2), del1 / 2.0),
                  igamc(std::ldexp(1.0, static_cast<int>(m) - 3), del2 / 2.0)};
    return finish(r, c);
}

TestResult approximate_entropy(Bits bits, const NistConfig& c)
{
    TestResult r = start("approximate_entropy", bits);
    const std::size_t n = bits.size();
    const std::size_t m = c.approximate_entropy_m;
    if (n == 0) throw LengthError("empty input");
    require_length(c, static_cast<double>(m) < std::floor(std::log2(static_cast<double>(n))) - 5.0,
                   "approximate entropy test needs m < floor(log2 n) - 5");
    const double apen = apen_phi(bits, m) - apen_phi(bits, m + 1);
    const double chi2 = 2.0 * static_cast<double>(n) * (std::numbers::ln2 - apen);
    r.params = {{"m", static_cast<double>(m)}, {"ApEn", apen}, {"chi2", chi2}};
    r.p_values = {igamc(std::ldexp(1.0, static_cast<int>(m) - 1), chi2 / 2.0)};
    return finish(r, c);
}

namespace {

double cusum_p(double z, double n)
{
    const double sn = std::sqrt(n);
    double sum1 = 0.0;
    const auto k1_lo = static_cast<long long>(std::floor((-n / z + 1.0) / 4.0));
    const auto k1_hi = static_cast<long long>(std::floor((n / z - 1.0) / 4.0));
    for (long long k = k1_lo; k <= k1_hi; ++k) {
        const double dk = static_cast<double>(k);
        sum1 += normal_cdf((4.0 * dk + 1.0) * z / sn) - normal_cdf((4.0 * dk - 1.0) * z / sn);
    }
    double sum2 = 0.0;
    const auto k2_lo = static_cast<long long>(std::floor((-n / z - 3.0) / 4.0));
    for (long long k = k2_lo; k <= k1_hi; ++k) {
        const double dk = static_cast<double>(k);
        sum2 += normal_cdf((4.0 * dk + 3.0) * z / sn) - normal_cdf((4.0 * dk + 1.0) * z / sn);
    }
    return 1.0 - sum1 + sum2;
}

}  // namespace

TestResult cumulative_sums(Bits bits, const NistConfig& c)
{
    TestResult r = start("cumulative_sums", bits);
    const std::size_t n = bits.size();
    require_length(c, n >= 100, "cumulative sums test needs n >= 100");
    if (n == 0) throw LengthError("empty input");
    long long s = 0;
    long long z_fwd = 0;
    for (std::size_t i = 0; i < n; ++i) {
        s += bits[i] ? 1 : -1;
        z_fwd = std::max(z_fwd, std::llabs(s));
    }
    s = 0;
    long long z_rev = 0;
    for (std::size_t i = n; i-- > 0;) {
        s += bits[i] ? 1 : -1;
        z_rev = std::max(z_rev, std::llabs(s));
    }
    const double dn = static_cast<double>(n);
    r.params = {{"z_forward", static_cast<double>(z_fwd)}, {"z_reverse", static_cast<double>(z_rev)}};
    r.p_values = {cusum_p(static_cast<double>(z_fwd), dn), cusum_p(static_cast<double>(z_rev), dn)};
    return finish(r, c);
}

namespace {

// Zero-terminated walk cycles of S' = 0, S_1, ..., S_n, 0.
struct Excursions {
    std::size_t cycles = 0;
    std::vector<long long> walk;
};

Excursions excursion_walk(Bits bits)
{
    Excursions e;
    e.walk.reserve(bits.size());
    long long s = 0;
    for (std::uint8_t b : bits) {
        s += b ? 1 : -1;
        e.walk.push_back(s);
        if (s == 0) ++e.cycles;
    }
    if (s != 0) ++e.cycles;
    return e;
}

bool enough_cycles(const NistConfig& c, std::size_t cycles, std::size_t n)
{
    const double need = std::max(0.005 * std::sqrt(static_cast<double>(n)), 500.0);
    return !c.enforce_length || static_cast<double>(cycles) >= need;
}

}  // namespace

TestResult random_excursions(Bits bits, const NistConfig& c)
{
    TestResult r = start("random_excursions", bits);
    const std::size_t n = bits.size();
    require_length(c, n >= 1000000, "random excursions test needs n >= 10^6");
    if (n == 0) throw LengthError("empty input");
    const Excursions e = excursion_walk(bits);
    r.params = {{"J", static_cast<double>(e.cycles)}};
    if (!enough_cycles(c, e.cycles, n)) return not_applicable(r, "too few zero crossings (J < 500)");

    constexpr std::array<int, 8> states{-4, -3, -2, -1, 1, 2, 3, 4};
    // visits[state][cycle visits class 0..5]
    std::array<std::array<double, 6>, 8> nu{};
    std::array<std::size_t, 8> in_cycle{};
    auto close_cycle = [&] {
        for (std::size_t s = 0; s < 8; ++s) {
            nu[s][std::min<std::size_t>(in_cycle[s], 5)] += 1.0;
            in_cycle[s] = 0;
        }
    };
    for (long long v : e.walk) {
        if (v == 0) {
            close_cycle();
        } else if (v >= -4 && v <= 4) {
            const std::size_t idx = v < 0 ? static_cast<std::size_t>(v + 4) : static_cast<std::size_t>(v + 3);
            ++in_cycle[idx];
        }
    }
    if (e.walk.empty() || e.walk.back() != 0) close_cycle();

    const double j = static_cast<double>(e.cycles);
    for (std::size_t s = 0; s < 8; ++s) {
        const double ax = std::abs(static_cast<double>(states[s]));
        std::array<double, 6> pi{};
        pi[0] = 1.0 - 1.0 / (2.0 * ax);
        for (int k = 1; k <= 4; ++k) pi[k] = 1.0 / (4.0 * ax * ax) * std::pow(1.0 - 1.0 / (2.0 * ax), k - 1);
        pi[5] = 1.0 / (2.0 * ax) * std::pow(1.0 - 1.0 / (2.0 * ax), 4);
        double chi2 = 0.0;
        for (std::size_t k = 0; k < 6; ++k) chi2 += (nu[s][k] - j * pi[k]) * (nu[s][k] - j * pi[k]) / (j * pi[k]);
        r.p_values.push_back(igamc(2.5, chi2 / 2.0));
        r.params.emplace_back("chi2[" + std::to_string(states[s]) + "]", chi2);
    }
    return finish(r, c);
}

TestResult random_excursions_variant(Bits bits, const NistConfig& c)
{
    TestResult r = start("random_excursions_variant", bits);
    const std::size_t n = bits.size();
    require_length(c, n >= 1000000, "random excursions variant test needs n >= 10^6");
    if (n == 0) throw LengthError("empty input");
    const Excursions e = excursion_walk(bits);
    r.params = {{"J", static_cast<double>(e.cycles)}};
    if (!enough_cycles(c, e.cycles, n)) return not_applicable(r, "too few zero crossings (J < 500)");
    std::array<double, 19> visits{};
    for (long long v : e.walk)
        if (v >= -9 && v <= 9) visits[static_cast<std::size_t>(v + 9)] += 1.0;
    const double j = static_cast<double>(e.cycles);
    for (int x = -9; x <= 9; ++x) {
        if (x == 0) continue;
        const double xi = visits[static_cast<std::size_t>(x + 9)];
        const double ax = std::abs(static_cast<double>(x));
        r.p_values.push_back(std::erfc(std::abs(xi - j) / std::sqrt(2.0 * j * (4.0 * ax - 2.0))));
        r.params.emplace_back("xi[" + std::to_string(x) + "]", xi);
    }
    return finish(r, c);
}

BatterySummary run_battery(Bits bits, const NistConfig& config)
{
    config.validate();
    require_bits(bits);
    using Fn = TestResult (*)(Bits, const NistConfig&);
    const std::array<std::pair<const char*, Fn>, 15> tests{{
        {"frequency", frequency_monobit},
        {"block_frequency", block_frequency},
        {"runs", runs_test},
        {"longest_run", longest_run_of_ones},
        {"rank", binary_matrix_rank},
        {"dft", dft_spectral_test},
        {"non_overlapping_template", non_overlapping_template},
        {"overlapping_template", overlapping_template},
        {"universal", universal_test},
        {"linear_complexity", linear_complexity},
        {"serial", serial_test},
        {"approximate_entropy", approximate_entropy},
        {"cumulative_sums", cumulative_sums},
        {"random_excursions", random_excursions},
        {"random_excursions_variant", random_excursions_variant},
    }};
    BatterySummary summary;
    for (const auto& [name, fn] : tests) {
        TestResult r;
        try {
            r = fn(bits, config);
        } catch (const LengthError& e) {
            r.name = name;
            r.applicable = false;
            r.pass = false;
            r.note = e.what();
        }
        if (r.applicable) {
            ++summary.applicable;
            if (r.pass) ++summary.passed;
        }
        summary.results.push_back(std::move(r));
    }
    return summary;
}

std::string battery_json(const BatterySummary& summary, int indent)
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const TestResult& r : summary.results) {
        nlohmann::ordered_json params = nlohmann::ordered_json::object();
        for (const auto& [k, v] : r.params) params[k] = v;
        if (!r.note.empty()) params["note"] = r.note;
        nlohmann::ordered_json item;
        item["name"] = r.name;
        item["p_values"] = r.p_values;
        item["pass"] = r.pass;
        item["applicable"] = r.applicable;
        item["params"] = params;
        arr.push_back(item);
    }
    return arr.dump(indent) + "\n";
}

std::vector<std::uint8_t> reference_bits(std::uint64_t seed, std::size_t n)
{
    if (sodium_init() < 0) throw Error("libsodium failed to initialise");
    unsigned char key[randombytes_SEEDBYTES] = {};
    for (int i = 0; i < 8; ++i) key[i] = static_cast<unsigned char>(seed >> (8 * i));
    std::vector<unsigned char> bytes((n + 7) / 8);
    randombytes_buf_deterministic(bytes.data(), bytes.size(), key);
    std::vector<std::uint8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
    return bits;
}

}  // namespace softdyn
