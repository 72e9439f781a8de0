#include "softdyn/trng.hpp"

#include "softdyn/error.hpp"
#include "softdyn/io.hpp"
#include "softdyn/trajectory_io.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>

namespace softdyn {

void RawCoordinateStream::append_run(std::span<const double> run)
{
    run_starts.push_back(values.size());
    values.insert(values.end(), run.begin(), run.end());
}

std::vector<double> strip_constant_runs(const RawCoordinateStream& stream)
{
    std::vector<std::size_t> starts = stream.run_starts;
    if (starts.empty() || starts.front() != 0) starts.insert(starts.begin(), 0);
    if (!std::is_sorted(starts.begin(), starts.end())) throw ValidationError("run_starts", "must be sorted");
    std::vector<double> out;
    out.reserve(stream.values.size());
    std::size_t next_start = 1;
    for (std::size_t i = 0; i < stream.values.size(); ++i) {
        const double v = stream.values[i];
        if (!std::isfinite(v)) throw ValidationError("values", "non-finite coordinate at index " + std::to_string(i));
        bool boundary = i == 0;
        while (next_start < starts.size() && starts[next_start] <= i) {
            boundary = boundary || starts[next_start] == i;
            ++next_start;
        }
        if (boundary || v != stream.values[i - 1]) out.push_back(v);
    }
    return out;
}

UniformStream whiten_blocks(const RawCoordinateStream& stream, const WhitenOptions& options)
{
    if (options.block_size <= 2 * options.trim) throw ValidationError("block_size", "must exceed twice the trim");
    const std::vector<double> stripped = strip_constant_runs(stream);
    const std::size_t blocks = stripped.size() / options.block_size;
    if (blocks == 0)
        throw InsufficientDataError("fewer than " + std::to_string(options.block_size) +
                                    " values remain after removing constant runs");

    const std::size_t kept = options.block_size - 2 * options.trim;
    UniformStream out;
    out.values.reserve(blocks * kept);
    out.block.reserve(blocks * kept);
    std::vector<std::size_t> order(options.block_size);
    std::vector<std::uint8_t> drop(options.block_size);
    std::vector<double> sorted(kept);
    for (std::size_t b = 0; b < blocks; ++b) {
        const double* block = stripped.data() + b * options.block_size;
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [block](std::size_t a, std::size_t c) { return block[a] < block[c]; });
        std::fill(drop.begin(), drop.end(), 0);
        for (std::size_t i = 0; i < options.trim; ++i) {
            drop[order[i]] = 1;
            drop[order[options.block_size - 1 - i]] = 1;
        }
        for (std::size_t i = 0; i < kept; ++i) sorted[i] = block[order[options.trim + i]];
        // The min-max map to [0, 1] is monotone, so the empirical CDF of the trimmed
        // block can be read straight from ranks.
        const double m = static_cast<double>(kept);
        for (std::size_t i = 0; i < options.block_size; ++i) {
            if (drop[i]) continue;
            const auto rank = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), block[i]) - sorted.begin());
            out.values.push_back(static_cast<double>(rank) / m);
            out.block.push_back(b);
        }
    }
    return out;
}

std::vector<std::uint32_t> BitStream::integers() const
{
    if (width == 0 || width > 32) throw ValidationError("width", "must lie in [1, 32]");
    if (bits.size() % width != 0) throw LengthError("bit count is not a multiple of the integer width");
    std::vector<std::uint32_t> out(bits.size() / width);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t v = 0;
        for (unsigned b = 0; b < width; ++b) v = (v << 1) | bits[i * width + b];
        out[i] = v;
    }
    return out;
}

BitStream BitStream::from_integers(std::span<const std::uint32_t> values, unsigned width)
{
    if (width == 0 || width > 32) throw ValidationError("width", "must lie in [1, 32]");
    BitStream s;
    s.width = width;
    s.bits.reserve(values.size() * width);
    for (std::uint32_t v : values) {
        if (width < 32 && v >> width) throw RangeError("integer does not fit the bit width");
        for (unsigned b = width; b-- > 0;) s.bits.push_back(static_cast<std::uint8_t>((v >> b) & 1u));
    }
    return s;
}

std::uint32_t quantize(double u, unsigned k)
{
    const double levels = std::ldexp(1.0, static_cast<int>(k));
    const double top = levels - 1.0;
    const double q = std::floor(std::clamp(u, 0.0, 1.0) * levels);
    return static_cast<std::uint32_t>(std::min(q, top));
}

BitStream decimate_quantize(const UniformStream& u, std::size_t stride, unsigned k)
{
    if (stride == 0) throw ValidationError("stride", "must be >= 1");
    if (k == 0 || k > 32) throw ValidationError("k", "must lie in [1, 32]");
    if (u.values.empty()) throw InsufficientDataError("empty uniform stream");
    std::vector<std::uint32_t> ints;
    ints.reserve(u.values.size() / stride + 1);
    for (std::size_t i = 0; i < u.values.size(); i += stride) ints.push_back(quantize(u.values[i], k));
    return BitStream::from_integers(ints, k);
}

std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag)
{
    const std::size_t n = series.size();
    if (n <= max_lag + 1) throw LengthError("series must be longer than max_lag + 1");
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : series) var += (v - mean) * (v - mean);
    if (!(var > 0.0)) throw UndefinedVarianceError("autocorrelation of a constant series is undefined");
    std::vector<double> rho(max_lag + 1);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) acc += (series[i] - mean) * (series[i + lag] - mean);
        rho[lag] = acc / var;
    }
    rho[0] = 1.0;
    return rho;
}

std::vector<double> autocorrelation(std::span<const std::uint32_t> series, std::size_t max_lag)
{
    const std::vector<double> d(series.begin(), series.end());
    return autocorrelation(std::span<const double>(d), max_lag);
}

double ks_p_value(double d, std::size_t n)
{
    if (n == 0) throw ValidationError("n", "must be > 0");
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda <= 0.0) return 1.0;
    double p = 0.0;
    if (lambda < 1.18) {
        // Jacobi theta form converges fast for small arguments.
        const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
        double sum = 0.0;
        for (int k = 1; k <= 20; ++k) sum += std::exp(-static_cast<double>((2 * k - 1) * (2 * k - 1)) * c);
        p = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum;
    } else {
        double sum = 0.0;
        for (int k = 1; k <= 100; ++k) {
            const double term = std::exp(-2.0 * k * k * lambda * lambda);
            sum += (k % 2 ? 1.0 : -1.0) * term;
            if (term < 1e-18) break;
        }
        p = 2.0 * sum;
    }
    return std::clamp(p, 0.0, 1.0);
}

UniformityReport uniformity_diagnostics(std::span<const double> u)
{
    const std::size_t n = u.size();
    if (n < 100) throw InsufficientDataError("uniformity diagnostics need at least 100 values");
    UniformityReport r;
    r.sample_q.assign(u.begin(), u.end());
    std::sort(r.sample_q.begin(), r.sample_q.end());
    r.theoretical_q.resize(n);
    const double dn = static_cast<double>(n);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double q = static_cast<double>(i + 1) / dn;
        r.theoretical_q[i] = q;
        const double v = std::clamp(r.sample_q[i], 0.0, 1.0);
        r.max_qq_deviation = std::max(r.max_qq_deviation, std::abs(r.sample_q[i] - q));
        d = std::max({d, q - v, v - static_cast<double>(i) / dn});
    }
    r.ks_statistic = d;
    r.ks_p_value = ks_p_value(d, n);
    return r;
}

double chi_square_uniform_p(std::span<const std::uint32_t> values, std::size_t bins)
{
    if (bins < 2) throw ValidationError("bins", "must be >= 2");
    if (values.empty()) throw InsufficientDataError("no values");
    std::vector<double> counts(bins, 0.0);
    for (std::uint32_t v : values) {
        if (v >= bins) throw RangeError("value outside the histogram range");
        counts[v] += 1.0;
    }
    const double expected = static_cast<double>(values.size()) / static_cast<double>(bins);
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    return boost::math::gamma_q(0.5 * static_cast<double>(bins - 1), 0.5 * chi2);
}

RawCoordinateStream simulate_coordinate_stream(const OscillatorConfig& config, const TrngSourceOptions& options,
                                               const SeedTree& seeds)
{
    options.drive.validate("trng.drive");
    if (options.runs == 0) throw ValidationError("trng.runs", "must be >= 1");
    if (!(options.duration_s > 0.0)) throw ValidationError("trng.duration", "must be > 0");
    if (!(options.settle_s >= 0.0)) throw ValidationError("trng.settle", "must be >= 0");
    const double f = options.drive.frequency_hz;
    const auto settle_periods = static_cast<std::size_t>(std::ceil(options.settle_s * f - 1e-9));
    const auto periods = static_cast<std::size_t>(std::floor(options.duration_s * f + 1e-9));

    RawCoordinateStream stream;
    for (std::size_t r = 0; r < options.runs; ++r) {
        std::mt19937_64 g = seeds.stream("trng/initial", r);
        SimulationOptions sim;
        sim.dt_s = 1.0 / (static_cast<double>(options.steps_per_period) * f);
        sim.duration_s = static_cast<double>(settle_periods + periods) / f;
        sim.initial.q1 = options.initial_spread * (2.0 * uniform01(g) - 1.0);
        sim.initial.q2 = options.initial_spread * (2.0 * uniform01(g) - 1.0);
        const Trajectory traj = tail(simulate(config, options.drive, sim), static_cast<double>(settle_periods) / f);
        const PoincareMap map = poincare_sample(traj, options.drive, 0.0);
        std::vector<double> run;
        run.reserve(map.size() * (options.include_y ? 2 : 1));
        for (std::size_t i = 0; i < map.size(); ++i) {
            run.push_back(map.x[i]);
            if (options.include_y) run.push_back(map.y[i]);
        }
        stream.append_run(run);
    }
    return stream;
}

std::string bits_ascii(const BitStream& bits)
{
    std::string out;
    out.reserve(bits.size() + bits.size() / 64 + 1);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        out += bits.bits[i] ? '1' : '0';
        if (i % 64 == 63) out += '\n';
    }
    if (bits.size() % 64 != 0) out += '\n';
    return out;
}

BitStream parse_bits_ascii(std::string_view text, unsigned width)
{
    BitStream s;
    s.width = width;
    std::size_t line = 1;
    for (char c : text) {
        if (c == '0' || c == '1') s.bits.push_back(static_cast<std::uint8_t>(c - '0'));
        else if (c == '\n') ++line;
        else if (c != '\r' && c != ' ' && c != '\t') throw ParseError(line, std::string("unexpected character '") + c + "'");
    }
    return s;
}

std::string integers_csv(std::span<const std::uint32_t> values)
{
    std::string out = "index,value\n";
    for (std::size_t i = 0; i < values.size(); ++i) out += std::to_string(i) + ',' + std::to_string(values[i]) + '\n';
    return out;
}

std::vector<std::uint32_t> parse_integers_csv(std::string_view text, unsigned width)
{
    std::vector<std::uint32_t> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line_no == 1) {
            if (line != "index,value") throw ParseError(line_no, "expected header index,value");
            continue;
        }
        if (line.empty() || line.front() == '#') continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string_view::npos) throw ParseError(line_no, "expected two fields");
        const std::string_view v = line.substr(comma + 1);
        std::uint64_t value = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
        if (ec != std::errc{} || ptr != v.data() + v.size()) throw ParseError(line_no, "value is not an integer");
        if (value >> width) throw ParseError(line_no, "value exceeds " + std::to_string(width) + " bits");
        out.push_back(static_cast<std::uint32_t>(value));
    }
    return out;
}

std::string autocorrelation_csv(std::span<const double> rho)
{
    CsvBuilder csv("lag,rho");
    for (std::size_t i = 0; i < rho.size(); ++i) csv.row({static_cast<double>(i), rho[i]});
    return csv.str();
}

std::string qq_csv(const UniformityReport& report)
{
    CsvBuilder csv("theoretical_q,sample_q");
    for (std::size_t i = 0; i < report.sample_q.size(); ++i) csv.row({report.theoretical_q[i], report.sample_q[i]});
    return csv.str();
}

TrngOutput run_trng_pipeline(const OscillatorConfig& config, const TrngPipelineOptions& options,
                             const SeedTree& seeds)
{
    TrngOutput o;
    o.raw = simulate_coordinate_stream(config, options.source, seeds);
    o.uniform = whiten_blocks(o.raw, options.whiten);
    o.bits = decimate_quantize(o.uniform, options.stride, options.bits);
    o.integers = o.bits.integers();
    o.rho = autocorrelation(std::span<const std::uint32_t>(o.integers), options.max_lag);
    for (std::size_t l = 1; l < o.rho.size(); ++l) o.max_abs_rho = std::max(o.max_abs_rho, std::abs(o.rho[l]));
    o.rho_bound = 3.0 / std::sqrt(static_cast<double>(o.integers.size()));
    o.uniformity = uniformity_diagnostics(o.uniform.values);
    o.chi_square_p = chi_square_uniform_p(o.integers, std::size_t{1} << options.bits);
    return o;
}

}  // namespace softdyn
