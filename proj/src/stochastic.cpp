#include "softdyn/stochastic.hpp"

#include "softdyn/error.hpp"
#include "softdyn/io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>

namespace softdyn {

namespace {

void check_width(unsigned k)
{
    if (k == 0 || k > 16) throw ValidationError("k", "must lie in [1, 16]");
}

}  // namespace

double StochasticNumber::probability() const
{
    if (bits.empty()) throw LengthError("empty stochastic number");
    std::size_t ones = 0;
    for (std::uint8_t b : bits) ones += b;
    return static_cast<double>(ones) / static_cast<double>(bits.size());
}

IntegerStream::IntegerStream(std::span<const std::uint32_t> values, unsigned width) : values_(values), width_(width)
{
    check_width(width);
}

std::span<const std::uint32_t> IntegerStream::take(std::size_t n)
{
    if (n > remaining())
        throw InsufficientRandomnessError("random stream exhausted: need " + std::to_string(n) + ", have " +
                                          std::to_string(remaining()));
    const auto out = values_.subspan(pos_, n);
    for (std::uint32_t v : out)
        if (v >> width_) throw RangeError("random integer exceeds the stream width");
    pos_ += n;
    return out;
}

StochasticNumber sng(std::uint32_t x, unsigned k, IntegerStream& rnd, std::size_t n)
{
    check_width(k);
    if (x >> k) throw ValidationError("X", "must lie in [0, 2^k - 1]");
    if (n == 0) throw ValidationError("N", "must be >= 1");
    const auto draws = rnd.take(n);
    StochasticNumber s;
    s.width = k;
    s.bits.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.bits[i] = draws[i] < x ? 1 : 0;
    return s;
}

StochasticNumber and_multiply(const StochasticNumber& a, const StochasticNumber& b)
{
    if (a.size() != b.size()) throw ShapeError("operand bitstreams differ in length");
    StochasticNumber out;
    out.width = a.width;
    out.bits.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.bits[i] = a.bits[i] & b.bits[i];
    return out;
}

double product_scale(unsigned k, Denominator d)
{
    check_width(k);
    const double base = d == Denominator::PowerOfTwo ? std::ldexp(1.0, static_cast<int>(k))
                                                     : std::ldexp(1.0, static_cast<int>(k)) - 1.0;
    return base * base;
}

long long decode_product(const StochasticNumber& s, unsigned k, Denominator d)
{
    return std::llround(s.probability() * product_scale(k, d));
}

MultiplyResult stochastic_multiply(std::uint32_t x1, std::uint32_t x2, unsigned k, std::size_t n,
                                   std::span<const std::uint32_t> rnd, Denominator d)
{
    IntegerStream stream(rnd, k);
    const StochasticNumber a = sng(x1, k, stream, n);
    const StochasticNumber b = sng(x2, k, stream, n);
    const StochasticNumber z = and_multiply(a, b);

    MultiplyResult r;
    r.x1 = x1;
    r.x2 = x2;
    r.k = k;
    r.n = n;
    r.estimate = decode_product(z, k, d);
    r.exact = static_cast<long long>(x1) * static_cast<long long>(x2);
    r.rel_error = r.exact != 0 ? std::abs(static_cast<double>(r.estimate - r.exact)) / static_cast<double>(r.exact)
                               : static_cast<double>(r.estimate != 0);
    const double scale = product_scale(k, d);
    r.running_estimate.resize(n);
    std::size_t ones = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ones += z.bits[i];
        r.running_estimate[i] = scale * static_cast<double>(ones) / static_cast<double>(i + 1);
    }
    return r;
}

MultiplierSweep multiplier_sweep(std::uint32_t x1, const std::vector<std::uint32_t>& multipliers, unsigned k,
                                 std::size_t n, std::span<const std::uint32_t> rnd, Denominator d)
{
    if (rnd.size() < 2 * n * multipliers.size())
        throw InsufficientRandomnessError("multiplier sweep needs 2 N integers per multiplier");
    MultiplierSweep sweep;
    double sq = 0.0;
    for (std::size_t i = 0; i < multipliers.size(); ++i) {
        const MultiplyResult r = stochastic_multiply(x1, multipliers[i], k, n, rnd.subspan(2 * n * i, 2 * n), d);
        sweep.points.push_back({multipliers[i], r.estimate, r.exact});
        const double e = static_cast<double>(r.estimate - r.exact);
        sq += e * e;
    }
    sweep.distance = std::sqrt(sq);
    return sweep;
}

std::vector<std::uint32_t> reference_integers(std::uint64_t seed, std::size_t count, unsigned k)
{
    check_width(k);
    std::mt19937_64 g(seed);
    std::vector<std::uint32_t> out(count);
    for (auto& v : out) v = static_cast<std::uint32_t>(g() >> (64 - k));
    return out;
}

std::string multiply_json(const MultiplyResult& r)
{
    nlohmann::ordered_json j;
    j["x1"] = r.x1;
    j["x2"] = r.x2;
    j["k"] = r.k;
    j["n"] = r.n;
    j["estimate"] = r.estimate;
    j["exact"] = r.exact;
    j["rel_error"] = r.rel_error;
    return j.dump(2) + "\n";
}

std::string convergence_csv(const MultiplyResult& r)
{
    CsvBuilder csv("n,estimate");
    for (std::size_t i = 0; i < r.running_estimate.size(); ++i)
        csv.row({static_cast<double>(i + 1), r.running_estimate[i]});
    return csv.str();
}

}  // namespace softdyn
