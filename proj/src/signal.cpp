#include "softdyn/signal.hpp"

#include "softdyn/error.hpp"
#include "softdyn/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace softdyn {

WaveKind parse_wave_kind(const std::string& s)
{
    if (s == "sine") return WaveKind::Sine;
    if (s == "square") return WaveKind::Square;
    if (s == "sawtooth" || s == "saw") return WaveKind::Sawtooth;
    throw ValidationError("kind", "expected sine, square or sawtooth, got '" + s + "'");
}

std::string wave_kind_name(WaveKind k)
{
    switch (k) {
    case WaveKind::Sine: return "sine";
    case WaveKind::Square: return "square";
    case WaveKind::Sawtooth: return "sawtooth";
    }
    return "?";
}

std::vector<double> waveform(WaveKind kind, std::size_t n_points, double period, double amplitude, double phase)
{
    if (!(period >= 4.0)) throw ValidationError("period", "must be at least 4 samples");
    if (!std::isfinite(amplitude) || !std::isfinite(phase)) throw ValidationError("amplitude", "must be finite");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> out(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double cyc = static_cast<double>(i) / period + phase / two_pi;
        const double frac = cyc - std::floor(cyc);
        switch (kind) {
        case WaveKind::Sine: out[i] = amplitude * std::sin(two_pi * cyc); break;
        // frac keeps the sign convention exact at zero crossings: +A on [0, T/2)
        case WaveKind::Square: out[i] = frac < 0.5 ? amplitude : -amplitude; break;
        case WaveKind::Sawtooth: out[i] = amplitude * (2.0 * frac - 1.0); break;
        }
    }
    return out;
}

double MGParams::effective_warmup() const { return std::max(warmup, 10.0 * tau); }

void MGParams::validate(const std::string& path) const
{
    auto req = [&](bool ok, const char* f, const char* what) {
        if (!ok) throw ValidationError(path + "." + f, what);
    };
    req(std::isfinite(beta) && beta >= 0.0, "beta", "must be >= 0");
    req(std::isfinite(gamma) && gamma > 0.0, "gamma", "must be > 0");
    req(std::isfinite(tau) && tau > 0.0, "tau", "must be > 0");
    req(std::isfinite(exponent) && exponent >= 1.0, "n", "must be >= 1");
    req(std::isfinite(dt) && dt > 0.0 && dt <= tau, "dt", "must lie in (0, tau]");
    req(std::isfinite(history), "history", "must be finite");
    req(n_points >= 1, "n_points", "must be >= 1");
    req(stride >= 1, "stride", "must be >= 1");
    req(std::isfinite(warmup) && warmup >= 0.0, "warmup", "must be >= 0");
}

namespace {

class DelayHistory {
public:
    DelayHistory(double dt, double x0) : dt_(dt) { xs_.push_back(x0); }

    void push(double x) { xs_.push_back(x); }

    // Value at time s (s <= current time). Before t = 0 the history is constant.
    double at(double s, double x0) const
    {
        if (s <= 0.0) return x0;
        const double pos = s / dt_;
        const auto i = static_cast<long long>(std::floor(pos + 1e-9));
        const double r = pos - static_cast<double>(i);
        const auto last = static_cast<long long>(xs_.size()) - 1;
        if (std::abs(r) < 1e-9 && i <= last) return xs_[static_cast<std::size_t>(i)];
        // four-point Lagrange stencil i-1..i+2, shifted to stay inside [0, last]
        // and kept off the kink at t = 0 where the constant history ends
        const long long b = std::max(0LL, std::min(i - 1, last - 3));
        double xsn[4];
        for (int j = 0; j < 4; ++j) {
            const long long k = b + j;
            xsn[j] = k < 0 ? x0 : xs_[static_cast<std::size_t>(k)];
        }
        const double u = pos - static_cast<double>(b);  // stencil nodes at 0,1,2,3
        const double l0 = -(u - 1) * (u - 2) * (u - 3) / 6.0;
        const double l1 = u * (u - 2) * (u - 3) / 2.0;
        const double l2 = -u * (u - 1) * (u - 3) / 2.0;
        const double l3 = u * (u - 1) * (u - 2) / 6.0;
        return l0 * xsn[0] + l1 * xsn[1] + l2 * xsn[2] + l3 * xsn[3];
    }

private:
    double dt_;
    std::vector<double> xs_;
};

}  // namespace

std::vector<double> mackey_glass(const MGParams& p)
{
    p.validate();
    const double x0 = p.history;
    auto f = [&](double x, double xd) {
        return p.beta * xd / (1.0 + std::pow(std::abs(xd), p.exponent)) - p.gamma * x;
    };

    DelayHistory hist(p.dt, x0);
    const auto warm_steps = static_cast<std::size_t>(std::ceil(p.effective_warmup() / p.dt - 1e-9));
    const std::size_t total = warm_steps + (p.n_points - 1) * p.stride;

    std::vector<double> out;
    out.reserve(p.n_points);
    double x = x0;
    if (warm_steps == 0) out.push_back(x);
    for (std::size_t s = 1; s <= total; ++s) {
        const double t = static_cast<double>(s - 1) * p.dt;
        const double d0 = hist.at(t - p.tau, x0);
        const double dh = hist.at(t + 0.5 * p.dt - p.tau, x0);
        const double d1 = hist.at(t + p.dt - p.tau, x0);
        const double k1 = f(x, d0);
        const double k2 = f(x + 0.5 * p.dt * k1, dh);
        const double k3 = f(x + 0.5 * p.dt * k2, dh);
        const double k4 = f(x + p.dt * k3, d1);
        x += p.dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!std::isfinite(x)) throw IntegrationDiverged(t + p.dt);
        hist.push(x);
        if (s >= warm_steps && (s - warm_steps) % p.stride == 0) out.push_back(x);
    }
    return out;
}

std::vector<double> rescale_unit(const std::vector<double>& v)
{
    if (v.empty()) return {};
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double a = *lo;
    const double span = *hi - *lo;
    std::vector<double> out(v.size(), 0.0);
    if (span > 0.0)
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - a) / span;
    return out;
}

std::string series_csv(const std::vector<double>& v)
{
    CsvBuilder csv("index,value");
    for (std::size_t i = 0; i < v.size(); ++i) csv.row({static_cast<double>(i), v[i]});
    return csv.str();
}

}  // namespace softdyn
