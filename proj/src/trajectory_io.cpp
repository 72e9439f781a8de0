#include "softdyn/trajectory_io.hpp"

#include "softdyn/error.hpp"
#include "softdyn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string_view>

namespace softdyn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

bool parse_double(std::string_view s, double& out)
{
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

double wrap_phase(double f, double t)
{
    double ph = std::fmod(kTwoPi * f * t, kTwoPi);
    if (ph < 0.0) ph += kTwoPi;
    return ph;
}

}  // namespace

bool TrackedSeries::all_valid() const
{
    return std::all_of(valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; });
}

TrackedSeries load_tracked_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return parse_tracked_csv(in);
}

TrackedSeries parse_tracked_csv(std::istream& in)
{
    TrackedSeries s;
    std::string raw;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto cells = split_commas(line);
        if (!have_header) {
            if (cells.size() != 3 || cells[0] != "t_s" || cells[1] != "x" || cells[2] != "y")
                throw ParseError(line_no, "expected header t_s,x,y");
            have_header = true;
            continue;
        }
        if (cells.size() != 3) throw ParseError(line_no, "expected 3 fields, found " + std::to_string(cells.size()));
        double t = 0.0;
        if (!parse_double(cells[0], t)) throw ParseError(line_no, "bad time value");
        double x = 0.0;
        double y = 0.0;
        bool ok = true;
        if (cells[1].empty()) ok = false;
        else if (!parse_double(cells[1], x)) throw ParseError(line_no, "bad x value");
        if (cells[2].empty()) ok = false;
        else if (!parse_double(cells[2], y)) throw ParseError(line_no, "bad y value");
        if (!s.t.empty() && !(t > s.t.back())) throw SchemaError(line_no, "time is not strictly increasing");
        s.t.push_back(t);
        s.x.push_back(ok ? x : 0.0);
        s.y.push_back(ok ? y : 0.0);
        s.valid.push_back(ok ? 1 : 0);
    }
    if (!have_header) throw ParseError(line_no, "missing header");
    const auto n_valid = std::count(s.valid.begin(), s.valid.end(), std::uint8_t{1});
    if (n_valid < 2) throw InsufficientDataError("tracked series needs at least 2 valid samples");
    return s;
}

TrackedSeries fill_gaps(const TrackedSeries& series)
{
    const std::size_t n = series.size();
    if (n == 0) throw InsufficientDataError("empty tracked series");
    if (!series.valid.front()) throw BoundaryGapError("leading samples are missing");
    if (!series.valid.back()) throw BoundaryGapError("trailing samples are missing");
    TrackedSeries out = series;
    std::size_t last_valid = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (!series.valid[i]) continue;
        for (std::size_t j = last_valid + 1; j < i; ++j) {
            const double w = (series.t[j] - series.t[last_valid]) / (series.t[i] - series.t[last_valid]);
            out.x[j] = series.x[last_valid] + w * (series.x[i] - series.x[last_valid]);
            out.y[j] = series.y[last_valid] + w * (series.y[i] - series.y[last_valid]);
            out.valid[j] = 1;
        }
        last_valid = i;
    }
    return out;
}

Trajectory resample_uniform(const TrackedSeries& series, double rate_hz, const DriveParams& drive,
                            Provenance provenance)
{
    drive.validate();
    if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw ValidationError("rate", "must be > 0");
    if (!series.all_valid()) throw ValidationError("series", "contains dropped frames; fill gaps first");
    const std::size_t n = series.size();
    if (n < 2) throw RangeError("resampling needs at least 2 samples");

    std::vector<double> steps(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) steps[i] = series.t[i + 1] - series.t[i];
    std::nth_element(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(steps.size() / 2), steps.end());
    const double median_rate = 1.0 / steps[steps.size() / 2];
    if (rate_hz > 2.0 * median_rate * (1.0 + 1e-12))
        throw ValidationError("rate", "exceeds twice the median input rate");

    const double t0 = series.t.front();
    const double span = series.t.back() - t0;
    const auto count = static_cast<std::size_t>(std::floor(span * rate_hz + 1e-9)) + 1;
    if (count < 2) throw RangeError("requested grid does not overlap the input time range");

    Trajectory out;
    out.sample_rate_hz = rate_hz;
    out.provenance = provenance;
    out.t.resize(count);
    out.x.resize(count);
    out.y.resize(count);
    out.phase.resize(count);
    const double snap = 1e-9 / rate_hz;
    std::size_t j = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double tau = t0 + static_cast<double>(i) / rate_hz;
        while (j + 2 < n && series.t[j + 1] <= tau) ++j;
        double xv = 0.0;
        double yv = 0.0;
        if (std::abs(tau - series.t[j]) <= snap) {
            xv = series.x[j];
            yv = series.y[j];
        } else if (std::abs(series.t[j + 1] - tau) <= snap) {
            xv = series.x[j + 1];
            yv = series.y[j + 1];
        } else {
            const double w = std::clamp((tau - series.t[j]) / (series.t[j + 1] - series.t[j]), 0.0, 1.0);
            xv = series.x[j] + w * (series.x[j + 1] - series.x[j]);
            yv = series.y[j] + w * (series.y[j + 1] - series.y[j]);
        }
        out.t[i] = tau;
        out.x[i] = xv;
        out.y[i] = yv;
        out.phase[i] = wrap_phase(drive.frequency_hz, tau);
    }
    return out;
}

PoincareMap poincare_sample(const Trajectory& traj, const DriveParams& drive, double phase0)
{
    drive.validate();
    if (!std::isfinite(phase0)) throw ValidationError("phase0", "must be finite");
    const std::size_t n = traj.size();
    const double f = drive.frequency_hz;
    if (n < 2 || traj.duration() * f < 2.0 - 1e-9)
        throw RangeError("trajectory covers fewer than two drive periods");

    const double offset = std::fmod(phase0, kTwoPi) / kTwoPi;
    const double t0 = traj.t.front();
    const double t1 = traj.t.back();
    const auto k_first = static_cast<long long>(std::ceil(t0 * f - offset - 1e-9));
    const auto k_last = static_cast<long long>(std::floor(t1 * f - offset + 1e-9));
    const double rate = traj.sample_rate_hz;

    PoincareMap map;
    map.frequency_hz = f;
    map.phase0 = phase0;
    for (long long k = k_first; k <= k_last; ++k) {
        const double tau = (static_cast<double>(k) + offset) / f;
        const double p = std::clamp((tau - t0) * rate, 0.0, static_cast<double>(n - 1));
        const double nearest = std::round(p);
        double xv = 0.0;
        double yv = 0.0;
        if (std::abs(p - nearest) < 1e-7) {
            const auto i = static_cast<std::size_t>(nearest);
            xv = traj.x[i];
            yv = traj.y[i];
        } else {
            const auto i = std::min(static_cast<std::size_t>(p), n - 2);
            const double w = p - static_cast<double>(i);
            xv = traj.x[i] + w * (traj.x[i + 1] - traj.x[i]);
            yv = traj.y[i] + w * (traj.y[i + 1] - traj.y[i]);
            // |error| <= w(1-w)/2 h^2 |f''|, with h^2 f'' taken from the neighbouring second differences
            auto curv = [&](const std::vector<double>& v) {
                double c = 0.0;
                for (std::size_t j = std::max<std::size_t>(i, 1); j <= std::min(i + 1, n - 2); ++j)
                    c = std::max(c, std::abs(v[j - 1] - 2.0 * v[j] + v[j + 1]));
                return c;
            };
            const double e = 0.5 * w * (1.0 - w) * std::hypot(curv(traj.x), curv(traj.y));
            map.interpolation_error = std::max(map.interpolation_error, e);
        }
        map.x.push_back(xv);
        map.y.push_back(yv);
    }
    return map;
}

Trajectory tail(const Trajectory& traj, double t_start)
{
    const double eps = 1e-9 / traj.sample_rate_hz;
    const auto it = std::lower_bound(traj.t.begin(), traj.t.end(), t_start - eps);
    const auto first = static_cast<std::size_t>(it - traj.t.begin());
    Trajectory out;
    out.sample_rate_hz = traj.sample_rate_hz;
    out.provenance = traj.provenance;
    out.t.assign(traj.t.begin() + static_cast<std::ptrdiff_t>(first), traj.t.end());
    out.x.assign(traj.x.begin() + static_cast<std::ptrdiff_t>(first), traj.x.end());
    out.y.assign(traj.y.begin() + static_cast<std::ptrdiff_t>(first), traj.y.end());
    out.phase.assign(traj.phase.begin() + static_cast<std::ptrdiff_t>(first), traj.phase.end());
    return out;
}

std::string trajectory_csv(const Trajectory& traj)
{
    CsvBuilder csv("t_s,x,y,phase");
    for (std::size_t i = 0; i < traj.size(); ++i) csv.row({traj.t[i], traj.x[i], traj.y[i], traj.phase[i]});
    return csv.str();
}

}  // namespace softdyn
