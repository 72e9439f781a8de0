#include "softdyn/regime.hpp"

#include "softdyn/error.hpp"
#include "softdyn/io.hpp"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <numbers>
#include <numeric>
#include <thread>
#include <unordered_map>

namespace softdyn {

namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct SegmentLayout {
    std::size_t length = 0;
    std::size_t hop = 0;
};

SegmentLayout layout_for(std::size_t n, std::size_t segments)
{
    if (segments == 0) throw ValidationError("segments", "must be >= 1");
    if (n < 1024) throw RangeError("power spectrum needs at least 1024 samples");
    SegmentLayout l;
    // `segments` half-overlapping pieces span (segments + 1) / 2 segment lengths.
    l.length = (2 * n) / (segments + 1);
    l.hop = l.length / 2;
    return l;
}

std::vector<double> hann(std::size_t n)
{
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

void fill_segment(std::span<const double> x, std::size_t start, const std::vector<double>& w, double* out)
{
    const std::size_t len = w.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < len; ++i) mean += x[start + i];
    mean /= static_cast<double>(len);
    for (std::size_t i = 0; i < len; ++i) out[i] = (x[start + i] - mean) * w[i];
}

double distance_bins(const Spectrum& s, std::size_t k, double f)
{
    return std::abs(s.freq_hz[k] - f) / s.resolution_hz;
}

}  // namespace

double Spectrum::total_power() const
{
    double sum = 0.0;
    for (double p : power) sum += p;
    return sum * resolution_hz;
}

namespace {

Spectrum welch(std::span<const double> x, double sample_rate_hz, SegmentLayout lay, std::size_t segments)
{
    const std::size_t len = lay.length;
    const std::size_t bins = len / 2 + 1;
    const std::vector<double> w = hann(len);
    const double wss = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

    double* in = fftw_alloc_real(len);
    fftw_complex* out = fftw_alloc_complex(bins);
    fftw_plan plan = nullptr;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in, out, FFTW_ESTIMATE);
    }

    Spectrum s;
    s.sample_rate_hz = sample_rate_hz;
    s.segment_length = len;
    s.segments = segments;
    s.resolution_hz = sample_rate_hz / static_cast<double>(len);
    s.freq_hz.resize(bins);
    s.power.assign(bins, 0.0);
    for (std::size_t k = 0; k < bins; ++k) s.freq_hz[k] = static_cast<double>(k) * s.resolution_hz;

    for (std::size_t seg = 0; seg < segments; ++seg) {
        fill_segment(x, seg * lay.hop, w, in);
        fftw_execute_dft_r2c(plan, in, out);
        for (std::size_t k = 0; k < bins; ++k) s.power[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    const double scale = 1.0 / (static_cast<double>(segments) * sample_rate_hz * wss);
    for (std::size_t k = 0; k < bins; ++k) {
        const bool edge = k == 0 || (len % 2 == 0 && k == bins - 1);
        s.power[k] *= (edge ? 1.0 : 2.0) * scale;
    }

    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return s;
}

}  // namespace

Spectrum power_spectrum(std::span<const double> x, double sample_rate_hz, std::size_t segments)
{
    if (!(sample_rate_hz > 0.0)) throw ValidationError("sample_rate", "must be > 0");
    return welch(x, sample_rate_hz, layout_for(x.size(), segments), segments);
}

Spectrum periodogram(std::span<const double> x, double sample_rate_hz)
{
    if (!(sample_rate_hz > 0.0)) throw ValidationError("sample_rate", "must be > 0");
    if (x.size() < 16) throw RangeError("periodogram needs at least 16 samples");
    return welch(x, sample_rate_hz, SegmentLayout{x.size(), x.size()}, 1);
}

std::size_t significant_peaks(const Spectrum& s, double rel_threshold)
{
    if (s.power.size() < 3) return 0;
    const double top = *std::max_element(s.power.begin() + 1, s.power.end());
    if (!(top > 0.0)) return 0;
    std::size_t count = 0;
    // bin 0 and its neighbour carry the (removed) mean; skip them
    for (std::size_t k = 2; k + 1 < s.power.size(); ++k)
        if (s.power[k] >= rel_threshold * top && s.power[k] > s.power[k - 1] && s.power[k] >= s.power[k + 1]) ++count;
    return count;
}

double windowed_power(std::span<const double> x, std::size_t segments)
{
    const SegmentLayout lay = layout_for(x.size(), segments);
    const std::vector<double> w = hann(lay.length);
    const double wss = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    std::vector<double> buf(lay.length);
    double acc = 0.0;
    for (std::size_t seg = 0; seg < segments; ++seg) {
        fill_segment(x, seg * lay.hop, w, buf.data());
        for (double v : buf) acc += v * v;
    }
    return acc / (static_cast<double>(segments) * wss);
}

double harmonic_fraction(const Spectrum& s, double fundamental_hz, double half_width_bins)
{
    if (!(fundamental_hz > 0.0)) throw ValidationError("fundamental", "must be > 0");
    double total = 0.0;
    double harmonic = 0.0;
    for (std::size_t k = 1; k < s.power.size(); ++k) {
        total += s.power[k];
        const double h = std::max(1.0, std::round(s.freq_hz[k] / fundamental_hz));
        if (distance_bins(s, k, h * fundamental_hz) <= half_width_bins) harmonic += s.power[k];
    }
    return total > 0.0 ? harmonic / total : 1.0;
}

double peak_fraction(const Spectrum& s, double center_hz, double half_width_bins)
{
    double total = 0.0;
    double peak = 0.0;
    for (std::size_t k = 1; k < s.power.size(); ++k) {
        total += s.power[k];
        if (distance_bins(s, k, center_hz) <= half_width_bins) peak += s.power[k];
    }
    return total > 0.0 ? peak / total : 0.0;
}

double band_flatness(const Spectrum& s, double lo_hz, double hi_hz, std::size_t bands)
{
    if (bands == 0 || !(hi_hz > lo_hz)) throw ValidationError("bands", "need at least one non-empty band");
    const double width = (hi_hz - lo_hz) / static_cast<double>(bands);
    std::vector<double> band(bands, 0.0);
    std::vector<std::size_t> hits(bands, 0);
    for (std::size_t k = 1; k < s.power.size(); ++k) {
        const double f = s.freq_hz[k];
        if (f <= lo_hz || f > hi_hz) continue;
        const auto j = std::min(bands - 1, static_cast<std::size_t>((f - lo_hz) / width));
        band[j] += s.power[k];
        ++hits[j];
    }
    if (std::find(hits.begin(), hits.end(), 0) != hits.end())
        throw RangeError("spectral resolution too coarse for the requested flatness bands");
    const double mean = std::accumulate(band.begin(), band.end(), 0.0) / static_cast<double>(bands);
    if (!(mean > 0.0)) return 0.0;
    double log_sum = 0.0;
    for (double b : band) {
        if (!(b > 0.0)) return 0.0;
        log_sum += std::log(b);
    }
    return std::exp(log_sum / static_cast<double>(bands)) / mean;
}

double spectral_flatness(const Spectrum& s, double drive_hz)
{
    const double w = drive_hz / 8.0;
    return band_flatness(s, 0.5 * w, 16.5 * w, 16);
}

double spectral_flatness(const Spectrum& s)
{
    return band_flatness(s, 0.0, s.freq_hz.back(), 64);
}

std::string spectrum_csv(const Spectrum& s)
{
    CsvBuilder csv("f_hz,power");
    for (std::size_t k = 0; k < s.power.size(); ++k) csv.row({s.freq_hz[k], s.power[k]});
    return csv.str();
}

double ClusterResult::clustered_fraction() const
{
    if (points == 0) return 0.0;
    return static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0})) /
           static_cast<double>(points);
}

double ClusterResult::largest_fraction() const
{
    if (points == 0 || sizes.empty()) return 0.0;
    return static_cast<double>(sizes.front()) / static_cast<double>(points);
}

namespace {

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t i)
    {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }
    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

void link_by_grid(const PoincareMap& m, double r, DisjointSet& ds)
{
    const std::size_t n = m.size();
    const double r2 = r * r;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells;
    auto key = [](std::int64_t cx, std::int64_t cy) {
        return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xffffffffULL);
    };
    std::vector<std::int64_t> cx(n), cy(n);
    for (std::size_t i = 0; i < n; ++i) {
        cx[i] = static_cast<std::int64_t>(std::floor(m.x[i] / r));
        cy[i] = static_cast<std::int64_t>(std::floor(m.y[i] / r));
        cells[key(cx[i], cy[i])].push_back(i);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                const auto it = cells.find(key(cx[i] + dx, cy[i] + dy));
                if (it == cells.end()) continue;
                for (std::size_t j : it->second) {
                    if (j <= i) continue;
                    const double ddx = m.x[i] - m.x[j];
                    const double ddy = m.y[i] - m.y[j];
                    if (ddx * ddx + ddy * ddy <= r2) ds.unite(i, j);
                }
            }
        }
    }
}

void link_pairwise(const PoincareMap& m, double r, DisjointSet& ds)
{
    const double r2 = r * r;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j) {
            const double ddx = m.x[i] - m.x[j];
            const double ddy = m.y[i] - m.y[j];
            if (ddx * ddx + ddy * ddy <= r2) ds.unite(i, j);
        }
}

}  // namespace

ClusterResult poincare_clusters(const PoincareMap& map, double radius, std::size_t min_size)
{
    if (map.x.size() != map.y.size()) throw ValidationError("map", "x and y differ in length");
    if (!(radius >= 0.0) || !std::isfinite(radius)) throw ValidationError("radius", "must be finite and >= 0");
    const std::size_t n = map.size();
    DisjointSet ds(n);

    double extent = 0.0;
    for (std::size_t i = 0; i < n; ++i) extent = std::max({extent, std::abs(map.x[i]), std::abs(map.y[i])});
    // Grid indices must fit comfortably in 32 bits; otherwise compare every pair.
    if (radius > 0.0 && extent / radius < 1e9) link_by_grid(map, radius, ds);
    else link_pairwise(map, radius, ds);

    std::unordered_map<std::size_t, std::size_t> root_size;
    for (std::size_t i = 0; i < n; ++i) ++root_size[ds.find(i)];
    // Roots are the smallest member index, so (size desc, root asc) is a stable order.
    std::vector<std::pair<std::size_t, std::size_t>> groups;
    for (const auto& [root, size] : root_size)
        if (size >= std::max<std::size_t>(min_size, 1)) groups.emplace_back(root, size);
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });

    ClusterResult res;
    res.points = n;
    res.radius = radius;
    res.labels.assign(n, -1);
    std::unordered_map<std::size_t, int> index;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        res.sizes.push_back(groups[g].second);
        index[groups[g].first] = static_cast<int>(g);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = index.find(ds.find(i));
        if (it != index.end()) res.labels[i] = it->second;
    }
    return res;
}

const char* regime_name(Regime r)
{
    switch (r) {
    case Regime::Periodic: return "Periodic";
    case Regime::Quasiperiodic: return "Quasiperiodic";
    case Regime::Chaotic: return "Chaotic";
    }
    return "?";
}

void ClassifierConfig::validate(const std::string& path) const
{
    auto unit = [&](const char* name, double v) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(path + "." + name, "must lie in [0, 1]");
    };
    unit("harmonic_threshold", harmonic_threshold);
    unit("periodic_clustered_fraction", periodic_clustered_fraction);
    unit("flatness_threshold", flatness_threshold);
    unit("chaotic_largest_fraction", chaotic_largest_fraction);
    unit("min_cluster_fraction", min_cluster_fraction);
    if (!(radius_fraction > 0.0)) throw ValidationError(path + ".radius_fraction", "must be > 0");
    if (!(radius_rms_floor >= 0.0)) throw ValidationError(path + ".radius_rms_floor", "must be >= 0");
}

RegimeLabel classify_regime(const PoincareMap& map, const Spectrum& spectrum, double drive_hz,
                            const ClassifierConfig& config)
{
    config.validate();
    if (map.size() < config.min_points)
        throw RangeError("classification needs at least " + std::to_string(config.min_points) + " Poincare points");

    const auto [xmin, xmax] = std::minmax_element(map.x.begin(), map.x.end());
    const auto [ymin, ymax] = std::minmax_element(map.y.begin(), map.y.end());
    const double diagonal = std::hypot(*xmax - *xmin, *ymax - *ymin);
    const double rms = std::sqrt(std::max(0.0, spectrum.total_power()));
    // two copies of one point can land up to twice the interpolation bound apart
    const double radius = std::max({config.radius_fraction * diagonal, config.radius_rms_floor * rms,
                                    2.0 * map.interpolation_error});
    const auto min_size = std::max<std::size_t>(
        config.min_cluster_points,
        static_cast<std::size_t>(std::ceil(config.min_cluster_fraction * static_cast<double>(map.size()))));
    const ClusterResult clusters = poincare_clusters(map, radius, min_size);

    RegimeLabel label;
    RegimeDiagnostics& d = label.diagnostics;
    d.cluster_count = clusters.count();
    d.clustered_fraction = clusters.clustered_fraction();
    d.largest_cluster_fraction = clusters.largest_fraction();
    d.harmonic_fraction = harmonic_fraction(spectrum, drive_hz);
    d.flatness = spectrum.total_power() > 0.0 ? spectral_flatness(spectrum, drive_hz) : 0.0;
    d.radius = radius;

    const bool periodic = d.harmonic_fraction >= config.harmonic_threshold &&
                          d.cluster_count <= config.max_periodic_clusters &&
                          d.clustered_fraction >= config.periodic_clustered_fraction;
    // A map whose points all sit in tight groups is a long orbit, not a scatter.
    const bool scattered = d.largest_cluster_fraction < config.chaotic_largest_fraction &&
                           d.clustered_fraction < config.periodic_clustered_fraction;
    const bool chaotic = d.flatness >= config.flatness_threshold || scattered;

    if (periodic && chaotic) {
        label.regime = Regime::Quasiperiodic;
        label.ambiguous = true;
    } else if (periodic) {
        label.regime = Regime::Periodic;
    } else if (chaotic) {
        label.regime = Regime::Chaotic;
    } else {
        label.regime = Regime::Quasiperiodic;
    }
    return label;
}

RegimeLabel classify_trajectory(const Trajectory& traj, const DriveParams& drive, const ClassifierConfig& config)
{
    const Spectrum s = power_spectrum(traj.x, traj.sample_rate_hz);
    const PoincareMap map = poincare_sample(traj, drive, 0.0);
    return classify_regime(map, s, drive.frequency_hz, config);
}

std::size_t steps_per_period(double frequency_hz, const SweepOptions& options)
{
    const auto by_rate = static_cast<std::size_t>(std::ceil(options.samples_per_second_floor / frequency_hz - 1e-9));
    return std::max(options.min_steps_per_period, by_rate);
}

SweepCell classify_cell(const OscillatorConfig& config, double frequency_hz, double amplitude_mT,
                        const SweepOptions& options)
{
    SweepCell cell;
    cell.frequency_hz = frequency_hz;
    cell.amplitude_mT = amplitude_mT;
    try {
        DriveParams drive{amplitude_mT, frequency_hz, 0.0};
        drive.validate();
        const std::size_t m = steps_per_period(frequency_hz, options);
        const auto settle_periods = static_cast<std::size_t>(std::ceil(options.settle_s * frequency_hz - 1e-9));
        SimulationOptions sim;
        sim.dt_s = 1.0 / (static_cast<double>(m) * frequency_hz);
        sim.duration_s = static_cast<double>(settle_periods + options.record_periods) / frequency_hz;
        const Trajectory full = simulate(config, drive, sim);
        const Trajectory rec = tail(full, static_cast<double>(settle_periods) / frequency_hz);
        cell.label = classify_trajectory(rec, drive, options.classifier);
    } catch (const std::exception& e) {
        cell.error = e.what();
    }
    return cell;
}

double cell_lyapunov(const OscillatorConfig& config, double frequency_hz, double amplitude_mT,
                     const SweepOptions& options)
{
    const DriveParams drive{amplitude_mT, frequency_hz, 0.0};
    drive.validate();
    const std::size_t m = steps_per_period(frequency_hz, options);
    const double settle_periods = std::ceil(options.settle_s * frequency_hz - 1e-9);
    const double total = settle_periods + static_cast<double>(options.record_periods);
    LyapunovOptions lo;
    lo.transient_fraction = settle_periods / total;
    return largest_lyapunov(config, drive, total / frequency_hz, 1.0 / (static_cast<double>(m) * frequency_hz), lo);
}

unsigned resolve_threads(unsigned requested)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SOFTDYN_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SweepCell> phase_diagram_sweep(const OscillatorConfig& config, const std::vector<double>& f_grid,
                                           const std::vector<double>& a_grid, const SweepOptions& options)
{
    config.validate();
    options.classifier.validate();
    std::vector<SweepCell> cells(f_grid.size() * a_grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++)
            cells[i] = classify_cell(config, f_grid[i / a_grid.size()], a_grid[i % a_grid.size()], options);
    };
    const unsigned n_threads =
        std::min<unsigned>(resolve_threads(options.threads), static_cast<unsigned>(std::max<std::size_t>(1, cells.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells)
{
    CsvBuilder csv("f_hz,A_mT,label,cluster_count,clustered_fraction,flatness,harmonic_fraction");
    for (const SweepCell& c : cells) {
        if (!c.label) {
            csv.row({format_number(c.frequency_hz), format_number(c.amplitude_mT), "error", "", "", "", ""});
            continue;
        }
        const RegimeDiagnostics& d = c.label->diagnostics;
        csv.row({format_number(c.frequency_hz), format_number(c.amplitude_mT), regime_name(c.label->regime),
                 std::to_string(d.cluster_count), format_number(d.clustered_fraction), format_number(d.flatness),
                 format_number(d.harmonic_fraction)});
    }
    return csv.str();
}

}  // namespace softdyn
