#pragma once

#include "softdyn/oscillator.hpp"
#include "softdyn/trajectory_io.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace softdyn {

/// One-sided power spectral density, Welch average of Hann-windowed segments.
struct Spectrum {
    std::vector<double> freq_hz;
    std::vector<double> power;  // per Hz
    double resolution_hz = 0.0;
    double sample_rate_hz = 0.0;
    std::size_t segment_length = 0;
    std::size_t segments = 0;
    std::string window = "hann";

    /// Sum of power * resolution, i.e. the mean windowed signal power.
    double total_power() const;
};

/// Mean is removed from each segment; segments of floor(2N/5) samples with 50% overlap.
Spectrum power_spectrum(std::span<const double> x, double sample_rate_hz, std::size_t segments = 4);

/// Single Hann-windowed segment over the whole series; for short records.
Spectrum periodogram(std::span<const double> x, double sample_rate_hz);

/// Local maxima (excluding DC) whose power is at least `rel_threshold` of the largest.
std::size_t significant_peaks(const Spectrum& s, double rel_threshold = 0.01);

/// Mean windowed power of the same segments power_spectrum averages; equals
/// Spectrum::total_power() by Parseval.
double windowed_power(std::span<const double> x, std::size_t segments = 4);

/// Share of non-DC power within +-half_width_bins of any multiple of `fundamental_hz`.
/// A spectrum with no power returns 1.
double harmonic_fraction(const Spectrum& s, double fundamental_hz, double half_width_bins = 1.5);

/// Share of non-DC power within +-half_width_bins of a single frequency.
double peak_fraction(const Spectrum& s, double center_hz, double half_width_bins = 1.5);

/// Geometric over arithmetic mean of band-integrated power for `bands` equal bands
/// centred on lo + (j + 1/2) * width. Returns 0 for a spectrum with no power.
double band_flatness(const Spectrum& s, double lo_hz, double hi_hz, std::size_t bands);

/// Drive-relative flatness: 16 bands of width f/8 centred on j f/8, j = 1..16.
double spectral_flatness(const Spectrum& s, double drive_hz);

/// Whole-band flatness over 64 bands between DC and Nyquist.
double spectral_flatness(const Spectrum& s);

std::string spectrum_csv(const Spectrum& s);

struct ClusterResult {
    std::vector<std::size_t> sizes;  // clusters meeting the minimum size, largest first
    std::vector<int> labels;         // per point: index into sizes, or -1 if unclustered
    std::size_t points = 0;
    double radius = 0.0;

    std::size_t count() const { return sizes.size(); }
    double clustered_fraction() const;
    double unclustered_fraction() const { return points ? 1.0 - clustered_fraction() : 0.0; }
    double largest_fraction() const;
};

/// Single-linkage clustering: points within `radius` (inclusive) are linked. Groups
/// smaller than `min_size` do not count as clusters.
ClusterResult poincare_clusters(const PoincareMap& map, double radius, std::size_t min_size = 1);

enum class Regime { Periodic, Quasiperiodic, Chaotic };

const char* regime_name(Regime r);

struct ClassifierConfig {
    double harmonic_threshold = 0.9;
    std::size_t max_periodic_clusters = 3;
    double periodic_clustered_fraction = 0.95;
    double flatness_threshold = 0.35;
    double chaotic_largest_fraction = 0.2;
    double radius_fraction = 0.02;     // of the Poincare bounding-box diagonal
    double radius_rms_floor = 1e-4;    // of the signal RMS, keeps tight orbits clustered
    double min_cluster_fraction = 0.02;
    std::size_t min_cluster_points = 3;
    std::size_t min_points = 30;

    void validate(const std::string& path = "classifier") const;
};

struct RegimeDiagnostics {
    std::size_t cluster_count = 0;
    double clustered_fraction = 0.0;
    double largest_cluster_fraction = 0.0;
    double flatness = 0.0;
    double harmonic_fraction = 0.0;
    double radius = 0.0;
};

struct RegimeLabel {
    Regime regime = Regime::Periodic;
    bool ambiguous = false;
    RegimeDiagnostics diagnostics;
};

/// Periodic: harmonic fraction >= 0.9, at most 3 clusters holding >= 95% of points.
/// Chaotic: flatness >= 0.35, or the largest cluster holds < 20% of a map that is
/// not itself fully clustered. Both firing yields an ambiguous Quasiperiodic.
RegimeLabel classify_regime(const PoincareMap& map, const Spectrum& spectrum, double drive_hz,
                            const ClassifierConfig& config = {});

/// Classification of the x channel of a settled trajectory.
RegimeLabel classify_trajectory(const Trajectory& traj, const DriveParams& drive,
                                const ClassifierConfig& config = {});

struct SweepOptions {
    double settle_s = 40.0;
    std::size_t record_periods = 200;
    std::size_t min_steps_per_period = 50;
    double samples_per_second_floor = 400.0;  // dt = 1 / (M f), M = max(50, ceil(400 / f))
    unsigned threads = 0;                     // 0: SOFTDYN_THREADS or hardware concurrency
    ClassifierConfig classifier{};
};

/// Steps per drive period used by the sweep and the reservoir carrier.
std::size_t steps_per_period(double frequency_hz, const SweepOptions& options = {});

struct SweepCell {
    double frequency_hz = 0.0;
    double amplitude_mT = 0.0;
    std::optional<RegimeLabel> label;
    std::string error;  // set when the cell failed
};

/// Simulates and classifies one (f, A) cell from the rest state.
SweepCell classify_cell(const OscillatorConfig& config, double frequency_hz, double amplitude_mT,
                        const SweepOptions& options = {});

/// Cells in f-major order. Per-cell failures are recorded, not thrown.
std::vector<SweepCell> phase_diagram_sweep(const OscillatorConfig& config, const std::vector<double>& f_grid,
                                           const std::vector<double>& a_grid, const SweepOptions& options = {});

/// Largest Lyapunov exponent (1/s) over the same run a sweep cell classifies,
/// averaged over the recorded periods only.
double cell_lyapunov(const OscillatorConfig& config, double frequency_hz, double amplitude_mT,
                     const SweepOptions& options = {});

std::string sweep_csv(const std::vector<SweepCell>& cells);

/// Worker count: explicit request, else SOFTDYN_THREADS, else hardware concurrency.
unsigned resolve_threads(unsigned requested);

}  // namespace softdyn
