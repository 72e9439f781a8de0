#pragma once

#include "softdyn/oscillator.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace softdyn {

/// Marker track as recorded: possibly non-uniform times, dropped frames flagged.
struct TrackedSeries {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<std::uint8_t> valid;

    std::size_t size() const { return t.size(); }
    bool all_valid() const;
};

/// Reads `t_s,x,y`. An empty x or y cell marks a dropped frame; `#` lines are comments.
TrackedSeries load_tracked_csv(const std::filesystem::path& path);
TrackedSeries parse_tracked_csv(std::istream& in);

/// Linear interpolation across interior dropped frames. Throws BoundaryGapError if
/// the first or last sample is invalid.
TrackedSeries fill_gaps(const TrackedSeries& series);

/// Linear resampling onto t0 + i/rate. Rates above twice the median input rate are
/// rejected. The drive supplies the phase channel.
Trajectory resample_uniform(const TrackedSeries& series, double rate_hz, const DriveParams& drive,
                            Provenance provenance = Provenance::Recorded);

/// One point per drive period.
struct PoincareMap {
    std::vector<double> x;
    std::vector<double> y;
    double frequency_hz = 0.0;
    double phase0 = 0.0;
    /// Bound on the linear-interpolation error of any point, from local second
    /// differences. Zero when every point falls on a sample.
    double interpolation_error = 0.0;

    std::size_t size() const { return x.size(); }
};

/// Samples the trajectory at the times where the drive phase equals `phase0`.
PoincareMap poincare_sample(const Trajectory& traj, const DriveParams& drive, double phase0 = 0.0);

/// Samples with t >= t_start (the leading transient is discarded).
Trajectory tail(const Trajectory& traj, double t_start);

/// CSV text `t_s,x,y,phase`.
std::string trajectory_csv(const Trajectory& traj);

}  // namespace softdyn
