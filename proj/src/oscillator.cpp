#include "softdyn/oscillator.hpp"

#include "softdyn/error.hpp"
#include "softdyn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace softdyn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_finite(const std::string& path, double v)
{
    if (!std::isfinite(v)) throw ValidationError(path, "must be finite");
}

void require_positive(const std::string& path, double v)
{
    require_finite(path, v);
    if (!(v > 0.0)) throw ValidationError(path, "must be > 0");
}

// Scaled distance: velocities are divided by the modal frequency so both halves
// of the state vector carry comparable weight.
double scaled_distance(const ModalState& a, const ModalState& b, const OscillatorConfig& c)
{
    const double d0 = a.q1 - b.q1;
    const double d1 = a.q2 - b.q2;
    const double d2 = (a.v1 - b.v1) / c.omega1;
    const double d3 = (a.v2 - b.v2) / c.omega2;
    return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3);
}

void check_run(const DriveParams& drive, double duration_s, double dt_s)
{
    drive.validate();
    if (!(dt_s > 0.0) || !std::isfinite(dt_s)) throw ValidationError("dt", "must be > 0");
    if (dt_s > max_step_for(drive.frequency_hz) * (1.0 + 1e-12))
        throw ValidationError("dt", "coarser than 1/(50 f) for the drive frequency");
    if (duration_s < 2.0 * drive.period() * (1.0 - 1e-12))
        throw ValidationError("duration", "shorter than two drive periods");
}

}  // namespace

void DriveParams::validate(const std::string& path) const
{
    require_finite(path + ".amplitude", amplitude_mT);
    if (amplitude_mT < 0.0) throw ValidationError(path + ".amplitude", "must be >= 0");
    require_positive(path + ".frequency", frequency_hz);
    require_finite(path + ".tilt", tilt_deg);
    if (tilt_deg < -90.0 || tilt_deg > 90.0) throw ValidationError(path + ".tilt", "must lie in [-90, 90]");
}

FieldVector drive_field(const DriveParams& drive, double t)
{
    const double b = drive.signed_field(t);
    const double a = drive.tilt_deg * std::numbers::pi / 180.0;
    return {b * std::cos(a), b * std::sin(a)};
}

OscillatorConfig OscillatorConfig::calibrated()
{
    OscillatorConfig c;
    c.omega1 = 72.22;
    c.omega2 = 281.2;
    c.zeta1 = 0.03306;
    c.zeta2 = 0.05271;
    c.kappa1 = 2119.0;
    c.kappa2 = 441.7;
    c.chi = 4.655e4;
    c.mu1 = 4158.0;
    c.mu2 = 7194.0;
    c.eta = 1132.0;
    c.arm_length = 1.0;
    c.mode_mixing = 0.3;
    return c;
}

void OscillatorConfig::validate(const std::string& path) const
{
    require_positive(path + ".omega1", omega1);
    require_positive(path + ".omega2", omega2);
    require_positive(path + ".zeta1", zeta1);
    require_positive(path + ".zeta2", zeta2);
    require_finite(path + ".kappa1", kappa1);
    require_finite(path + ".kappa2", kappa2);
    require_finite(path + ".chi", chi);
    require_finite(path + ".mu1", mu1);
    require_finite(path + ".mu2", mu2);
    require_finite(path + ".eta", eta);
    require_positive(path + ".arm_length", arm_length);
    require_finite(path + ".mode_mixing", mode_mixing);
}

TipPosition tip_position(double q1, double q2, double arm_length, double mode_mixing)
{
    const double angle = q1 + mode_mixing * q2;
    return {arm_length * std::sin(angle), arm_length * (1.0 - std::cos(angle))};
}

void Trajectory::validate() const
{
    const std::size_t n = t.size();
    if (x.size() != n || y.size() != n || phase.size() != n)
        throw RangeError("trajectory arrays differ in length");
    if (!(sample_rate_hz > 0.0)) throw RangeError("trajectory sample rate must be > 0");
    const double step = 1.0 / sample_rate_hz;
    for (std::size_t i = 1; i < n; ++i) {
        const double d = t[i] - t[i - 1];
        if (!(d > 0.0) || std::abs(d - step) > 1e-6 * step)
            throw RangeError("trajectory time grid is not uniform at sample " + std::to_string(i));
    }
}

ModalOscillator::ModalOscillator(const OscillatorConfig& config, double tilt_deg)
    : config_(config), tilt_rad_(tilt_deg * std::numbers::pi / 180.0)
{
}

ModalState ModalOscillator::derivative(const ModalState& s, double field) const
{
    const OscillatorConfig& c = config_;
    const double torque = field * std::cos(s.q1 - tilt_rad_);
    const double self = c.eta * field * std::sin(2.0 * s.q1);
    const double a1 = -2.0 * c.zeta1 * c.omega1 * s.v1 - c.omega1 * c.omega1 * s.q1 -
                      c.kappa1 * s.q1 * s.q1 * s.q1 - c.chi * s.q1 * s.q2 * s.q2 + c.mu1 * torque + self;
    const double a2 = -2.0 * c.zeta2 * c.omega2 * s.v2 - c.omega2 * c.omega2 * s.q2 -
                      c.kappa2 * s.q2 * s.q2 * s.q2 - c.chi * s.q1 * s.q1 * s.q2 + c.mu2 * torque + self;
    return {s.v1, s.v2, a1, a2};
}

Trajectory simulate(const OscillatorConfig& config, const DriveParams& drive,
                    const SimulationOptions& options)
{
    config.validate();
    check_run(drive, options.duration_s, options.dt_s);
    if (!options.initial.finite()) throw ValidationError("initial", "must be finite");
    if (options.noise_sigma < 0.0 || !std::isfinite(options.noise_sigma))
        throw ValidationError("noise_sigma", "must be finite and >= 0");

    const double dt = options.dt_s;
    const auto n = static_cast<std::size_t>(std::floor(options.duration_s / dt + 1e-9));
    const ModalOscillator model(config, drive.tilt_deg);
    const auto field = [&drive](double t) { return drive.signed_field(t); };

    Trajectory traj;
    traj.sample_rate_hz = 1.0 / dt;
    traj.provenance = Provenance::Simulated;
    traj.t.resize(n);
    traj.x.resize(n);
    traj.y.resize(n);
    traj.phase.resize(n);

    std::mt19937_64 noise_rng(options.noise_seed);

    ModalState s = options.initial;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        if (i > 0) {
            s = model.step(s, static_cast<double>(i - 1) * dt, dt, field);
            if (!s.finite()) throw IntegrationDiverged(t);
        }
        const TipPosition tip = model.tip(s);
        traj.t[i] = t;
        traj.x[i] = tip.x;
        traj.y[i] = tip.y;
        if (options.noise_sigma > 0.0) {
            traj.x[i] += options.noise_sigma * standard_normal(noise_rng);
            traj.y[i] += options.noise_sigma * standard_normal(noise_rng);
        }
        double ph = std::fmod(kTwoPi * drive.frequency_hz * t, kTwoPi);
        if (ph < 0.0) ph += kTwoPi;
        traj.phase[i] = ph;
    }
    return traj;
}

ModalState integrate_state(const OscillatorConfig& config, const DriveParams& drive,
                           double duration_s, double dt_s, const ModalState& initial)
{
    config.validate();
    drive.validate();
    if (!(dt_s > 0.0)) throw ValidationError("dt", "must be > 0");
    const auto n = static_cast<std::size_t>(std::llround(duration_s / dt_s));
    const ModalOscillator model(config, drive.tilt_deg);
    const auto field = [&drive](double t) { return drive.signed_field(t); };
    ModalState s = initial;
    for (std::size_t i = 0; i < n; ++i) {
        s = model.step(s, static_cast<double>(i) * dt_s, dt_s, field);
        if (!s.finite()) throw IntegrationDiverged(static_cast<double>(i + 1) * dt_s);
    }
    return s;
}

double largest_lyapunov(const OscillatorConfig& config, const DriveParams& drive,
                        double duration_s, double dt_s, const LyapunovOptions& options)
{
    config.validate();
    drive.validate();
    if (!(dt_s > 0.0)) throw ValidationError("dt", "must be > 0");
    if (duration_s < 200.0 * drive.period() * (1.0 - 1e-12))
        throw ValidationError("duration", "Lyapunov estimate needs at least 200 drive periods");
    if (!(options.transient_fraction >= 0.0 && options.transient_fraction < 1.0))
        throw ValidationError("transient_fraction", "must lie in [0, 1)");

    const ModalOscillator model(config, drive.tilt_deg);
    const auto field = [&drive](double t) { return drive.signed_field(t); };
    const double d0 = options.separation;

    // Steps per renormalization interval: one drive period (at least one step).
    const auto per = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(drive.period() / dt_s)));
    const auto total = static_cast<std::size_t>(std::floor(duration_s / dt_s + 1e-9));
    const auto intervals = total / per;
    const auto skip = static_cast<std::size_t>(std::floor(options.transient_fraction * static_cast<double>(intervals)));

    ModalState a = options.initial;
    ModalState b = a;
    b.q1 += d0;

    double log_sum = 0.0;
    double measured = 0.0;
    std::size_t step = 0;
    for (std::size_t k = 0; k < intervals; ++k) {
        for (std::size_t j = 0; j < per; ++j, ++step) {
            const double t = static_cast<double>(step) * dt_s;
            a = model.step(a, t, dt_s, field);
            b = model.step(b, t, dt_s, field);
        }
        if (!a.finite() || !b.finite()) throw IntegrationDiverged(static_cast<double>(step) * dt_s);
        const double d = scaled_distance(a, b, config);
        if (k >= skip) {
            // Coincident trajectories (contraction below machine resolution) count
            // as the smallest resolvable ratio.
            log_sum += d > 0.0 ? std::log(d / d0) : std::log(std::numeric_limits<double>::epsilon());
            measured += static_cast<double>(per) * dt_s;
        }
        if (d > 0.0) {
            const double r = d0 / d;
            b.q1 = a.q1 + (b.q1 - a.q1) * r;
            b.q2 = a.q2 + (b.q2 - a.q2) * r;
            b.v1 = a.v1 + (b.v1 - a.v1) * r;
            b.v2 = a.v2 + (b.v2 - a.v2) * r;
        } else {
            b = a;
            b.q1 += d0;
        }
    }
    return measured > 0.0 ? log_sum / measured : 0.0;
}

}  // namespace softdyn
