#pragma once

// Reduced-order surrogate of a magnetically driven soft actuator: two coupled
// Duffing-type bending modes forced by a sinusoidal field.
//
//   q1'' = -2 z1 w1 q1' - w1^2 q1 - k1 q1^3 - chi q1 q2^2 + mu1 b(t) cos(q1 - tilt) + eta b(t) sin(2 q1)
//   q2'' = -2 z2 w2 q2' - w2^2 q2 - k2 q2^3 - chi q1^2 q2 + mu2 b(t) cos(q1 - tilt) + eta b(t) sin(2 q1)
//
// with b(t) = A sin(2 pi f t). The tip readout is
//   x = L sin(q1 + eps q2),  y = L (1 - cos(q1 + eps q2)).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace softdyn {

struct DriveParams {
    double amplitude_mT = 1.0;
    double frequency_hz = 10.0;
    double tilt_deg = 0.0;  // in-plane angle of the field axis

    double period() const { return 1.0 / frequency_hz; }
    /// Signed field strength along the field axis at time t.
    double signed_field(double t) const
    {
        return amplitude_mT * std::sin(2.0 * std::numbers::pi * frequency_hz * t);
    }
    void validate(const std::string& path = "drive") const;
};

struct FieldVector {
    double x = 0.0;
    double y = 0.0;
    double magnitude() const { return std::hypot(x, y); }
};

FieldVector drive_field(const DriveParams& drive, double t);

struct OscillatorConfig {
    double omega1 = 0.0;  // rad/s
    double omega2 = 0.0;
    double zeta1 = 0.0;
    double zeta2 = 0.0;
    double kappa1 = 0.0;  // cubic stiffness
    double kappa2 = 0.0;
    double chi = 0.0;     // inter-mode coupling
    double mu1 = 0.0;     // rad s^-2 mT^-1
    double mu2 = 0.0;
    double eta = 0.0;     // stray-field self-interaction
    double arm_length = 1.0;
    double mode_mixing = 0.0;

    /// Constants found by tools/calibrate (see README).
    static OscillatorConfig calibrated();
    void validate(const std::string& path = "oscillator") const;
};

struct ModalState {
    double q1 = 0.0;
    double q2 = 0.0;
    double v1 = 0.0;
    double v2 = 0.0;

    bool finite() const
    {
        return std::isfinite(q1) && std::isfinite(q2) && std::isfinite(v1) && std::isfinite(v2);
    }
};

struct TipPosition {
    double x = 0.0;
    double y = 0.0;
};

TipPosition tip_position(double q1, double q2, double arm_length, double mode_mixing);
inline TipPosition tip_position(const ModalState& s, const OscillatorConfig& c)
{
    return tip_position(s.q1, s.q2, c.arm_length, c.mode_mixing);
}

enum class Provenance { Simulated, Recorded };

/// Uniformly sampled tip trajectory. Immutable by convention once built.
struct Trajectory {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> phase;  // drive phase in [0, 2 pi)
    double sample_rate_hz = 0.0;
    Provenance provenance = Provenance::Simulated;

    std::size_t size() const { return t.size(); }
    double dt() const { return 1.0 / sample_rate_hz; }
    double duration() const { return t.empty() ? 0.0 : t.back() - t.front(); }
    /// Throws RangeError if the arrays disagree or the grid is not uniform.
    void validate() const;
};

/// The equations of motion with a caller-supplied signed field b(t).
class ModalOscillator {
public:
    explicit ModalOscillator(const OscillatorConfig& config, double tilt_deg = 0.0);

    const OscillatorConfig& config() const { return config_; }

    ModalState derivative(const ModalState& s, double field) const;

    /// One classical Runge-Kutta step. `field(t)` returns the signed field in mT.
    template <class FieldFn>
    ModalState step(const ModalState& s, double t, double dt, FieldFn&& field) const
    {
        const double half = 0.5 * dt;
        const double b0 = field(t);
        const double bh = field(t + half);
        const double b1 = field(t + dt);
        const ModalState k1 = derivative(s, b0);
        const ModalState k2 = derivative(axpy(s, half, k1), bh);
        const ModalState k3 = derivative(axpy(s, half, k2), bh);
        const ModalState k4 = derivative(axpy(s, dt, k3), b1);
        const double w = dt / 6.0;
        return ModalState{s.q1 + w * (k1.q1 + 2.0 * k2.q1 + 2.0 * k3.q1 + k4.q1),
                          s.q2 + w * (k1.q2 + 2.0 * k2.q2 + 2.0 * k3.q2 + k4.q2),
                          s.v1 + w * (k1.v1 + 2.0 * k2.v1 + 2.0 * k3.v1 + k4.v1),
                          s.v2 + w * (k1.v2 + 2.0 * k2.v2 + 2.0 * k3.v2 + k4.v2)};
    }

    TipPosition tip(const ModalState& s) const { return tip_position(s, config_); }

private:
    static ModalState axpy(const ModalState& s, double a, const ModalState& d)
    {
        return {s.q1 + a * d.q1, s.q2 + a * d.q2, s.v1 + a * d.v1, s.v2 + a * d.v2};
    }

    OscillatorConfig config_;
    double tilt_rad_ = 0.0;
};

struct SimulationOptions {
    double duration_s = 10.0;
    double dt_s = 1e-3;
    ModalState initial{};
    double noise_sigma = 0.0;  // additive Gaussian on x and y, display units
    std::uint64_t noise_seed = 0;
};

/// Integrates the model under a sinusoidal drive and samples the tip at every step.
/// Rejects dt coarser than 1/(50 f) and runs shorter than two drive periods.
Trajectory simulate(const OscillatorConfig& config, const DriveParams& drive,
                    const SimulationOptions& options);

/// Final modal state after integrating for `duration_s`; used by refinement checks.
ModalState integrate_state(const OscillatorConfig& config, const DriveParams& drive,
                           double duration_s, double dt_s, const ModalState& initial = {});

struct LyapunovOptions {
    ModalState initial{};
    double transient_fraction = 0.25;  // leading share of the run excluded from the average
    double separation = 1e-8;          // renormalized distance in scaled state space
};

/// Two-trajectory (Benettin) estimate of the largest Lyapunov exponent in 1/s.
/// The companion trajectory is renormalized once per drive period.
double largest_lyapunov(const OscillatorConfig& config, const DriveParams& drive,
                        double duration_s, double dt_s, const LyapunovOptions& options = {});

/// Largest dt allowed for a drive frequency, 1/(50 f).
inline double max_step_for(double frequency_hz) { return 1.0 / (50.0 * frequency_hz); }

}  // namespace softdyn
