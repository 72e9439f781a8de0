#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace softdyn {

enum class WaveKind { Sine, Square, Sawtooth };

WaveKind parse_wave_kind(const std::string& s);
std::string wave_kind_name(WaveKind k);

/// Samples t = 0, 1, ..., n-1. `period` is in samples and must be >= 4.
std::vector<double> waveform(WaveKind kind, std::size_t n_points, double period, double amplitude = 1.0,
                             double phase = 0.0);

struct MGParams {
    double beta = 0.2;
    double gamma = 0.1;
    double tau = 17.0;
    double exponent = 10.0;
    double dt = 0.01;
    double history = 1.2;  // constant x over [-tau, 0]
    std::size_t n_points = 3000;
    std::size_t stride = 100;  // integration steps per emitted point
    double warmup = 0.0;      // time units discarded; clamped up to 10 tau

    double effective_warmup() const;
    void validate(const std::string& path = "mackey_glass") const;
};

/// RK4 on the delay equation; delayed values come from cubic interpolation
/// over the stored history.
std::vector<double> mackey_glass(const MGParams& p);

/// Affine map onto [0, 1]. A constant series maps to zeros.
std::vector<double> rescale_unit(const std::vector<double>& v);

std::string series_csv(const std::vector<double>& v);

}  // namespace softdyn
