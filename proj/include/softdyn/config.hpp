#pragma once

#include "softdyn/nist.hpp"
#include "softdyn/oscillator.hpp"
#include "softdyn/regime.hpp"
#include "softdyn/reservoir.hpp"
#include "softdyn/signal.hpp"
#include "softdyn/stochastic.hpp"
#include "softdyn/trng.hpp"

#include <cstdint>
#include <string>

namespace softdyn {

struct SimulateBlock {
    double duration_s = 10.0;
    double dt_s = 0.0;  // 0: same rule as the sweep
    double noise_sigma = 0.0;
};

struct ClassifyBlock {
    std::string input;         // tracked CSV; empty simulates `drive`
    double sample_rate_hz = 0.0;  // resampling rate for recorded input; 0 uses the median rate
    double skip_s = 0.0;       // leading span of a recording to ignore
};

struct SweepBlock {
    double f_min = 1.0;
    double f_max = 20.0;
    double f_step = 1.0;
    double a_min = 0.5;
    double a_max = 9.0;
    double a_step = 0.5;
    bool lyapunov = false;
    SweepOptions options{};

    std::vector<double> f_grid() const;
    std::vector<double> a_grid() const;
};

using TrngBlock = TrngPipelineOptions;

struct NistBlock {
    std::string input;  // ASCII bit file; empty uses the reference generator
    std::size_t reference_length = 1000000;
    NistConfig tests{};
};

struct StochmulBlock {
    std::uint32_t x1 = 42;
    std::uint32_t x2 = 54;
    unsigned k = 7;
    std::size_t n = 16384;
    std::string source;  // integer CSV; empty uses the reference generator
    bool minus_one = false;  // (2^k - 1)^2 product scale
    bool sweep = false;      // also multiply x1 by 1 .. 2^k - 1
};

struct RcTransformBlock {
    TransformTaskOptions task{};
};

struct RcMgBlock {
    MGParams mg{};
    int lag_min = 1;
    int lag_max = 40;
    int tau_min = 0;
    int tau_max = 20;
    int detail_lag = 20;
    int detail_tau = 10;
    double lambda = 1e-4;
    ExcitationOptions excitation{};
};

struct RunConfig {
    std::string subcommand;
    std::uint64_t seed = 1;
    std::string out = "out";
    unsigned threads = 0;
    OscillatorConfig oscillator = OscillatorConfig::calibrated();
    DriveParams drive{1.0, 10.0, 0.0};
    SimulateBlock simulate{};
    ClassifyBlock classify{};
    SweepBlock sweep{};
    TrngBlock trng{};
    NistBlock nist{};
    StochmulBlock stochmul{};
    RcTransformBlock rc_transform{};
    RcMgBlock rc_mg{};

    /// Validates every block; errors carry the dotted field path.
    void validate() const;
};

/// Full effective configuration as JSON (every field, defaults included).
std::string config_to_json(const RunConfig& c);

/// Overlays a JSON document onto `base`. Unknown keys and wrong types raise
/// ValidationError with the field path.
RunConfig config_from_json(const std::string& text, RunConfig base = {});

}  // namespace softdyn
