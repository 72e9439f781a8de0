#pragma once

#include "softdyn/oscillator.hpp"
#include "softdyn/signal.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace softdyn {

struct ExcitationOptions {
    double field_scale_mT = 1.0;
    double carrier_hz = 4.8;
    double tilt_deg = 0.0;
    int steps_per_period = 84;  // integration steps per carrier period (one input point)
};

struct Readouts {
    std::vector<double> x;
    std::vector<double> y;
};

/// Each input point u_n in [0, 1] holds the carrier amplitude at field_scale * u_n
/// for one carrier period; the tip is sampled at the end of that period.
Readouts excite_reservoir(const std::vector<double>& u, const OscillatorConfig& config,
                          const ExcitationOptions& options = {});

struct NormBounds {
    double lo = 0.0;
    double hi = 1.0;
};

/// Min-max normalization onto [0, 1]; returns the bounds used.
NormBounds normalize(std::vector<double>& v);

struct Embedding {
    Eigen::MatrixXd features;  // last column is the bias (all ones)
    Eigen::VectorXd targets;
    int lag = 1;
    int tau = 0;
    std::size_t first_target = 0;  // series index of targets(0)

    Eigen::Index rows() const { return features.rows(); }
};

/// Row r holds ch(r .. r+L-1) for every channel then 1; its target is z(r+L-1+tau).
/// Yields n - L + 1 - tau rows.
Embedding lag_embed(const std::vector<std::vector<double>>& channels, const std::vector<double>& target, int lag,
                    int tau);

struct RidgeModel {
    Eigen::VectorXd weights;  // one per feature, bias last
    double lambda = 1e-4;
    int lag = 0;
    int tau = 0;
    double training_mse = 0.0;

    Eigen::VectorXd predict(const Eigen::MatrixXd& features) const;
};

/// Solves (F'F + lambda I') w = F'z where I' leaves the bias (last column) unpenalized.
RidgeModel ridge_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, double lambda = 1e-4);

double mean_squared_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct SplitPlan {
    Eigen::Index train_rows = 0;
    Eigen::Index test_start = 0;
};

/// 80/20 split with a gap so no test feature window touches a training target.
SplitPlan plan_split(Eigen::Index rows, int lag, int tau, double train_fraction = 0.8);

struct TaskResult {
    int lag = 0;
    int tau = 0;
    double mse_rc = 0.0;
    double mse_baseline = 0.0;
    std::vector<std::size_t> t;  // series index of each test target
    std::vector<double> target;
    std::vector<double> pred_rc;
    std::vector<double> pred_baseline;
    RidgeModel model_rc;
    RidgeModel model_baseline;
};

/// Trains the reservoir path on `readouts` and the baseline on `u`, scoring both on the test split.
TaskResult evaluate_task(const Readouts& readouts, const std::vector<double>& u, const std::vector<double>& z,
                         int lag, int tau, double lambda = 1e-4);

struct TransformTaskOptions {
    WaveKind target = WaveKind::Square;
    std::size_t n = 1000;
    double period = 40.0;  // samples per input cycle
    int lag = 35;
    int tau = 1;
    double lambda = 1e-4;
    ExcitationOptions excitation{};
};

/// Input u = (1 + sin)/2; target is the chosen waveform mapped to [0, 1].
TaskResult run_transform_task(const OscillatorConfig& config, const TransformTaskOptions& options = {});

struct MGTaskOptions {
    MGParams mg{};
    std::vector<int> lags;
    std::vector<int> taus;
    double lambda = 1e-4;
    ExcitationOptions excitation{};
    unsigned threads = 0;
};

struct MGCell {
    int lag = 0;
    int tau = 0;
    std::optional<double> mse_rc;
    std::optional<double> mse_baseline;
    std::string error;
};

struct MGTaskResult {
    std::vector<double> series;  // normalized MG input
    Readouts readouts;           // normalized
    std::vector<MGCell> cells;   // lag-major
};

/// Excites once, then trains both models for every (lag, tau) cell. Cell failures are recorded.
MGTaskResult run_mg_task(const OscillatorConfig& config, const MGTaskOptions& options);

/// Single (lag, tau) evaluation on an existing excitation, with traces.
TaskResult mg_cell_detail(const MGTaskResult& run, int lag, int tau, double lambda = 1e-4);

std::string phase_diagram_csv(const std::vector<MGCell>& cells);
std::string traces_csv(const TaskResult& r);
std::string model_json(const RidgeModel& m);

}  // namespace softdyn
