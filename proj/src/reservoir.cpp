#include "softdyn/reservoir.hpp"

#include "softdyn/error.hpp"
#include "softdyn/io.hpp"
#include "softdyn/regime.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

namespace softdyn {

Readouts excite_reservoir(const std::vector<double>& u, const OscillatorConfig& config,
                          const ExcitationOptions& options)
{
    config.validate();
    if (!(options.field_scale_mT > 0.0)) throw ValidationError("field_scale", "must be > 0");
    if (!(options.carrier_hz > 0.0)) throw ValidationError("carrier_hz", "must be > 0");
    if (options.steps_per_period < 50) throw ValidationError("steps_per_period", "must be >= 50");
    for (double v : u)
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("input", "must be normalized to [0, 1]");

    const ModalOscillator osc(config, options.tilt_deg);
    const double w = 2.0 * std::numbers::pi * options.carrier_hz;
    const double period = 1.0 / options.carrier_hz;
    const double dt = period / options.steps_per_period;

    Readouts r;
    r.x.resize(u.size());
    r.y.resize(u.size());
    ModalState s{};
    for (std::size_t n = 0; n < u.size(); ++n) {
        const double amp = options.field_scale_mT * u[n];
        const double t0 = static_cast<double>(n) * period;
        for (int m = 0; m < options.steps_per_period; ++m) {
            // local time inside the period keeps the carrier phase exact
            const double tl = m * dt;
            s = osc.step(s, tl, dt, [&](double tt) { return amp * std::sin(w * tt); });
            if (!s.finite()) throw IntegrationDiverged(t0 + tl + dt);
        }
        const TipPosition p = osc.tip(s);
        r.x[n] = p.x;
        r.y[n] = p.y;
    }
    return r;
}

NormBounds normalize(std::vector<double>& v)
{
    if (v.empty()) return {};
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    NormBounds b{*lo, *hi};
    const double span = b.hi - b.lo;
    for (double& e : v) e = span > 0.0 ? (e - b.lo) / span : 0.0;
    return b;
}

Embedding lag_embed(const std::vector<std::vector<double>>& channels, const std::vector<double>& target, int lag,
                    int tau)
{
    if (lag < 1) throw ValidationError("lag", "must be >= 1");
    if (tau < 0) throw ValidationError("tau", "must be >= 0");
    if (channels.empty()) throw ShapeError("no feature channels");
    const std::size_t n = target.size();
    for (const auto& c : channels)
        if (c.size() != n) throw ShapeError("channels and target differ in length");
    if (n <= static_cast<std::size_t>(lag) + static_cast<std::size_t>(tau))
        throw LengthError("series of " + std::to_string(n) + " samples is too short for lag " +
                          std::to_string(lag) + " and tau " + std::to_string(tau));

    const auto rows = static_cast<Eigen::Index>(n - static_cast<std::size_t>(lag) + 1 - static_cast<std::size_t>(tau));
    const auto cols = static_cast<Eigen::Index>(channels.size()) * lag + 1;
    Embedding e;
    e.lag = lag;
    e.tau = tau;
    e.first_target = static_cast<std::size_t>(lag - 1 + tau);
    e.features.resize(rows, cols);
    e.targets.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        Eigen::Index c = 0;
        for (const auto& ch : channels)
            for (int j = 0; j < lag; ++j) e.features(r, c++) = ch[static_cast<std::size_t>(r + j)];
        e.features(r, c) = 1.0;
        e.targets(r) = target[e.first_target + static_cast<std::size_t>(r)];
    }
    return e;
}

Eigen::VectorXd RidgeModel::predict(const Eigen::MatrixXd& features) const
{
    if (features.cols() != weights.size()) throw ShapeError("feature count does not match the model");
    return features * weights;
}

RidgeModel ridge_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, double lambda)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda", "must be > 0");
    if (features.rows() != targets.size()) throw ShapeError("feature rows and targets differ");
    if (features.cols() < 1 || features.rows() < features.cols())
        throw ShapeError("need at least as many rows as features");

    const Eigen::Index p = features.cols();
    Eigen::MatrixXd a = features.transpose() * features;
    a.diagonal().head(p - 1).array() += lambda;
    const Eigen::VectorXd b = features.transpose() * targets;

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(dmax > 0.0) || d.minCoeff() <= 1e-14 * dmax)
        throw ConditioningError("normal matrix is singular despite regularization");

    RidgeModel m;
    m.lambda = lambda;
    m.weights = ldlt.solve(b);
    if (!m.weights.allFinite()) throw ConditioningError("ridge solution is not finite");
    m.training_mse = mean_squared_error(features * m.weights, targets);
    return m;
}

double mean_squared_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    if (a.size() != b.size() || a.size() == 0) throw ShapeError("MSE needs two equal, non-empty vectors");
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

SplitPlan plan_split(Eigen::Index rows, int lag, int tau, double train_fraction)
{
    SplitPlan s;
    s.train_rows = static_cast<Eigen::Index>(std::floor(train_fraction * static_cast<double>(rows)));
    // test row r reads z-indices r..r+L-1; the last training target sits at train_rows-1+L-1+tau
    const int gap = std::max(std::max(lag, tau), lag + tau - 1);
    s.test_start = s.train_rows + gap;
    if (s.test_start >= rows) throw LengthError("no test rows remain after the split gap");
    return s;
}

namespace {

struct PathFit {
    RidgeModel model;
    Eigen::VectorXd pred;
    double mse = 0.0;
};

PathFit fit_path(const Embedding& e, const SplitPlan& sp, double lambda)
{
    PathFit f;
    f.model = ridge_fit(e.features.topRows(sp.train_rows), e.targets.head(sp.train_rows), lambda);
    f.model.lag = e.lag;
    f.model.tau = e.tau;
    const Eigen::Index nt = e.rows() - sp.test_start;
    f.pred = f.model.predict(e.features.bottomRows(nt));
    f.mse = mean_squared_error(f.pred, e.targets.tail(nt));
    return f;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TaskResult evaluate_task(const Readouts& readouts, const std::vector<double>& u, const std::vector<double>& z,
                         int lag, int tau, double lambda)
{
    const Embedding rc = lag_embed({readouts.x, readouts.y}, z, lag, tau);
    const Embedding base = lag_embed({u}, z, lag, tau);
    const SplitPlan sp = plan_split(rc.rows(), lag, tau);
    PathFit a = fit_path(rc, sp, lambda);
    PathFit b = fit_path(base, sp, lambda);

    TaskResult r;
    r.lag = lag;
    r.tau = tau;
    r.mse_rc = a.mse;
    r.mse_baseline = b.mse;
    const Eigen::Index nt = rc.rows() - sp.test_start;
    for (Eigen::Index i = 0; i < nt; ++i) r.t.push_back(rc.first_target + static_cast<std::size_t>(sp.test_start + i));
    r.target = to_std(rc.targets.tail(nt));
    r.pred_rc = to_std(a.pred);
    r.pred_baseline = to_std(b.pred);
    r.model_rc = std::move(a.model);
    r.model_baseline = std::move(b.model);
    return r;
}

TaskResult run_transform_task(const OscillatorConfig& config, const TransformTaskOptions& o)
{
    std::vector<double> u = waveform(WaveKind::Sine, o.n, o.period);
    for (double& v : u) v = 0.5 + 0.5 * v;
    std::vector<double> z = waveform(o.target, o.n, o.period);
    for (double& v : z) v = 0.5 + 0.5 * v;

    Readouts r = excite_reservoir(u, config, o.excitation);
    normalize(r.x);
    normalize(r.y);
    return evaluate_task(r, u, z, o.lag, o.tau, o.lambda);
}

MGTaskResult run_mg_task(const OscillatorConfig& config, const MGTaskOptions& o)
{
    if (o.lags.empty() || o.taus.empty()) throw ValidationError("grid", "lag and tau grids must be non-empty");
    MGTaskResult run;
    run.series = rescale_unit(mackey_glass(o.mg));
    run.readouts = excite_reservoir(run.series, config, o.excitation);
    normalize(run.readouts.x);
    normalize(run.readouts.y);

    run.cells.resize(o.lags.size() * o.taus.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < run.cells.size(); i = next++) {
            MGCell& c = run.cells[i];
            c.lag = o.lags[i / o.taus.size()];
            c.tau = o.taus[i % o.taus.size()];
            try {
                const TaskResult r = evaluate_task(run.readouts, run.series, run.series, c.lag, c.tau, o.lambda);
                c.mse_rc = r.mse_rc;
                c.mse_baseline = r.mse_baseline;
            } catch (const Error& e) {
                c.error = e.what();
            }
        }
    };
    const unsigned n_threads = std::min<unsigned>(resolve_threads(o.threads), static_cast<unsigned>(run.cells.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return run;
}

TaskResult mg_cell_detail(const MGTaskResult& run, int lag, int tau, double lambda)
{
    return evaluate_task(run.readouts, run.series, run.series, lag, tau, lambda);
}

std::string phase_diagram_csv(const std::vector<MGCell>& cells)
{
    CsvBuilder csv("lag,tau,mse_rc,mse_baseline");
    for (const MGCell& c : cells)
        csv.row({std::to_string(c.lag), std::to_string(c.tau), c.mse_rc ? format_number(*c.mse_rc) : "",
                 c.mse_baseline ? format_number(*c.mse_baseline) : ""});
    return csv.str();
}

std::string traces_csv(const TaskResult& r)
{
    CsvBuilder csv("t,target,pred_rc,pred_baseline");
    for (std::size_t i = 0; i < r.t.size(); ++i)
        csv.row({static_cast<double>(r.t[i]), r.target[i], r.pred_rc[i], r.pred_baseline[i]});
    return csv.str();
}

std::string model_json(const RidgeModel& m)
{
    nlohmann::ordered_json j;
    j["lag"] = m.lag;
    j["tau"] = m.tau;
    j["lambda"] = m.lambda;
    j["weights"] = to_std(m.weights);
    return j.dump(2) + "\n";
}

}  // namespace softdyn
