// softdyn: command-line entry point for every pipeline.

#include "softdyn/error.hpp"
#include "softdyn/io.hpp"
#include "softdyn/orchestrator.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace softdyn;

namespace {

template <class T>
void apply(const std::optional<T>& flag, T& field)
{
    if (flag) field = *flag;
}

struct Flags {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
    std::string config_path;

    std::optional<double> amp, freq, tilt;
    std::optional<double> duration, dt, noise;
    std::optional<std::string> input;
    std::optional<double> rate, skip;
    std::optional<double> f_min, f_max, f_step, a_min, a_max, a_step, settle;
    std::optional<std::size_t> record_periods;
    bool lyapunov = false;
    std::optional<std::size_t> runs;
    bool include_y = false;
    std::optional<std::size_t> length;
    std::optional<double> alpha;
    std::optional<std::uint32_t> x1, x2;
    std::optional<unsigned> k;
    std::optional<std::size_t> n;
    std::optional<std::string> source;
    bool minus_one = false;
    bool sweep = false;
    std::optional<std::string> target;
    std::optional<double> period, lambda, field;
    std::optional<int> lag, tau, lag_min, lag_max, tau_min, tau_max;
    std::optional<std::size_t> points;
};

void add_drive(CLI::App* app, Flags& f)
{
    app->add_option("--drive-amp", f.amp, "Field amplitude (mT)");
    app->add_option("--drive-freq", f.freq, "Drive frequency (Hz)");
    app->add_option("--tilt", f.tilt, "In-plane field angle (deg)");
}

RunConfig build_config(const std::string& sub, const Flags& f)
{
    RunConfig c;
    if (!f.config_path.empty()) c = config_from_json(read_file(f.config_path), c);
    c.subcommand = sub;
    apply(f.seed, c.seed);
    apply(f.out, c.out);
    apply(f.threads, c.threads);

    if (sub == "simulate" || sub == "classify") {
        apply(f.amp, c.drive.amplitude_mT);
        apply(f.freq, c.drive.frequency_hz);
        apply(f.tilt, c.drive.tilt_deg);
        apply(f.duration, c.simulate.duration_s);
        apply(f.dt, c.simulate.dt_s);
        apply(f.noise, c.simulate.noise_sigma);
        apply(f.input, c.classify.input);
        apply(f.rate, c.classify.sample_rate_hz);
        apply(f.skip, c.classify.skip_s);
    } else if (sub == "sweep") {
        auto& s = c.sweep;
        apply(f.f_min, s.f_min);
        apply(f.f_max, s.f_max);
        apply(f.f_step, s.f_step);
        apply(f.a_min, s.a_min);
        apply(f.a_max, s.a_max);
        apply(f.a_step, s.a_step);
        apply(f.settle, s.options.settle_s);
        apply(f.record_periods, s.options.record_periods);
        if (f.lyapunov) s.lyapunov = true;
    } else if (sub == "trng") {
        auto& t = c.trng.source;
        apply(f.amp, t.drive.amplitude_mT);
        apply(f.freq, t.drive.frequency_hz);
        apply(f.tilt, t.drive.tilt_deg);
        apply(f.duration, t.duration_s);
        apply(f.runs, t.runs);
        apply(f.settle, t.settle_s);
        if (f.include_y) t.include_y = true;
    } else if (sub == "nist") {
        apply(f.input, c.nist.input);
        apply(f.length, c.nist.reference_length);
        apply(f.alpha, c.nist.tests.alpha);
    } else if (sub == "stochmul") {
        auto& s = c.stochmul;
        apply(f.x1, s.x1);
        apply(f.x2, s.x2);
        apply(f.k, s.k);
        apply(f.n, s.n);
        apply(f.source, s.source);
        if (f.minus_one) s.minus_one = true;
        if (f.sweep) s.sweep = true;
    } else if (sub == "rc-transform") {
        auto& t = c.rc_transform.task;
        if (f.target) t.target = parse_wave_kind(*f.target);
        apply(f.n, t.n);
        apply(f.period, t.period);
        apply(f.lag, t.lag);
        apply(f.tau, t.tau);
        apply(f.lambda, t.lambda);
        apply(f.field, t.excitation.field_scale_mT);
    } else if (sub == "rc-mg") {
        auto& m = c.rc_mg;
        apply(f.lag_min, m.lag_min);
        apply(f.lag_max, m.lag_max);
        apply(f.tau_min, m.tau_min);
        apply(f.tau_max, m.tau_max);
        apply(f.lag, m.detail_lag);
        apply(f.tau, m.detail_tau);
        apply(f.lambda, m.lambda);
        apply(f.field, m.excitation.field_scale_mT);
        apply(f.points, m.mg.n_points);
    }
    return c;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"softdyn: driven soft-oscillator computing pipelines"};
    app.require_subcommand(1);
    Flags f;
    app.add_option("--seed", f.seed, "Root seed for every random substream");
    app.add_option("--out", f.out, "Output directory");
    app.add_option("--config", f.config_path, "JSON run configuration");
    app.add_option("--threads", f.threads, "Worker threads (default: SOFTDYN_THREADS or all cores)");
    bool dump_config = false;
    app.add_flag("--dump-config", dump_config, "Print the effective configuration and exit");
    app.fallthrough();

    auto* sim = app.add_subcommand("simulate", "Integrate the oscillator and export the tip trajectory");
    add_drive(sim, f);
    sim->add_option("--duration", f.duration, "Seconds to simulate");
    sim->add_option("--dt", f.dt, "Integration step (s); 0 picks one from the drive frequency");
    sim->add_option("--noise", f.noise, "Gaussian readout noise sigma");

    auto* cls = app.add_subcommand("classify", "Label the dynamic regime of one drive setting or a recording");
    add_drive(cls, f);
    cls->add_option("--input", f.input, "Tracked CSV t_s,x,y (omit to simulate)");
    cls->add_option("--rate", f.rate, "Resampling rate for recorded input (Hz)");
    cls->add_option("--skip", f.skip, "Seconds of the recording to discard");

    auto* sw = app.add_subcommand("sweep", "Regime phase diagram over frequency and amplitude");
    sw->add_option("--f-min", f.f_min);
    sw->add_option("--f-max", f.f_max);
    sw->add_option("--f-step", f.f_step);
    sw->add_option("--a-min", f.a_min);
    sw->add_option("--a-max", f.a_max);
    sw->add_option("--a-step", f.a_step);
    sw->add_option("--settle", f.settle, "Settling time per cell (s)");
    sw->add_option("--record-periods", f.record_periods);
    sw->add_flag("--lyapunov", f.lyapunov, "Also estimate the largest Lyapunov exponent per cell");

    auto* tr = app.add_subcommand("trng", "Random bits from chaotic trajectories");
    add_drive(tr, f);
    tr->add_option("--duration", f.duration, "Seconds per run");
    tr->add_option("--runs", f.runs, "Independent runs");
    tr->add_option("--settle", f.settle, "Seconds discarded per run");
    tr->add_flag("--include-y", f.include_y, "Interleave the y coordinate");

    auto* ni = app.add_subcommand("nist", "Statistical test battery");
    ni->add_option("--input", f.input, "ASCII bit file (omit for the seeded reference generator)");
    ni->add_option("--length", f.length, "Reference generator length in bits");
    ni->add_option("--alpha", f.alpha, "Significance level");

    auto* sm = app.add_subcommand("stochmul", "Stochastic AND-gate multiplication");
    sm->add_option("x1", f.x1, "First operand");
    sm->add_option("x2", f.x2, "Second operand");
    sm->add_option("-n", f.n, "Bitstream length");
    sm->add_option("-k", f.k, "Operand width in bits");
    sm->add_option("--source", f.source, "Integer CSV index,value (omit for the reference generator)");
    sm->add_flag("--minus-one", f.minus_one, "Scale products by (2^k - 1)^2");
    sm->add_flag("--sweep", f.sweep, "Also multiply x1 by every k-bit multiplier");

    auto* rt = app.add_subcommand("rc-transform", "Sine to square or sawtooth transformation");
    rt->add_option("--target", f.target, "square or sawtooth");
    rt->add_option("-n", f.n, "Input points");
    rt->add_option("--period", f.period, "Input period in samples");
    rt->add_option("--lag", f.lag);
    rt->add_option("--tau", f.tau);
    rt->add_option("--lambda", f.lambda);
    rt->add_option("--field", f.field, "Field scale (mT)");

    auto* rm = app.add_subcommand("rc-mg", "Mackey-Glass prediction phase diagram");
    rm->add_option("--lag-min", f.lag_min);
    rm->add_option("--lag-max", f.lag_max);
    rm->add_option("--tau-min", f.tau_min);
    rm->add_option("--tau-max", f.tau_max);
    rm->add_option("--lag", f.lag, "Lag of the exported traces");
    rm->add_option("--tau", f.tau, "Step-ahead of the exported traces");
    rm->add_option("--lambda", f.lambda);
    rm->add_option("--field", f.field, "Field scale (mT)");
    rm->add_option("--points", f.points, "Mackey-Glass points");

    app.add_subcommand("report", "Summarize the manifest in --out");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        if (sub == "report") {
            std::string out = f.out.value_or("out");
            if (!f.config_path.empty() && !f.out) out = config_from_json(read_file(f.config_path)).out;
            return report(out, std::cout);
        }
        const RunConfig config = build_config(sub, f);
        if (dump_config) {
            config.validate();
            std::cout << config_to_json(config);
            return kExitOk;
        }
        return execute(config, std::cout);
    } catch (const ValidationError& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
