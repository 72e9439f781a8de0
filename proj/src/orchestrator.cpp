#include "softdyn/orchestrator.hpp"

#include "softdyn/error.hpp"
#include "softdyn/io.hpp"
#include "softdyn/rng.hpp"
#include "softdyn/trajectory_io.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>

namespace softdyn {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string utc_now()
{
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                    std::chrono::system_clock::now())));
}

// Collects the files of one subcommand run.
class Artifacts {
public:
    Artifacts(fs::path out, std::string sub) : out_(std::move(out)), sub_(std::move(sub)) {}

    void write(const std::string& name, const std::string& content)
    {
        const std::string rel = sub_ + "/" + name;
        write_atomic(out_ / rel, content);
        files_.push_back({{"path", rel}, {"sha256", sha256_hex(content)}});
    }

    json files() const { return files_; }

private:
    fs::path out_;
    std::string sub_;
    json files_ = json::array();
};

json read_manifest(const fs::path& path)
{
    if (!fs::exists(path)) return json{{"runs", json::object()}};
    try {
        json j = json::parse(read_file(path));
        if (!j.contains("runs") || !j["runs"].is_object()) throw SchemaError(1, "manifest lacks a runs object");
        return j;
    } catch (const json::parse_error& e) {
        throw ParseError(1, std::string("manifest is not valid JSON: ") + e.what());
    }
}

double auto_dt(double f, const SweepOptions& o) { return 1.0 / (static_cast<double>(steps_per_period(f, o)) * f); }

std::string poincare_csv(const PoincareMap& m)
{
    CsvBuilder csv("k,x,y");
    for (std::size_t i = 0; i < m.size(); ++i) csv.row({static_cast<double>(i), m.x[i], m.y[i]});
    return csv.str();
}

json diagnostics_json(const RegimeLabel& l)
{
    const RegimeDiagnostics& d = l.diagnostics;
    return json{{"regime", regime_name(l.regime)},
                {"ambiguous", l.ambiguous},
                {"cluster_count", d.cluster_count},
                {"clustered_fraction", d.clustered_fraction},
                {"largest_cluster_fraction", d.largest_cluster_fraction},
                {"flatness", d.flatness},
                {"harmonic_fraction", d.harmonic_fraction},
                {"radius", d.radius}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct Outcome {
    json summary = json::object();
    bool check_ok = true;
};

Outcome run_simulate(const RunConfig& c, Artifacts& a, const SeedTree& seeds)
{
    SimulationOptions sim;
    sim.duration_s = c.simulate.duration_s;
    sim.dt_s = c.simulate.dt_s > 0.0 ? c.simulate.dt_s : auto_dt(c.drive.frequency_hz, c.sweep.options);
    sim.noise_sigma = c.simulate.noise_sigma;
    sim.noise_seed = seeds.derive("simulate/noise");
    const Trajectory traj = simulate(c.oscillator, c.drive, sim);
    a.write("trajectory.csv", trajectory_csv(traj));
    Outcome o;
    o.summary = {{"samples", traj.size()}, {"dt_s", sim.dt_s}, {"duration_s", traj.duration()}};
    return o;
}

Outcome run_classify(const RunConfig& c, Artifacts& a)
{
    Trajectory rec;
    if (!c.classify.input.empty()) {
        const TrackedSeries filled = fill_gaps(load_tracked_csv(c.classify.input));
        double rate = c.classify.sample_rate_hz;
        if (rate <= 0.0) {
            std::vector<double> d;
            for (std::size_t i = 1; i < filled.size(); ++i) d.push_back(filled.t[i] - filled.t[i - 1]);
            std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
            rate = 1.0 / d[d.size() / 2];
        }
        const Trajectory full = resample_uniform(filled, rate, c.drive, Provenance::Recorded);
        rec = tail(full, full.t.front() + c.classify.skip_s);
    } else {
        const SweepOptions& so = c.sweep.options;
        const double f = c.drive.frequency_hz;
        const double settle_periods = std::ceil(so.settle_s * f - 1e-9);
        SimulationOptions sim;
        sim.dt_s = auto_dt(f, so);
        sim.duration_s = (settle_periods + static_cast<double>(so.record_periods)) / f;
        rec = tail(simulate(c.oscillator, c.drive, sim), settle_periods / f);
    }
    const ClassifierConfig& cc = c.sweep.options.classifier;
    const RegimeLabel label = classify_trajectory(rec, c.drive, cc);
    a.write("spectrum.csv", spectrum_csv(power_spectrum(rec.x, rec.sample_rate_hz)));
    a.write("poincare.csv", poincare_csv(poincare_sample(rec, c.drive)));
    a.write("regime.json", dump(diagnostics_json(label)));
    Outcome o;
    o.summary = diagnostics_json(label);
    return o;
}

Outcome run_sweep(const RunConfig& c, Artifacts& a, std::ostream& log)
{
    SweepOptions so = c.sweep.options;
    so.threads = c.threads;
    const auto fg = c.sweep.f_grid();
    const auto ag = c.sweep.a_grid();
    log << "sweeping " << fg.size() * ag.size() << " cells\n";
    const std::vector<SweepCell> cells = phase_diagram_sweep(c.oscillator, fg, ag, so);
    a.write("phase_diagram.csv", sweep_csv(cells));

    std::map<std::string, std::size_t> counts{{"Periodic", 0}, {"Quasiperiodic", 0}, {"Chaotic", 0}, {"error", 0}};
    for (const SweepCell& cell : cells) ++counts[cell.label ? regime_name(cell.label->regime) : "error"];
    Outcome o;
    o.summary["cells"] = cells.size();
    for (const auto& [k, v] : counts) o.summary[k] = v;

    if (c.sweep.lyapunov) {
        CsvBuilder csv("f_hz,A_mT,label,lyapunov");
        std::size_t chaotic_pos = 0;
        std::size_t periodic_nonpos = 0;
        for (const SweepCell& cell : cells) {
            if (!cell.label) continue;
            const double lam = cell_lyapunov(c.oscillator, cell.frequency_hz, cell.amplitude_mT, so);
            csv.row({format_number(cell.frequency_hz), format_number(cell.amplitude_mT),
                     regime_name(cell.label->regime), format_number(lam)});
            if (cell.label->regime == Regime::Chaotic && lam > 0.0) ++chaotic_pos;
            if (cell.label->regime == Regime::Periodic && lam <= 0.0) ++periodic_nonpos;
        }
        a.write("lyapunov.csv", csv.str());
        o.summary["chaotic_positive_lyapunov"] = chaotic_pos;
        o.summary["periodic_nonpositive_lyapunov"] = periodic_nonpos;
    }
    const bool all_three = counts["Periodic"] > 0 && counts["Quasiperiodic"] > 0 && counts["Chaotic"] > 0;
    o.summary["all_three_regimes"] = all_three;
    return o;
}

Outcome run_trng(const RunConfig& c, Artifacts& a)
{
    const TrngOutput t = run_trng_pipeline(c.oscillator, c.trng, SeedTree(c.seed).child("trng"));
    a.write("bits.txt", bits_ascii(t.bits));
    a.write("integers.csv", integers_csv(t.integers));
    a.write("autocorrelation.csv", autocorrelation_csv(t.rho));
    a.write("qq.csv", qq_csv(t.uniformity));
    Outcome o;
    o.summary = {{"raw_points", t.raw.values.size()},
                 {"uniform_values", t.uniform.values.size()},
                 {"bits", t.bits.size()},
                 {"integers", t.integers.size()},
                 {"chi_square_p", t.chi_square_p},
                 {"max_abs_autocorrelation", t.max_abs_rho},
                 {"autocorrelation_bound", t.rho_bound},
                 {"ks_statistic", t.uniformity.ks_statistic},
                 {"ks_p", t.uniformity.ks_p_value},
                 {"max_qq_deviation", t.uniformity.max_qq_deviation}};
    a.write("diagnostics.json", dump(o.summary));
    const double alpha = 0.01;
    o.check_ok = t.chi_square_p >= alpha && t.max_abs_rho < t.rho_bound && t.uniformity.ks_p_value >= alpha;
    return o;
}

Outcome run_nist(const RunConfig& c, Artifacts& a, std::ostream& log)
{
    std::vector<std::uint8_t> bits;
    std::string source;
    if (c.nist.input.empty()) {
        bits = reference_bits(SeedTree(c.seed).derive("nist/reference"), c.nist.reference_length);
        source = "reference";
    } else {
        bits = parse_bits_ascii(read_file(c.nist.input), 1).bits;
        source = c.nist.input;
    }
    const BatterySummary s = run_battery(bits, c.nist.tests);
    a.write("nist.json", battery_json(s));
    const std::string line = fmt::format("{}/{}", s.passed, s.applicable);
    log << "passed/applicable " << line << "\n";
    Outcome o;
    o.summary = {{"source", source}, {"bits", bits.size()}, {"passed", s.passed}, {"applicable", s.applicable}};
    json failed = json::array();
    for (const TestResult& r : s.results)
        if (r.applicable && !r.pass) failed.push_back(r.name);
    o.summary["failed"] = failed;
    o.check_ok = s.passed == s.applicable;
    return o;
}

Outcome run_stochmul(const RunConfig& c, Artifacts& a)
{
    const StochmulBlock& b = c.stochmul;
    const Denominator d = b.minus_one ? Denominator::PowerOfTwoMinusOne : Denominator::PowerOfTwo;
    const std::size_t multipliers = (std::size_t{1} << b.k) - 1;
    const std::size_t need = 2 * b.n * (1 + (b.sweep ? multipliers : 0));
    std::vector<std::uint32_t> rnd;
    if (b.source.empty())
        rnd = reference_integers(SeedTree(c.seed).derive("stochmul/reference"), need, b.k);
    else
        rnd = parse_integers_csv(read_file(b.source), b.k);
    if (rnd.size() < need)
        throw InsufficientRandomnessError(fmt::format("{} integers available, {} needed", rnd.size(), need));

    const std::span<const std::uint32_t> all(rnd);
    const MultiplyResult r = stochastic_multiply(b.x1, b.x2, b.k, b.n, all.first(2 * b.n), d);
    a.write("result.json", multiply_json(r));
    a.write("convergence.csv", convergence_csv(r));
    Outcome o;
    o.summary = {{"x1", r.x1}, {"x2", r.x2}, {"n", r.n}, {"estimate", r.estimate}, {"exact", r.exact},
                 {"rel_error", r.rel_error}};
    if (b.sweep) {
        std::vector<std::uint32_t> ms(multipliers);
        for (std::size_t i = 0; i < multipliers; ++i) ms[i] = static_cast<std::uint32_t>(i + 1);
        const MultiplierSweep sw = multiplier_sweep(b.x1, ms, b.k, b.n, all.subspan(2 * b.n), d);
        CsvBuilder csv("multiplier,estimate,exact");
        for (const SweepPoint& p : sw.points)
            csv.row({static_cast<double>(p.multiplier), static_cast<double>(p.estimate), static_cast<double>(p.exact)});
        a.write("multiplier_sweep.csv", csv.str());
        o.summary["sweep_distance"] = sw.distance;
    }
    return o;
}

Outcome run_rc_transform(const RunConfig& c, Artifacts& a)
{
    const TaskResult r = run_transform_task(c.oscillator, c.rc_transform.task);
    a.write("traces.csv", traces_csv(r));
    a.write("model_rc.json", model_json(r.model_rc));
    a.write("model_baseline.json", model_json(r.model_baseline));
    Outcome o;
    o.summary = {{"target", wave_kind_name(c.rc_transform.task.target)},
                 {"lag", r.lag},
                 {"tau", r.tau},
                 {"mse_rc", r.mse_rc},
                 {"mse_baseline", r.mse_baseline},
                 {"baseline_peaks", significant_peaks(periodogram(r.pred_baseline, 1.0))},
                 {"rc_peaks", significant_peaks(periodogram(r.pred_rc, 1.0))}};
    a.write("summary.json", dump(o.summary));
    return o;
}

Outcome run_rc_mg(const RunConfig& c, Artifacts& a)
{
    const RcMgBlock& b = c.rc_mg;
    MGTaskOptions mo;
    mo.mg = b.mg;
    for (int l = b.lag_min; l <= b.lag_max; ++l) mo.lags.push_back(l);
    for (int t = b.tau_min; t <= b.tau_max; ++t) mo.taus.push_back(t);
    mo.lambda = b.lambda;
    mo.excitation = b.excitation;
    mo.threads = c.threads;
    const MGTaskResult run = run_mg_task(c.oscillator, mo);
    a.write("series.csv", series_csv(run.series));
    a.write("phase_diagram.csv", phase_diagram_csv(run.cells));

    const TaskResult d = mg_cell_detail(run, b.detail_lag, b.detail_tau, b.lambda);
    a.write("traces.csv", traces_csv(d));
    a.write("model_rc.json", model_json(d.model_rc));
    a.write("model_baseline.json", model_json(d.model_baseline));

    std::size_t failed = 0;
    for (const MGCell& cell : run.cells) failed += cell.error.empty() ? 0 : 1;
    Outcome o;
    o.summary = {{"cells", run.cells.size()},
                 {"failed_cells", failed},
                 {"lag", d.lag},
                 {"tau", d.tau},
                 {"mse_rc", d.mse_rc},
                 {"mse_baseline", d.mse_baseline}};
    a.write("summary.json", dump(o.summary));
    return o;
}

}  // namespace

const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> s{"simulate", "classify",     "sweep", "trng",  "nist",
                                            "stochmul", "rc-transform", "rc-mg", "report"};
    return s;
}

int execute(const RunConfig& config, std::ostream& log)
{
    config.validate();
    const std::string& sub = config.subcommand;
    if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end() || sub == "report")
        throw ValidationError("subcommand", "cannot execute '" + sub + "'");

    const fs::path out(config.out);
    const std::string started = utc_now();
    const SeedTree seeds(config.seed);
    Artifacts a(out, sub);
    a.write("config.json", config_to_json(config));

    Outcome o;
    try {
        if (sub == "simulate") o = run_simulate(config, a, seeds);
        else if (sub == "classify") o = run_classify(config, a);
        else if (sub == "sweep") o = run_sweep(config, a, log);
        else if (sub == "trng") o = run_trng(config, a);
        else if (sub == "nist") o = run_nist(config, a, log);
        else if (sub == "stochmul") o = run_stochmul(config, a);
        else if (sub == "rc-transform") o = run_rc_transform(config, a);
        else o = run_rc_mg(config, a);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(sub + ": " + e.what());
    }

    const fs::path mpath = out / "manifest.json";
    json manifest = read_manifest(mpath);
    manifest["runs"][sub] = json{{"seed", config.seed},
                                 {"started_utc", started},
                                 {"finished_utc", utc_now()},
                                 {"status", o.check_ok ? "ok" : "check_failed"},
                                 {"summary", o.summary},
                                 {"files", a.files()}};
    write_atomic(mpath, dump(manifest));
    log << sub << ": " << o.summary.dump() << "\n";
    return o.check_ok ? kExitOk : kExitCheckFailed;
}

namespace {

std::string num(const json& j, const char* key)
{
    if (!j.contains(key)) return "?";
    const json& v = j[key];
    if (v.is_number_float()) return fmt::format("{:.4g}", v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

}  // namespace

int report(const fs::path& out_dir, std::ostream& os)
{
    const fs::path mpath = out_dir / "manifest.json";
    if (!fs::exists(mpath)) {
        os << "no artifacts: " << mpath.string() << " not found\n";
        return kExitRuntime;
    }
    const json manifest = read_manifest(mpath);
    const json& runs = manifest["runs"];
    if (runs.empty()) {
        os << "no artifacts\n";
        return kExitRuntime;
    }

    int code = kExitOk;
    std::size_t absent = 0;
    for (const auto& [sub, run] : runs.items())
        for (const json& f : run["files"]) {
            const fs::path p = out_dir / f["path"].get<std::string>();
            if (!fs::exists(p)) {
                os << "absent: " << f["path"].get<std::string>() << "\n";
                ++absent;
            } else if (sha256_hex(read_file(p)) != f["sha256"].get<std::string>()) {
                os << "altered: " << f["path"].get<std::string>() << "\n";
                ++absent;
            }
        }
    if (absent) code = kExitRuntime;

    auto section = [&](const char* title, std::initializer_list<const char*> subs, auto&& body) {
        os << "== " << title << " ==\n";
        bool any = false;
        for (const char* s : subs)
            if (runs.contains(s)) {
                any = true;
                const json& r = runs[s];
                const bool ok = r["status"] == "ok";
                os << "  [" << s << "] seed " << r["seed"].dump() << (ok ? "" : "  ** CHECK FAILED **") << "\n";
                body(s, r["summary"]);
                if (!ok && code == kExitOk) code = kExitCheckFailed;
            }
        if (!any) os << "  (not run)\n";
    };

    section("Regimes", {"sweep", "classify", "simulate"}, [&](const std::string& s, const json& j) {
        if (s == "sweep")
            os << "  cells " << num(j, "cells") << ": Periodic " << num(j, "Periodic") << ", Quasiperiodic "
               << num(j, "Quasiperiodic") << ", Chaotic " << num(j, "Chaotic") << ", errors " << num(j, "error")
               << "\n";
        else if (s == "classify")
            os << "  label " << num(j, "regime") << " (flatness " << num(j, "flatness") << ", harmonic "
               << num(j, "harmonic_fraction") << ")\n";
        else
            os << "  " << num(j, "samples") << " samples\n";
    });
    section("Randomness", {"trng", "nist"}, [&](const std::string& s, const json& j) {
        if (s == "trng")
            os << "  " << num(j, "bits") << " bits, chi2 p " << num(j, "chi_square_p") << ", max |rho| "
               << num(j, "max_abs_autocorrelation") << " (bound " << num(j, "autocorrelation_bound") << "), KS p "
               << num(j, "ks_p") << "\n";
        else
            os << "  NIST " << num(j, "passed") << "/" << num(j, "applicable") << " passed on " << num(j, "bits")
               << " bits" << (j["failed"].empty() ? "" : ", failed " + j["failed"].dump()) << "\n";
    });
    section("Stochastic multiplication", {"stochmul"}, [&](const std::string&, const json& j) {
        os << "  " << num(j, "x1") << " x " << num(j, "x2") << " at N=" << num(j, "n") << ": " << num(j, "estimate")
           << " vs " << num(j, "exact") << ", rel error " << num(j, "rel_error") << "\n";
    });
    section("Reservoir computing", {"rc-transform", "rc-mg"}, [&](const std::string& s, const json& j) {
        os << "  " << (s == "rc-transform" ? "sine->" + j.value("target", std::string("?")) : std::string("Mackey-Glass"))
           << " lag " << num(j, "lag") << " tau " << num(j, "tau") << ": MSE RC " << num(j, "mse_rc")
           << ", baseline " << num(j, "mse_baseline") << "\n";
    });
    return code;
}

}  // namespace softdyn
