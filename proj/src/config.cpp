#include "softdyn/config.hpp"

#include "softdyn/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <set>

namespace softdyn {

namespace {

using json = nlohmann::ordered_json;

// One walker serves both directions so the field list exists once.
class Node {
public:
    Node(json& j, std::string path, bool reading) : j_(j), path_(std::move(path)), reading_(reading)
    {
        if (reading_ && !j_.is_object()) throw ValidationError(path_.empty() ? "config" : path_, "expected an object");
    }

    ~Node() noexcept(false)
    {
        if (!reading_ || std::uncaught_exceptions() > 0) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ValidationError(where(it.key()), "unknown field");
    }

    Node child(const char* key)
    {
        seen_.insert(key);
        if (!reading_) {
            j_[key] = json::object();
            return Node(j_[key], where(key), false);
        }
        if (!j_.contains(key)) {
            empty_ = json::object();
            return Node(empty_, where(key), true);
        }
        return Node(j_[key], where(key), true);
    }

    template <class T>
    void operator()(const char* key, T& value)
    {
        seen_.insert(key);
        if (!reading_) {
            put(key, value);
            return;
        }
        if (!j_.contains(key)) return;
        get(j_[key], where(key), value);
    }

private:
    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    template <class T>
    void put(const char* key, const T& v)
    {
        if constexpr (std::is_same_v<T, WaveKind>)
            j_[key] = wave_kind_name(v);
        else if constexpr (std::is_same_v<T, double>)
            j_[key] = std::isfinite(v) ? json(v) : json(nullptr);
        else
            j_[key] = v;
    }

    static void get(const json& j, const std::string& path, double& v)
    {
        if (!j.is_number()) throw ValidationError(path, "expected a number");
        v = j.get<double>();
    }
    static void get(const json& j, const std::string& path, bool& v)
    {
        if (!j.is_boolean()) throw ValidationError(path, "expected true or false");
        v = j.get<bool>();
    }
    static void get(const json& j, const std::string& path, std::string& v)
    {
        if (!j.is_string()) throw ValidationError(path, "expected a string");
        v = j.get<std::string>();
    }
    static void get(const json& j, const std::string& path, WaveKind& v)
    {
        std::string s;
        get(j, path, s);
        try {
            v = parse_wave_kind(s);
        } catch (const ValidationError& e) {
            throw ValidationError(path, e.what());
        }
    }
    static void get(const json& j, const std::string& path, std::vector<double>& v)
    {
        if (!j.is_array()) throw ValidationError(path, "expected an array of numbers");
        v.clear();
        for (const auto& e : j) {
            if (!e.is_number()) throw ValidationError(path, "expected an array of numbers");
            v.push_back(e.get<double>());
        }
    }
    template <class T>
        requires std::is_integral_v<T>
    static void get(const json& j, const std::string& path, T& v)
    {
        if (j.is_number_unsigned()) {
            const auto u = j.get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) throw ValidationError(path, "out of range");
            v = static_cast<T>(u);
            return;
        }
        if (j.is_number_integer()) {
            const auto s = j.get<std::int64_t>();
            if constexpr (std::is_unsigned_v<T>) {
                if (s < 0) throw ValidationError(path, "must be >= 0");
            }
            if (s > static_cast<std::int64_t>(std::numeric_limits<T>::max()) ||
                (std::is_signed_v<T> && s < static_cast<std::int64_t>(std::numeric_limits<T>::min())))
                throw ValidationError(path, "out of range");
            v = static_cast<T>(s);
            return;
        }
        throw ValidationError(path, "expected an integer");
    }

    json& j_;
    std::string path_;
    bool reading_;
    std::set<std::string> seen_;
    json empty_;
};

void walk_drive(Node n, DriveParams& d)
{
    n("amplitude", d.amplitude_mT);
    n("frequency", d.frequency_hz);
    n("tilt", d.tilt_deg);
}

void walk_excitation(Node n, ExcitationOptions& e)
{
    n("field_scale", e.field_scale_mT);
    n("carrier_hz", e.carrier_hz);
    n("tilt", e.tilt_deg);
    n("steps_per_period", e.steps_per_period);
}

void walk(Node& root, RunConfig& c)
{
    root("subcommand", c.subcommand);
    root("seed", c.seed);
    root("out", c.out);
    root("threads", c.threads);
    {
        Node o = root.child("oscillator");
        auto& p = c.oscillator;
        o("omega1", p.omega1);
        o("omega2", p.omega2);
        o("zeta1", p.zeta1);
        o("zeta2", p.zeta2);
        o("kappa1", p.kappa1);
        o("kappa2", p.kappa2);
        o("chi", p.chi);
        o("mu1", p.mu1);
        o("mu2", p.mu2);
        o("eta", p.eta);
        o("arm_length", p.arm_length);
        o("mode_mixing", p.mode_mixing);
    }
    walk_drive(root.child("drive"), c.drive);
    {
        Node s = root.child("simulate");
        s("duration_s", c.simulate.duration_s);
        s("dt_s", c.simulate.dt_s);
        s("noise_sigma", c.simulate.noise_sigma);
    }
    {
        Node s = root.child("classify");
        s("input", c.classify.input);
        s("sample_rate_hz", c.classify.sample_rate_hz);
        s("skip_s", c.classify.skip_s);
    }
    {
        Node s = root.child("sweep");
        auto& b = c.sweep;
        s("f_min", b.f_min);
        s("f_max", b.f_max);
        s("f_step", b.f_step);
        s("a_min", b.a_min);
        s("a_max", b.a_max);
        s("a_step", b.a_step);
        s("lyapunov", b.lyapunov);
        s("settle_s", b.options.settle_s);
        s("record_periods", b.options.record_periods);
        s("min_steps_per_period", b.options.min_steps_per_period);
        s("samples_per_second_floor", b.options.samples_per_second_floor);
        Node k = s.child("classifier");
        auto& cl = b.options.classifier;
        k("harmonic_threshold", cl.harmonic_threshold);
        k("max_periodic_clusters", cl.max_periodic_clusters);
        k("periodic_clustered_fraction", cl.periodic_clustered_fraction);
        k("flatness_threshold", cl.flatness_threshold);
        k("chaotic_largest_fraction", cl.chaotic_largest_fraction);
        k("radius_fraction", cl.radius_fraction);
        k("radius_rms_floor", cl.radius_rms_floor);
        k("min_cluster_fraction", cl.min_cluster_fraction);
        k("min_cluster_points", cl.min_cluster_points);
        k("min_points", cl.min_points);
    }
    {
        Node s = root.child("trng");
        auto& t = c.trng;
        walk_drive(s.child("drive"), t.source.drive);
        s("duration_s", t.source.duration_s);
        s("runs", t.source.runs);
        s("settle_s", t.source.settle_s);
        s("steps_per_period", t.source.steps_per_period);
        s("initial_spread", t.source.initial_spread);
        s("include_y", t.source.include_y);
        s("block", t.whiten.block_size);
        s("trim", t.whiten.trim);
        s("stride", t.stride);
        s("bits", t.bits);
        s("max_lag", t.max_lag);
    }
    {
        Node s = root.child("nist");
        auto& b = c.nist;
        s("input", b.input);
        s("reference_length", b.reference_length);
        auto& t = b.tests;
        s("alpha", t.alpha);
        s("block_frequency_m", t.block_frequency_m);
        s("longest_run_m", t.longest_run_m);
        s("rank_rows", t.rank_rows);
        s("rank_cols", t.rank_cols);
        s("non_overlapping_template", t.non_overlapping_template);
        s("non_overlapping_blocks", t.non_overlapping_blocks);
        s("overlapping_m", t.overlapping_m);
        s("overlapping_block", t.overlapping_block);
        s("overlapping_probabilities", t.overlapping_probabilities);
        s("universal_l", t.universal_l);
        s("universal_q", t.universal_q);
        s("linear_complexity_m", t.linear_complexity_m);
        s("linear_complexity_probabilities", t.linear_complexity_probabilities);
        s("serial_m", t.serial_m);
        s("approximate_entropy_m", t.approximate_entropy_m);
        s("enforce_length", t.enforce_length);
    }
    {
        Node s = root.child("stochmul");
        auto& b = c.stochmul;
        s("x1", b.x1);
        s("x2", b.x2);
        s("k", b.k);
        s("n", b.n);
        s("source", b.source);
        s("minus_one", b.minus_one);
        s("sweep", b.sweep);
    }
    {
        Node s = root.child("rc_transform");
        auto& t = c.rc_transform.task;
        s("target", t.target);
        s("n", t.n);
        s("period", t.period);
        s("lag", t.lag);
        s("tau", t.tau);
        s("lambda", t.lambda);
        walk_excitation(s.child("excitation"), t.excitation);
    }
    {
        Node s = root.child("rc_mg");
        auto& b = c.rc_mg;
        {
            Node m = s.child("mackey_glass");
            m("beta", b.mg.beta);
            m("gamma", b.mg.gamma);
            m("tau", b.mg.tau);
            m("n", b.mg.exponent);
            m("dt", b.mg.dt);
            m("history", b.mg.history);
            m("n_points", b.mg.n_points);
            m("stride", b.mg.stride);
            m("warmup", b.mg.warmup);
        }
        s("lag_min", b.lag_min);
        s("lag_max", b.lag_max);
        s("tau_min", b.tau_min);
        s("tau_max", b.tau_max);
        s("detail_lag", b.detail_lag);
        s("detail_tau", b.detail_tau);
        s("lambda", b.lambda);
        walk_excitation(s.child("excitation"), b.excitation);
    }
}

std::vector<double> grid(double lo, double hi, double step)
{
    std::vector<double> g;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) g.push_back(lo + static_cast<double>(i) * step);
    return g;
}

void check_grid(const std::string& path, double lo, double hi, double step)
{
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo <= hi)) throw ValidationError(path, "needs min <= max");
    if (!(step > 0.0)) throw ValidationError(path + "_step", "must be > 0");
    if ((hi - lo) / step > 1e6) throw ValidationError(path + "_step", "grid is too large");
}

}  // namespace

std::vector<double> SweepBlock::f_grid() const { return grid(f_min, f_max, f_step); }
std::vector<double> SweepBlock::a_grid() const { return grid(a_min, a_max, a_step); }

void RunConfig::validate() const
{
    oscillator.validate("oscillator");
    drive.validate("drive");
    if (!(simulate.duration_s > 0.0)) throw ValidationError("simulate.duration_s", "must be > 0");
    if (!(simulate.dt_s >= 0.0)) throw ValidationError("simulate.dt_s", "must be >= 0");
    if (!(simulate.noise_sigma >= 0.0)) throw ValidationError("simulate.noise_sigma", "must be >= 0");
    if (!(classify.sample_rate_hz >= 0.0)) throw ValidationError("classify.sample_rate_hz", "must be >= 0");
    if (!(classify.skip_s >= 0.0)) throw ValidationError("classify.skip_s", "must be >= 0");

    check_grid("sweep.f", sweep.f_min, sweep.f_max, sweep.f_step);
    check_grid("sweep.a", sweep.a_min, sweep.a_max, sweep.a_step);
    if (!(sweep.f_min > 0.0)) throw ValidationError("sweep.f_min", "must be > 0");
    if (!(sweep.a_min >= 0.0)) throw ValidationError("sweep.a_min", "must be >= 0");
    if (!(sweep.options.settle_s >= 0.0)) throw ValidationError("sweep.settle_s", "must be >= 0");
    if (sweep.options.record_periods < 2) throw ValidationError("sweep.record_periods", "must be >= 2");
    if (sweep.options.min_steps_per_period < 50) throw ValidationError("sweep.min_steps_per_period", "must be >= 50");
    sweep.options.classifier.validate("sweep.classifier");

    trng.source.drive.validate("trng.drive");
    if (!(trng.source.duration_s > trng.source.settle_s))
        throw ValidationError("trng.duration_s", "must exceed trng.settle_s");
    if (trng.source.runs < 1) throw ValidationError("trng.runs", "must be >= 1");
    if (trng.source.steps_per_period < 50) throw ValidationError("trng.steps_per_period", "must be >= 50");
    if (trng.whiten.block_size < 2 * trng.whiten.trim + 2) throw ValidationError("trng.block", "must exceed 2 trim + 1");
    if (trng.stride < 1) throw ValidationError("trng.stride", "must be >= 1");
    if (trng.bits < 1 || trng.bits > 16) throw ValidationError("trng.bits", "must lie in [1, 16]");

    nist.tests.validate();
    if (nist.reference_length < 1) throw ValidationError("nist.reference_length", "must be >= 1");

    const auto& s = stochmul;
    if (s.k < 1 || s.k > 16) throw ValidationError("stochmul.k", "must lie in [1, 16]");
    if (s.x1 >> s.k) throw ValidationError("stochmul.x1", "must lie in [0, 2^k - 1]");
    if (s.x2 >> s.k) throw ValidationError("stochmul.x2", "must lie in [0, 2^k - 1]");
    if (s.n < 1) throw ValidationError("stochmul.n", "must be >= 1");

    const auto& t = rc_transform.task;
    if (!(t.period >= 4.0)) throw ValidationError("rc_transform.period", "must be at least 4 samples");
    if (t.lag < 1) throw ValidationError("rc_transform.lag", "must be >= 1");
    if (t.tau < 0) throw ValidationError("rc_transform.tau", "must be >= 0");
    if (!(t.lambda > 0.0)) throw ValidationError("rc_transform.lambda", "must be > 0");
    if (!(t.excitation.field_scale_mT > 0.0)) throw ValidationError("rc_transform.excitation.field_scale", "must be > 0");

    const auto& m = rc_mg;
    m.mg.validate("rc_mg.mackey_glass");
    if (m.lag_min < 1 || m.lag_max < m.lag_min) throw ValidationError("rc_mg.lag_min", "needs 1 <= lag_min <= lag_max");
    if (m.tau_min < 0 || m.tau_max < m.tau_min) throw ValidationError("rc_mg.tau_min", "needs 0 <= tau_min <= tau_max");
    if (m.detail_lag < 1) throw ValidationError("rc_mg.detail_lag", "must be >= 1");
    if (m.detail_tau < 0) throw ValidationError("rc_mg.detail_tau", "must be >= 0");
    if (!(m.lambda > 0.0)) throw ValidationError("rc_mg.lambda", "must be > 0");
    if (!(m.excitation.field_scale_mT > 0.0)) throw ValidationError("rc_mg.excitation.field_scale", "must be > 0");
}

std::string config_to_json(const RunConfig& c)
{
    json j = json::object();
    RunConfig copy = c;
    {
        Node root(j, "", false);
        walk(root, copy);
    }
    return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text, RunConfig base)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError("config", std::string("malformed JSON: ") + e.what());
    }
    {
        Node root(j, "", true);
        walk(root, base);
    }
    return base;
}

}  // namespace softdyn
