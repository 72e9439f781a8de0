#include "softdyn/error.hpp"
#include "softdyn/regime.hpp"
#include "softdyn/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

using namespace softdyn;

namespace {

constexpr double pi = std::numbers::pi;
const double golden = (std::sqrt(5.0) - 1.0) / 2.0;

Trajectory synth(double fs, double seconds, const std::function<double(double)>& x,
                 const std::function<double(double)>& y, double drive_hz)
{
    Trajectory t;
    t.sample_rate_hz = fs;
    const auto n = static_cast<std::size_t>(seconds * fs);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / fs;
        t.t.push_back(s);
        t.x.push_back(x(s));
        t.y.push_back(y(s));
        const double ph = std::fmod(2 * pi * drive_hz * s, 2 * pi);
        t.phase.push_back(ph);
    }
    return t;
}

std::vector<double> sine(std::size_t n, double fs, double f, double amp = 1.0)
{
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = amp * std::sin(2 * pi * f * static_cast<double>(i) / fs);
    return v;
}

PoincareMap cloud(std::size_t n, double side, std::uint64_t seed)
{
    std::mt19937_64 g(seed);
    PoincareMap m;
    for (std::size_t i = 0; i < n; ++i) {
        m.x.push_back(side * uniform01(g));
        m.y.push_back(side * uniform01(g));
    }
    return m;
}

}  // namespace

TEST(Spectrum, BinSpacingAndLength)
{
    const Spectrum s = power_spectrum(sine(5000, 1000.0, 50.0), 1000.0);
    EXPECT_EQ(s.segment_length, 2000u);
    EXPECT_DOUBLE_EQ(s.resolution_hz, 0.5);
    EXPECT_EQ(s.freq_hz.size(), 1001u);
    for (double p : s.power) EXPECT_GE(p, 0.0);
}

TEST(Spectrum, TooShortRejected)
{
    EXPECT_THROW(power_spectrum(sine(1000, 1000.0, 50.0), 1000.0), RangeError);
}

TEST(Spectrum, ParsevalWithinOnePercent)
{
    std::mt19937_64 g(7);
    std::vector<double> x(8192);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.05 * i) + 0.3 * standard_normal(g);
    const Spectrum s = power_spectrum(x, 200.0);
    EXPECT_NEAR(s.total_power() / windowed_power(x), 1.0, 0.01);
}

TEST(Spectrum, PureToneDominantPeak)
{
    const double fs = 1000.0;
    const Spectrum s = power_spectrum(sine(10000, fs, 37.0), fs);
    const auto top = std::max_element(s.power.begin(), s.power.end()) - s.power.begin();
    EXPECT_NEAR(s.freq_hz[static_cast<std::size_t>(top)], 37.0, s.resolution_hz);
    EXPECT_GT(peak_fraction(s, 37.0), 0.9);
}

TEST(Spectrum, IncommensurateTonesGiveTwoPeaks)
{
    const double fs = 500.0, f = 10.0;
    std::vector<double> x = sine(20000, fs, f);
    const std::vector<double> b = sine(20000, fs, f * golden, 0.7);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += b[i];
    const Spectrum s = power_spectrum(x, fs);
    EXPECT_EQ(significant_peaks(s, 0.05), 2u);
    EXPECT_GT(peak_fraction(s, f) + peak_fraction(s, f * golden), 0.95);
}

TEST(Spectrum, WhiteNoiseIsFlat)
{
    std::mt19937_64 g(11);
    std::vector<double> x(65536);
    for (double& v : x) v = standard_normal(g);
    EXPECT_GT(spectral_flatness(power_spectrum(x, 1000.0)), 0.9);
}

TEST(Spectrum, CsvHeader)
{
    const std::string csv = spectrum_csv(power_spectrum(sine(2048, 100.0, 5.0), 100.0));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "f_hz,power");
}

TEST(Clusters, IdenticalPointsFormOne)
{
    PoincareMap m;
    m.x.assign(50, 0.25);
    m.y.assign(50, -1.0);
    const ClusterResult c = poincare_clusters(m, 1e-3, 3);
    EXPECT_EQ(c.count(), 1u);
    EXPECT_DOUBLE_EQ(c.clustered_fraction(), 1.0);
}

TEST(Clusters, TwoSeparatedBlobs)
{
    const double r = 0.01;
    std::mt19937_64 g(3);
    PoincareMap m;
    for (int i = 0; i < 60; ++i) {
        const double cx = i % 2 ? 100 * r : 0.0;
        m.x.push_back(cx + 0.1 * r * uniform01(g));
        m.y.push_back(0.1 * r * uniform01(g));
    }
    const ClusterResult c = poincare_clusters(m, r, 3);
    EXPECT_EQ(c.count(), 2u);
    EXPECT_EQ(c.sizes[0] + c.sizes[1], 60u);
}

TEST(Clusters, UniformScatterHasNoDominantCluster)
{
    const double r = 1.0;
    const ClusterResult c = poincare_clusters(cloud(400, 1000 * r, 5), r, 3);
    EXPECT_LT(c.largest_fraction(), 0.2);
}

TEST(Clusters, LinkageIsInclusiveAtRadius)
{
    PoincareMap m;
    m.x = {0.0, 1.0, 2.0};
    m.y = {0.0, 0.0, 0.0};
    EXPECT_EQ(poincare_clusters(m, 1.0, 1).count(), 1u);
    EXPECT_EQ(poincare_clusters(m, 0.999, 1).count(), 3u);
}

TEST(Clusters, GridMatchesPairwise)
{
    // the grid path (many points) and a brute-force single linkage must agree
    const PoincareMap m = cloud(600, 30.0, 9);
    const double r = 1.0;
    const ClusterResult c = poincare_clusters(m, r, 1);
    std::vector<int> parent(m.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j)
            if (std::hypot(m.x[i] - m.x[j], m.y[i] - m.y[j]) <= r) parent[find(int(i))] = find(int(j));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j)
            EXPECT_EQ(find(int(i)) == find(int(j)), c.labels[i] == c.labels[j]);
}

TEST(Classify, PureToneIsPeriodic)
{
    const double f = 6.0;
    const Trajectory t = synth(600.0, 40.0, [&](double s) { return std::sin(2 * pi * f * s + 0.3); },
                               [&](double s) { return 0.2 * std::sin(4 * pi * f * s); }, f);
    const RegimeLabel l = classify_trajectory(t, {1.0, f, 0.0});
    EXPECT_EQ(l.regime, Regime::Periodic);
    EXPECT_FALSE(l.ambiguous);
    EXPECT_GE(l.diagnostics.harmonic_fraction, 0.9);
    EXPECT_LE(l.diagnostics.cluster_count, 3u);
}

TEST(Classify, OffGridToneIsPeriodic)
{
    // 600 / 13 samples per period: every Poincare point is interpolated
    for (double f : {7.0, 13.0, 17.3}) {
        const Trajectory t = synth(600.0, 40.0, [&](double s) { return std::sin(2 * pi * f * s + 0.3); },
                                   [&](double s) { return 0.2 * std::sin(4 * pi * f * s); }, f);
        EXPECT_EQ(classify_trajectory(t, {1.0, f, 0.0}).regime, Regime::Periodic) << f;
    }
}

TEST(Classify, TwoIncommensurateTonesAreQuasiperiodic)
{
    const double f = 6.0, g = f * golden;
    const Trajectory t = synth(600.0, 60.0, [&](double s) { return std::sin(2 * pi * f * s) + 0.6 * std::sin(2 * pi * g * s); },
                               [&](double s) { return 0.6 * std::cos(2 * pi * g * s); }, f);
    const RegimeLabel l = classify_trajectory(t, {1.0, f, 0.0});
    EXPECT_EQ(l.regime, Regime::Quasiperiodic);
}

TEST(Classify, SimulatedLowDriveIsPeriodic)
{
    const SweepCell c = classify_cell(OscillatorConfig::calibrated(), 3.0, 1.0);
    ASSERT_TRUE(c.label) << c.error;
    EXPECT_EQ(c.label->regime, Regime::Periodic);
}

TEST(Classify, LyapunovPositiveCellIsChaotic)
{
    const auto cfg = OscillatorConfig::calibrated();
    ASSERT_GT(cell_lyapunov(cfg, 18.0, 8.5), 0.0);
    const SweepCell c = classify_cell(cfg, 18.0, 8.5);
    ASSERT_TRUE(c.label) << c.error;
    EXPECT_EQ(c.label->regime, Regime::Chaotic);
}

TEST(Classify, ScaleInvariant)
{
    const auto cfg = OscillatorConfig::calibrated();
    for (auto [f, a] : {std::pair{3.0, 1.0}, std::pair{18.0, 8.5}, std::pair{12.0, 7.0}}) {
        const DriveParams d{a, f, 0.0};
        SimulationOptions o;
        o.dt_s = 1.0 / (static_cast<double>(steps_per_period(f)) * f);
        o.duration_s = (std::ceil(40 * f) + 200) / f;
        const Trajectory t = tail(simulate(cfg, d, o), std::ceil(40 * f) / f);
        const RegimeLabel base = classify_trajectory(t, d);
        for (double c : {1e-3, 0.37, 25.0, 1e4}) {
            Trajectory s = t;
            for (double& v : s.x) v *= c;
            for (double& v : s.y) v *= c;
            const RegimeLabel l = classify_trajectory(s, d);
            EXPECT_EQ(l.regime, base.regime) << "f=" << f << " A=" << a << " c=" << c;
            EXPECT_EQ(l.ambiguous, base.ambiguous);
        }
    }
}

TEST(Classify, RuleImplicationsHold)
{
    // whatever the label, its diagnostics must satisfy the rule that produced it
    const auto cfg = OscillatorConfig::calibrated();
    const ClassifierConfig cc;
    for (double f : {2.0, 9.0, 15.0, 19.0})
        for (double a : {1.0, 5.0, 8.5}) {
            const SweepCell cell = classify_cell(cfg, f, a);
            ASSERT_TRUE(cell.label);
            const RegimeDiagnostics& d = cell.label->diagnostics;
            const bool periodic = d.harmonic_fraction >= cc.harmonic_threshold &&
                                  d.cluster_count <= cc.max_periodic_clusters &&
                                  d.clustered_fraction >= cc.periodic_clustered_fraction;
            const bool chaotic = d.flatness >= cc.flatness_threshold ||
                                 (d.largest_cluster_fraction < cc.chaotic_largest_fraction &&
                                  d.clustered_fraction < cc.periodic_clustered_fraction);
            const Regime r = cell.label->regime;
            EXPECT_TRUE(r != Regime::Periodic || (periodic && !chaotic));
            EXPECT_TRUE(r != Regime::Chaotic || (chaotic && !periodic));
            EXPECT_TRUE(!cell.label->ambiguous || (periodic && chaotic));
        }
}

TEST(Classify, ConfigValidation)
{
    ClassifierConfig c;
    c.harmonic_threshold = 1.5;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Sweep, CornerCellIsPeriodic)
{
    SweepOptions o;
    o.threads = 1;
    const auto cells = phase_diagram_sweep(OscillatorConfig::calibrated(), {1.0}, {0.5}, o);
    ASSERT_EQ(cells.size(), 1u);
    ASSERT_TRUE(cells[0].label);
    EXPECT_EQ(cells[0].label->regime, Regime::Periodic);
}

TEST(Sweep, ZeroAmplitudeAllPeriodic)
{
    SweepOptions o;
    o.threads = 2;
    const auto cells = phase_diagram_sweep(OscillatorConfig::calibrated(), {2.0, 11.0, 20.0}, {0.0}, o);
    for (const SweepCell& c : cells) {
        ASSERT_TRUE(c.label) << c.error;
        EXPECT_EQ(c.label->regime, Regime::Periodic);
    }
}

TEST(Sweep, DeterministicAcrossThreadCounts)
{
    const auto cfg = OscillatorConfig::calibrated();
    SweepOptions one, three;
    one.threads = 1;
    three.threads = 3;
    const std::vector<double> fg{4.0, 17.0, 19.0}, ag{2.0, 8.5};
    EXPECT_EQ(sweep_csv(phase_diagram_sweep(cfg, fg, ag, one)), sweep_csv(phase_diagram_sweep(cfg, fg, ag, three)));
}

TEST(Sweep, FailedCellRecordedWithoutAbort)
{
    SweepOptions o;
    o.threads = 1;
    const auto cells = phase_diagram_sweep(OscillatorConfig::calibrated(), {2.0}, {-1.0, 1.0}, o);
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_FALSE(cells[0].label);
    EXPECT_FALSE(cells[0].error.empty());
    EXPECT_TRUE(cells[1].label);
    const std::string csv = sweep_csv(cells);
    EXPECT_NE(csv.find("2,-1,error"), std::string::npos);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "f_hz,A_mT,label,cluster_count,clustered_fraction,flatness,harmonic_fraction");
}

TEST(Sweep, ThreadResolution)
{
    EXPECT_EQ(resolve_threads(5), 5u);
    ::setenv("SOFTDYN_THREADS", "3", 1);
    EXPECT_EQ(resolve_threads(0), 3u);
    ::unsetenv("SOFTDYN_THREADS");
    EXPECT_GE(resolve_threads(0), 1u);
}
