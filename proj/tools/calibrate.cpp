// Scans forcing and coupling scale factors around the calibrated constants and
// reports, for each candidate, the regime counts on a coarse sweep grid. Used to
// pick OscillatorConfig::calibrated(); rerun after changing the model.

#include "softdyn/io.hpp"
#include "softdyn/regime.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

using namespace softdyn;

int main(int argc, char** argv)
{
    CLI::App app{"calibration scan"};
    std::vector<double> forcing{0.8, 0.9, 1.0, 1.1, 1.2};
    std::vector<double> coupling{0.5, 1.0, 2.0};
    double f_step = 2.0, a_step = 1.0;
    unsigned threads = 0;
    std::string out;
    app.add_option("--forcing", forcing, "Scale factors applied to mu1, mu2 and eta");
    app.add_option("--coupling", coupling, "Scale factors applied to chi");
    app.add_option("--f-step", f_step);
    app.add_option("--a-step", a_step);
    app.add_option("--threads", threads);
    app.add_option("--out", out, "CSV path (default stdout)");
    CLI11_PARSE(app, argc, argv);

    std::vector<double> fg, ag;
    for (double f = 1.0; f <= 20.0 + 1e-9; f += f_step) fg.push_back(f);
    for (double a = 0.5; a <= 9.0 + 1e-9; a += a_step) ag.push_back(a);
    SweepOptions so;
    so.threads = threads;

    CsvBuilder csv("forcing,coupling,periodic,quasiperiodic,chaotic,errors,corner_periodic");
    const OscillatorConfig base = OscillatorConfig::calibrated();
    for (double fs : forcing)
        for (double cs : coupling) {
            OscillatorConfig c = base;
            c.mu1 *= fs;
            c.mu2 *= fs;
            c.eta *= fs;
            c.chi *= cs;
            const auto cells = phase_diagram_sweep(c, fg, ag, so);
            std::size_t n[4] = {0, 0, 0, 0};
            bool corner = true;
            for (const SweepCell& cell : cells) {
                if (!cell.label) {
                    ++n[3];
                    continue;
                }
                ++n[static_cast<int>(cell.label->regime)];
                // the low-f, low-A quarter must be Periodic
                if (cell.frequency_hz <= 5.0 && cell.amplitude_mT <= 2.5 && cell.label->regime != Regime::Periodic)
                    corner = false;
            }
            csv.row({format_number(fs), format_number(cs), std::to_string(n[0]), std::to_string(n[1]),
                     std::to_string(n[2]), std::to_string(n[3]), corner ? "1" : "0"});
            std::cerr << fmt::format("forcing {} coupling {}: P {} Q {} C {}\n", fs, cs, n[0], n[1], n[2]);
        }
    if (out.empty())
        std::cout << csv.str();
    else
        write_atomic(out, csv.str());
    return 0;
}
