// Command-line front end: calibrate, compile, simulate, spectrum, roundtrip,
// synth. Exit status 0 clean, 1 finished with warnings, 2 error.

#include "sqzpulse/errors.hpp"
#include "sqzpulse/workbench.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"squeezed-noise pulse shaping workbench"};
    app.require_subcommand(1);

    sqz::RunOptions options;
    std::string mode_text;

    auto add_common = [&](CLI::App* cmd, bool with_input) {
        cmd->add_option("--config", options.config_path, "job file (JSON)");
        cmd->add_option("--out", options.out_dir, "output directory")->capture_default_str();
        cmd->add_option("--seed", options.seed, "override detection seed");
        cmd->add_option("--mode", mode_text, "detection mode: quasi or mc");
        cmd->add_flag("--plot-data", options.plot_data, "also write the combined plot bundle");
        if (with_input) cmd->add_option("--input", options.input_path, "input artifact path");
    };

    using Runner = std::function<int(const sqz::RunOptions&, std::ostream&)>;
    std::vector<std::pair<CLI::App*, Runner>> commands;

    auto* calibrate = app.add_subcommand("calibrate", "fit the noise-versus-field transfer curve");
    add_common(calibrate, true);
    commands.emplace_back(calibrate, sqz::cmd_calibrate);

    auto* compile = app.add_subcommand("compile", "turn a pulse description into a drive waveform");
    add_common(compile, false);
    commands.emplace_back(compile, sqz::cmd_compile);

    auto* simulate = app.add_subcommand("simulate", "run the detection chain over a compiled pulse");
    add_common(simulate, true);
    commands.emplace_back(simulate, sqz::cmd_simulate);

    auto* spectrum = app.add_subcommand("spectrum", "write the parametric squeezing spectrum");
    add_common(spectrum, false);
    commands.emplace_back(spectrum, sqz::cmd_spectrum);

    auto* roundtrip = app.add_subcommand("roundtrip", "compile + simulate + error report");
    add_common(roundtrip, false);
    commands.emplace_back(roundtrip, sqz::cmd_roundtrip);

    auto* synth = app.add_subcommand("synth", "write the synthetic calibration sweep");
    add_common(synth, false);
    commands.emplace_back(synth, sqz::cmd_synth);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!mode_text.empty()) options.mode = sqz::mode_from_name(mode_text);
        for (const auto& [cmd, runner] : commands)
            if (cmd->parsed()) return runner(options, std::cout);
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
