#pragma once

// Subcommand implementations behind the command-line tool. Each command
// loads a job file, computes everything up front, then writes its artifacts
// in one pass so a rerun with the same inputs is byte-identical.
//
// Exit codes: 0 clean, 1 finished with warnings (clamped samples, ring-down,
// degraded smoothing), 2 error (reported by throwing; the tool maps any
// sqz::Error to status 2).

#include "sqzpulse/config.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace sqz {

struct RunOptions {
    std::string config_path; // empty: built-in defaults
    std::string out_dir = ".";
    std::string input_path;  // calibrate: sweep table; simulate: compiled pulse
    std::optional<uint64_t> seed;        // overrides detection.seed
    std::optional<DetectionMode> mode;   // overrides detection.mode
    bool plot_data = false;  // also emit the combined per-figure bundle
};

/// Fits the transfer curve from a sweep table (the bundled synthetic sweep
/// when no input is given) and writes transfer_function.json plus a fit
/// report with residuals, branch ranges, and the inferred source level.
int cmd_calibrate(const RunOptions& options, std::ostream& log);

/// Compiles the configured pulse and writes compiled_pulse.csv with full
/// diagnostics in the metadata header.
int cmd_compile(const RunOptions& options, std::ostream& log);

/// Runs the detection chain over a compiled pulse (from --input, or compiled
/// in memory) and writes detected_trace.csv and shot_reference.csv.
int cmd_simulate(const RunOptions& options, std::ostream& log);

/// Writes the parametric squeezing spectrum as spectrum.csv.
int cmd_spectrum(const RunOptions& options, std::ostream& log);

/// compile + simulate + error report in one step; writes the compile and
/// simulate artifacts plus roundtrip_report.txt.
int cmd_roundtrip(const RunOptions& options, std::ostream& log);

/// Writes the synthetic calibration sweep (calibration_synthetic.csv) used
/// by the examples and tests.
int cmd_synth(const RunOptions& options, std::ostream& log);

} // namespace sqz
