#pragma once

// JSON job description shared by the command-line entry points. A job file
// groups a pulse request with the actuator, compile, and detection settings
// that should apply to it; every field has a default so a minimal job only
// names the pulse. Unknown keys are rejected to catch typos early.

#include "sqzpulse/actuator.hpp"
#include "sqzpulse/compiler.hpp"
#include "sqzpulse/detection.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sqz {

struct SpectrumRequest {
    SpectrumModel model;
    double f_min_hz = 1.0e4;
    double f_max_hz = 2.0e7;
    size_t n_points = 200;
};

struct JobConfig {
    PulseSpec pulse;
    bool has_pulse = false; // a pulse section was given (required to compile)
    std::optional<ActuatorModel> actuator = ActuatorModel::from_bandwidth(1.0e4);
    CompileOptions compile;
    DetectionConfig detection;
    SpectrumRequest spectrum;
    std::string calibration_path; // empty: built-in synthetic calibration
};

JobConfig parse_job(const std::string& json_text, const std::string& origin);
JobConfig load_job(const std::string& path);

/// Effective settings as metadata lines, echoed into every output file.
std::vector<std::string> config_echo(const JobConfig& job);

} // namespace sqz
