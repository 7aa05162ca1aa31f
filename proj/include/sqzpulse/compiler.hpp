#pragma once

// Turns a declarative noise-pulse description into the drive waveform that
// produces it: renders the dB-domain target, inverts it through the fitted
// transfer curve, and (optionally) pushes it through the actuator model
// with pre-compensation.

#include "sqzpulse/actuator.hpp"
#include "sqzpulse/calibration.hpp"
#include "sqzpulse/waveform.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sqz {

enum class PulseShape { gaussian, triangular, square };

/// Direction of the noise excursion. A positive pulse starts at the deepest
/// squeezing (field off) and rises to the shot level; a negative pulse
/// starts at the shot level (field saturated) and dips to deepest squeezing.
enum class Polarity { positive, negative };

struct PulseSpec {
    PulseShape shape = PulseShape::gaussian;
    Polarity polarity = Polarity::positive;
    double duration_s = 0.0;    // Gaussian: FWHM equals duration
    double baseline_db = 0.0;   // level away from the pulse
    double peak_db = 0.0;       // level at the pulse apex
    double dt_s = 1e-6;
    std::optional<double> repetition_period_s; // total window per period

    /// duration >= 10 dt, level ordering consistent with polarity.
    void validate() const;
};

const char* shape_name(PulseShape s);
PulseShape shape_from_name(const std::string& name);
const char* polarity_name(Polarity p);
Polarity polarity_from_name(const std::string& name);

struct RenderOptions {
    // Flat padding around the pulse; defaults to half the pulse extent.
    std::optional<double> lead_in_s;
    std::optional<double> lead_out_s;
};

/// Samples the requested noise shape in dB: baseline outside the pulse,
/// peak at the apex, Gaussian width measured as FWHM of the dB excursion.
/// With repetition_period set, the window is exactly one period with the
/// pulse centered.
Waveform render_target(const PulseSpec& spec, const RenderOptions& options = {});

struct CompileOptions {
    Branch branch = Branch::positive; // field sign used for the drive
    bool compensate = true;           // pre-compensate when an actuator is given
    double lambda = 0.0;              // regularization for pre-compensation
    double clamp_tolerance_db = 0.05; // silent-clamp allowance beyond reach
    std::optional<double> rise_time_s;   // square-edge smoothing, default 10% of duration
    std::optional<double> lead_in_s;
    std::optional<double> lead_out_s;
    int periods = 1;                  // tiling count when repetition_period is set
};

struct CompileDiagnostics {
    int clamp_count = 0;              // target samples clamped into reach
    double max_clamp_excess_db = 0.0; // worst clamped overshoot beyond reach
    int field_clamp_count = 0;        // predicted fields beyond the calibrated range
    double inversion_rms_db = 0.0;    // solver error before any actuator effects
    double precomp_residual_rel = 0.0;
    bool smoothing_degraded = false;
    bool ring_down = false;           // post-pulse noise deviation above threshold
    double ring_down_db = 0.0;
    std::vector<std::string> warnings;
};

/// All four waveforms share dt and length.
struct CompiledDrive {
    Waveform target_noise;    // dB, after square-edge smoothing
    Waveform drive_field;     // mG, the command sent to the driver
    Waveform predicted_field; // mG, field after the actuator model (or = drive)
    Waveform predicted_noise; // dB, transfer curve applied to predicted_field
    CompileDiagnostics diagnostics;
};

/// Compiles a pulse against a fitted transfer curve. Pass actuator =
/// nullptr for an ideal driver. Targets beyond the reachable noise interval
/// by more than clamp_tolerance_db raise UnreachableTargetError; smaller
/// excursions are clamped and counted.
CompiledDrive compile(const PulseSpec& spec, const TransferFunction& tf,
                      const ActuatorModel* actuator, const CompileOptions& options = {});

struct RoundTripError {
    double rms_db = 0.0;
    double max_db = 0.0;
};

/// Predicted-versus-target noise error over the full compiled window.
RoundTripError roundtrip_error(const CompiledDrive& compiled);

} // namespace sqz
