#pragma once

// Second-order model of the field driver (coil plus current source):
// H(s) = K * w0^2 / (s^2 + 2*zeta*w0*s + w0^2), exact zero-order-hold
// discretization, step metrics, frequency-domain pre-compensation, and
// raised-cosine edge smoothing.

#include "sqzpulse/errors.hpp"
#include "sqzpulse/waveform.hpp"

#include <optional>

namespace sqz {

struct ActuatorModel {
    double natural_frequency_hz = 0.0; // w0 / 2pi, > 0
    double damping_ratio = 0.3;        // zeta, > 0
    double dc_gain = 1.0;              // commanded-to-settled field ratio, > 0
    std::optional<double> slew_limit_mg_per_s;  // drive slope bound
    std::optional<double> amplitude_limit_mg;   // drive magnitude bound

    /// Builds the model from its -3 dB bandwidth instead of w0. The mapping
    /// is w_3dB = w0 * sqrt((1 - 2 zeta^2) + sqrt((1 - 2 zeta^2)^2 + 1));
    /// for the default zeta = 0.3 a 10 kHz bandwidth gives f0 = 6879 Hz.
    static ActuatorModel from_bandwidth(double f3db_hz, double zeta = 0.3,
                                        double dc_gain = 1.0);

    double bandwidth_hz() const;         // -3 dB point of |H|
    double damped_frequency_hz() const;  // f0 * sqrt(1 - zeta^2), zeta < 1
    /// Time for step transients to decay to about e^-6 of their size.
    double settle_time_s() const;
    void validate() const;
};

/// Fractional first-peak overshoot of the unit step response:
/// exp(-zeta*pi/sqrt(1-zeta^2)) for zeta < 1, zero otherwise.
double step_overshoot(const ActuatorModel& model);

/// Field response to a commanded drive, sampled on the drive grid. The
/// state starts settled at the first drive sample, so waveforms that begin
/// on their baseline carry no artificial turn-on transient. Uses the exact
/// zero-order-hold discretization; requires dt <= 1/(20 f0), else throws
/// DiscretizationError.
Waveform simulate_response(const ActuatorModel& model, const Waveform& drive);

struct PrecompensateOptions {
    double lambda = 0.0;           // Tikhonov weight on drive power
    double feasibility_tol = 0.05; // residual bound once limits clip the drive
};

struct PrecompensationResult {
    Waveform drive;        // command that reproduces the target through the model
    double residual_rel;   // RMS(sim(drive) - target) / target span
    bool projected;        // true when slew/amplitude limits modified the drive
};

/// Frequency-domain regularized inversion: the returned drive minimizes
/// |sim(drive) - target|^2 + lambda |drive - baseline|^2 per frequency bin.
/// Slew and amplitude limits (when set on the model) are enforced by
/// projection afterwards; if the projected drive misses the target by more
/// than feasibility_tol (relative RMS), throws CompensationError.
PrecompensationResult precompensate(const ActuatorModel& model, const Waveform& target,
                                    const PrecompensateOptions& options = {});

struct SmoothResult {
    Waveform waveform;
    int edges_smoothed = 0;
    bool degraded = false; // rise time did not fit between neighboring edges
};

/// Replaces each step discontinuity with a raised-cosine ramp of duration
/// rise_time centered on the edge; plateau samples outside the ramp windows
/// are untouched, and already-smooth waveforms pass through unchanged.
/// Requires rise_time >= 2 * dt.
SmoothResult smooth_edges(const Waveform& w, double rise_time_s);

} // namespace sqz
