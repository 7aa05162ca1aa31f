#pragma once

// Quadrature-noise bookkeeping. All variances are linear and normalized to
// the shot-noise level (shot = 1); decibel values appear only at interfaces.

#include "sqzpulse/errors.hpp"

namespace sqz {

/// Linear quadrature variance relative to shot noise. Must be positive.
struct Variance {
    double value = 1.0;
};

/// Noise level in dB relative to the shot-noise reference.
struct NoiseLevel {
    double db = 0.0;
};

/// A pair of orthogonal quadrature variances, v_min <= v_max, obeying the
/// minimum-uncertainty bound v_min * v_max >= 1.
struct QuadraturePair {
    QuadraturePair(Variance v_min, Variance v_max);
    Variance v_min;
    Variance v_max;
};

/// Which shot-noise reference displayed levels are quoted against.
/// `raw` matches how bench data is usually normalized: against the measured
/// reference, which sits slightly below the true vacuum level because the
/// calibration polarizer absorbs part of the local oscillator. `corrected`
/// re-expresses levels against the true vacuum level.
enum class ShotConvention { raw, corrected };

/// Losses between the source and the recorded trace, plus the shot
/// calibration offset of the reference measurement.
struct LossBudget {
    double optical_transmission = 0.90; // passive path transmission, (0, 1]
    double detector_qe = 0.95;          // photodiode quantum efficiency, (0, 1]
    double shot_cal_offset_db = 0.2;    // reference depression, >= 0 dB

    double total_efficiency() const { return optical_transmission * detector_qe; }
    void validate() const; // throws std::domain_error on out-of-range fields
};

NoiseLevel variance_to_db(Variance v);            // v.value > 0
Variance db_to_variance(NoiseLevel level);        // level.db finite

/// Beam-splitter loss channel: eta * v + (1 - eta). Contracts toward shot.
Variance apply_loss(Variance v, double efficiency);

/// Exact inverse of apply_loss through the full budget efficiency.
/// Throws InfeasibleDetectionError when detected <= 1 - eta (vacuum floor).
Variance infer_source_variance(Variance detected, const LossBudget& budget);

/// Variance seen at homodyne angle theta: v_min cos^2 + v_max sin^2.
Variance rotate_quadrature(const QuadraturePair& pair, double theta_rad);

/// Displayed level of the measured shot reference under the convention:
/// 0 dB raw, -shot_cal_offset_db corrected.
NoiseLevel shot_reference(const LossBudget& budget, ShotConvention convention);

} // namespace sqz
