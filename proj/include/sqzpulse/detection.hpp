#pragma once

// Zero-span spectrum-analyzer emulation for noise-level waveforms: a fast
// quasi-static expectation path and a seeded Monte-Carlo path with real
// photocurrent statistics, plus a parametric squeezing spectrum.

#include "sqzpulse/errors.hpp"
#include "sqzpulse/noise.hpp"
#include "sqzpulse/waveform.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sqz {

enum class DetectionMode { quasi_static, monte_carlo };

const char* mode_name(DetectionMode m);
DetectionMode mode_from_name(const std::string& name);

struct DetectionConfig {
    double center_frequency_hz = 1e6; // analysis sideband
    double rbw_hz = 1e5;              // resolution bandwidth
    double vbw_hz = 3e6;              // video bandwidth (single pole)
    double sample_rate_hz = 2e7;      // Monte-Carlo synthesis rate
    int n_averages = 50;              // records averaged per Monte-Carlo trace
    uint64_t seed = 1;
    DetectionMode mode = DetectionMode::quasi_static;
    ShotConvention convention = ShotConvention::raw;
    LossBudget budget;
    // Input waveforms are normally already detector-referenced (they come
    // from the calibrated transfer curve), so the budget is not applied
    // again. Set this for source-referenced inputs.
    bool apply_budget = false;

    bool slow_video() const { return rbw_hz > vbw_hz; }
    /// Throws ConfigError on bad bandwidths or a Monte-Carlo sample rate
    /// below 2 * (center + 3 * rbw).
    void validate() const;
};

/// A displayed noise trace in dB against the chosen shot reference.
struct NoiseTrace {
    std::vector<double> time_s;
    std::vector<double> level_db;
    double reference_db = 0.0; // where the measured shot reference displays
    DetectionMode mode = DetectionMode::quasi_static;
    uint64_t seed = 0;
};

/// Expectation of the displayed trace: linear power smoothed by the RBW
/// response (Gaussian kernel whose -3 dB cutoff equals the RBW, giving the
/// classic 10-90% step rise of ~0.34 / RBW), then the video low-pass, then
/// dB against the reference.
NoiseTrace quasi_static_trace(const Waveform& noise_db, const DetectionConfig& cfg);

/// Statistically honest trace: per record, a Gaussian photocurrent whose
/// sideband power spectral density follows the input variance is band-passed
/// at the center frequency, square-law detected, and video filtered; records
/// are averaged pairwise (order-independent) in the power domain. The mean
/// over records converges to quasi_static_trace.
NoiseTrace monte_carlo_trace(const Waveform& noise_db, const DetectionConfig& cfg);

/// Trace of the shot-noise reference itself over the given grid: identically
/// 0 dB raw (up to Monte-Carlo statistics), -shot_cal_offset_db corrected.
NoiseTrace shot_reference_trace(const DetectionConfig& cfg, size_t n, double dt);

/// Mean by pairwise (binary-counter) summation, the reduction used for
/// record averaging: permuting well-conditioned inputs moves the result by
/// no more than ~1e-12 relative.
double pairwise_mean(std::span<const double> values);

/// Parametric source spectrum: a flat squeezing band bounded by a technical
/// low-frequency corner and a high-frequency decay. The pure profile
/// (excess_db = 0) keeps squeezed * antisqueezed = 1 at every frequency.
struct SpectrumModel {
    double depth_db = 2.8;     // source squeezing in the flat band
    double excess_db = 6.0;    // antisqueezing beyond the pure-state level
    double corner_lo_hz = 2.5e4;
    double corner_hi_hz = 8e6;
    int lo_order = 2;
    int hi_order = 2;
    void validate() const;
};

struct SqueezingSpectrum {
    std::vector<double> frequency_hz;
    std::vector<double> squeezed_db;
    std::vector<double> antisqueezed_db;
};

/// Detected spectrum on a log-spaced grid after the loss budget, displayed
/// under the configured shot convention.
SqueezingSpectrum spectrum(const SpectrumModel& model, const DetectionConfig& cfg,
                           double f_min_hz, double f_max_hz, int n_points);

} // namespace sqz
