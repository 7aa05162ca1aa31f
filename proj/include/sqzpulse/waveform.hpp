#pragma once

#include <string>
#include <vector>

namespace sqz {

/// Physical unit of a sampled waveform.
enum class WaveformUnit { milligauss, decibel };

const char* unit_name(WaveformUnit u);
WaveformUnit unit_from_name(const std::string& name);

/// Uniformly sampled real waveform starting at t = 0.
struct Waveform {
    std::vector<double> samples;
    double dt = 0.0; // seconds per sample, > 0
    WaveformUnit unit = WaveformUnit::milligauss;

    size_t size() const { return samples.size(); }
    double duration() const { return dt * double(samples.size() - 1); }
    double time(size_t i) const { return dt * double(i); }

    /// dt > 0, at least 2 samples, all finite; throws std::invalid_argument.
    void validate() const;
};

Waveform make_constant(double value, size_t n, double dt, WaveformUnit unit);

} // namespace sqz
