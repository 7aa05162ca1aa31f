#include "sqzpulse/waveform.hpp"

#include <cmath>
#include <stdexcept>

namespace sqz {

const char* unit_name(WaveformUnit u) {
    return u == WaveformUnit::milligauss ? "mG" : "dB";
}

WaveformUnit unit_from_name(const std::string& name) {
    if (name == "mG")
        return WaveformUnit::milligauss;
    if (name == "dB")
        return WaveformUnit::decibel;
    throw std::invalid_argument("unknown waveform unit '" + name + "'");
}

void Waveform::validate() const {
    if (!(dt > 0.0))
        throw std::invalid_argument("Waveform: dt must be positive");
    if (samples.size() < 2)
        throw std::invalid_argument("Waveform: need at least 2 samples");
    for (double s : samples)
        if (!std::isfinite(s))
            throw std::invalid_argument("Waveform: non-finite sample");
}

Waveform make_constant(double value, size_t n, double dt, WaveformUnit unit) {
    Waveform w;
    w.samples.assign(n, value);
    w.dt = dt;
    w.unit = unit;
    return w;
}

} // namespace sqz
