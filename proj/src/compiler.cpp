#include "sqzpulse/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sqz {

namespace {

// Pulse support: the region where the shape departs from baseline. Gaussians
// nominally extend forever; three FWHM out the residue is 0.2% of the
// excursion, which is below every tolerance used here.
double pulse_extent(const PulseSpec& spec) {
    return spec.shape == PulseShape::gaussian ? 3.0 * spec.duration_s : spec.duration_s;
}

double shape01(const PulseSpec& spec, double t, double t_center) {
    const double u = t - t_center;
    switch (spec.shape) {
    case PulseShape::gaussian: {
        const double x = u / spec.duration_s;
        return std::exp(-4.0 * std::numbers::ln2_v<double> * x * x);
    }
    case PulseShape::triangular: {
        const double half = 0.5 * spec.duration_s;
        return std::max(0.0, 1.0 - std::fabs(u) / half);
    }
    case PulseShape::square:
        return std::fabs(u) <= 0.5 * spec.duration_s ? 1.0 : 0.0;
    }
    return 0.0;
}

} // namespace

void PulseSpec::validate() const {
    if (!(dt_s > 0.0))
        throw std::invalid_argument("PulseSpec: dt must be positive");
    if (!(duration_s >= 10.0 * dt_s))
        throw std::invalid_argument("PulseSpec: duration must be at least 10 samples");
    if (!std::isfinite(baseline_db) || !std::isfinite(peak_db))
        throw std::invalid_argument("PulseSpec: levels must be finite");
    if (polarity == Polarity::positive && baseline_db > peak_db)
        throw std::invalid_argument(
            "PulseSpec: a positive pulse rises from deep squeezing, needs baseline <= peak");
    if (polarity == Polarity::negative && baseline_db < peak_db)
        throw std::invalid_argument(
            "PulseSpec: a negative pulse dips from the shot level, needs baseline >= peak");
    if (repetition_period_s && !(*repetition_period_s > 0.0))
        throw std::invalid_argument("PulseSpec: repetition period must be positive");
}

const char* shape_name(PulseShape s) {
    switch (s) {
    case PulseShape::gaussian: return "gaussian";
    case PulseShape::triangular: return "triangular";
    case PulseShape::square: return "square";
    }
    return "?";
}

PulseShape shape_from_name(const std::string& name) {
    if (name == "gaussian") return PulseShape::gaussian;
    if (name == "triangular") return PulseShape::triangular;
    if (name == "square") return PulseShape::square;
    throw std::invalid_argument("unknown pulse shape '" + name + "'");
}

const char* polarity_name(Polarity p) {
    return p == Polarity::positive ? "positive" : "negative";
}

Polarity polarity_from_name(const std::string& name) {
    if (name == "positive") return Polarity::positive;
    if (name == "negative") return Polarity::negative;
    throw std::invalid_argument("unknown polarity '" + name + "'");
}

Waveform render_target(const PulseSpec& spec, const RenderOptions& options) {
    spec.validate();
    const double extent = pulse_extent(spec);

    double lead_in = options.lead_in_s.value_or(0.5 * extent);
    double lead_out = options.lead_out_s.value_or(0.5 * extent);
    double window = lead_in + extent + lead_out;
    if (spec.repetition_period_s) {
        window = *spec.repetition_period_s;
        if (window < extent + 2.0 * spec.dt_s)
            throw ConfigError("render_target: repetition period shorter than the pulse");
        lead_in = 0.5 * (window - extent);
    }

    const size_t n = size_t(std::llround(window / spec.dt_s)) + 1;
    const double t_center = lead_in + 0.5 * extent;
    Waveform w;
    w.dt = spec.dt_s;
    w.unit = WaveformUnit::decibel;
    w.samples.resize(n);
    const double amp = spec.peak_db - spec.baseline_db;
    for (size_t i = 0; i < n; ++i)
        w.samples[i] = spec.baseline_db + amp * shape01(spec, w.time(i), t_center);
    return w;
}

CompiledDrive compile(const PulseSpec& spec, const TransferFunction& tf,
                      const ActuatorModel* actuator, const CompileOptions& options) {
    spec.validate();
    if (options.periods < 1)
        throw std::invalid_argument("compile: periods must be >= 1");
    if (options.periods > 1 && !spec.repetition_period_s)
        throw ConfigError("compile: tiling requires a repetition period");

    CompiledDrive out;
    auto& diag = out.diagnostics;

    // Window padding: half an extent by default, plus the actuator settling
    // time so transients (and the acausal part of a compensated drive) fit.
    const double extent = pulse_extent(spec);
    const double settle = actuator ? actuator->settle_time_s() : 0.0;
    RenderOptions render;
    render.lead_in_s = options.lead_in_s.value_or(0.5 * extent + settle);
    render.lead_out_s = options.lead_out_s.value_or(0.5 * extent + settle);
    if (spec.repetition_period_s && actuator &&
        *spec.repetition_period_s < extent + 2.0 * settle)
        diag.warnings.push_back("repetition period leaves less than the settling time "
                                "between pulses; tiled periods will interact");

    out.target_noise = render_target(spec, render);

    if (spec.shape == PulseShape::square) {
        const double rise = options.rise_time_s.value_or(0.1 * spec.duration_s);
        SmoothResult sm = smooth_edges(out.target_noise, rise);
        out.target_noise = std::move(sm.waveform);
        diag.smoothing_degraded = sm.degraded;
        if (sm.degraded)
            diag.warnings.push_back("edge rise time does not fit between the square edges");
    }

    // Clamp the target into the reachable noise interval. Small excursions
    // (numerical saturation of the calibrated curve) are expected near the
    // shot level; anything beyond the tolerance is a genuine spec error.
    const double lo = tf.n_min_db();
    const double hi = tf.n_sat_db(options.branch);
    Waveform clamped = out.target_noise;
    for (double& s : clamped.samples) {
        const double excess = std::max(lo - s, s - hi);
        if (excess > 0.0) {
            if (excess > options.clamp_tolerance_db) {
                std::ostringstream msg;
                msg << "compile: target " << s << " dB exceeds the reachable interval [" << lo
                    << ", " << hi << "] dB by " << excess << " dB (tolerance "
                    << options.clamp_tolerance_db << " dB)";
                throw UnreachableTargetError(msg.str(), lo, hi);
            }
            ++diag.clamp_count;
            diag.max_clamp_excess_db = std::max(diag.max_clamp_excess_db, excess);
            s = std::clamp(s, lo, hi);
        }
    }
    if (diag.clamp_count > 0) {
        std::ostringstream msg;
        msg << diag.clamp_count << " target samples clamped into reach (worst "
            << diag.max_clamp_excess_db << " dB)";
        diag.warnings.push_back(msg.str());
    }

    // Quasi-static inversion, one bisection per sample.
    out.drive_field.dt = spec.dt_s;
    out.drive_field.unit = WaveformUnit::milligauss;
    out.drive_field.samples.resize(clamped.size());
    for (size_t i = 0; i < clamped.size(); ++i)
        out.drive_field.samples[i] =
            tf.field_for_noise(clamped.samples[i], options.branch);

    // Solver self-check against the clamped target.
    double inv_ss = 0.0;
    for (size_t i = 0; i < clamped.size(); ++i) {
        const double r = tf.noise_at_field(out.drive_field.samples[i]) - clamped.samples[i];
        inv_ss += r * r;
    }
    diag.inversion_rms_db = std::sqrt(inv_ss / double(clamped.size()));

    if (actuator) {
        if (options.compensate) {
            PrecompensateOptions popt;
            popt.lambda = options.lambda;
            PrecompensationResult pre = precompensate(*actuator, out.drive_field, popt);
            diag.precomp_residual_rel = pre.residual_rel;
            if (pre.projected)
                diag.warnings.push_back("drive limits clipped the compensated drive");
            out.drive_field = std::move(pre.drive);
        } else {
            // Static-gain correction only: command the wanted field scaled by
            // the DC calibration, dynamics uncorrected.
            for (double& s : out.drive_field.samples)
                s /= actuator->dc_gain;
        }
        out.predicted_field = simulate_response(*actuator, out.drive_field);
    } else {
        out.predicted_field = out.drive_field;
    }

    out.predicted_noise.dt = spec.dt_s;
    out.predicted_noise.unit = WaveformUnit::decibel;
    out.predicted_noise.samples.resize(out.predicted_field.size());
    for (size_t i = 0; i < out.predicted_field.size(); ++i) {
        bool clipped = false;
        out.predicted_noise.samples[i] =
            tf.noise_at_field(out.predicted_field.samples[i], Quadrature::squeezed, &clipped);
        if (clipped)
            ++diag.field_clamp_count;
    }
    if (diag.field_clamp_count > 0)
        diag.warnings.push_back("predicted field leaves the calibrated range; "
                                "noise prediction clamped there");

    // Ring-down check: after the pulse support ends the noise should sit on
    // the (clamped) baseline; a persistent deviation means the driver is
    // still oscillating.
    if (actuator) {
        const double support_end = *render.lead_in_s + extent +
                                   (spec.shape == PulseShape::square
                                        ? options.rise_time_s.value_or(0.1 * spec.duration_s)
                                        : 0.0);
        const double baseline = clamped.samples.front();
        const size_t start = std::min(out.predicted_noise.size(),
                                      size_t(std::ceil(support_end / spec.dt_s)) + 1);
        double worst = 0.0;
        for (size_t i = start; i < out.predicted_noise.size(); ++i)
            worst = std::max(worst, std::fabs(out.predicted_noise.samples[i] - baseline));
        diag.ring_down_db = worst;
        if (worst > 0.05) {
            diag.ring_down = true;
            diag.warnings.push_back("post-pulse ring-down above 0.05 dB");
        }
    }

    if (options.periods > 1) {
        const auto tile = [&](Waveform& w) {
            const std::vector<double> one = w.samples;
            w.samples.clear();
            w.samples.reserve(one.size() * size_t(options.periods));
            for (int p = 0; p < options.periods; ++p)
                w.samples.insert(w.samples.end(), one.begin(), one.end());
        };
        tile(out.target_noise);
        tile(out.drive_field);
        tile(out.predicted_field);
        tile(out.predicted_noise);
    }
    return out;
}

RoundTripError roundtrip_error(const CompiledDrive& compiled) {
    const auto& a = compiled.predicted_noise.samples;
    const auto& b = compiled.target_noise.samples;
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("roundtrip_error: mismatched compiled waveforms");
    RoundTripError e;
    double ss = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double r = a[i] - b[i];
        ss += r * r;
        e.max_db = std::max(e.max_db, std::fabs(r));
    }
    e.rms_db = std::sqrt(ss / double(a.size()));
    return e;
}

} // namespace sqz
