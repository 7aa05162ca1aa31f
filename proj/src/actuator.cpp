#include "sqzpulse/actuator.hpp"

#include "sqzpulse/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace sqz {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

double bandwidth_factor(double zeta) {
    const double a = 1.0 - 2.0 * zeta * zeta;
    return std::sqrt(a + std::sqrt(a * a + 1.0));
}

// Discrete state update x+ = Ad x + Bd u, y = x[0], from the exact matrix
// exponential of the companion form A = [[0, 1], [-w0^2, -2 zeta w0]].
struct Discrete2 {
    double a11, a12, a21, a22;
    double b1, b2;
};

Discrete2 discretize(const ActuatorModel& m, double dt) {
    const double w0 = 2.0 * kPi * m.natural_frequency_hz;
    const double z = m.damping_ratio;
    const double a21c = -w0 * w0;
    const double a22c = -2.0 * z * w0;

    const cd disc = std::sqrt(cd(z * z - 1.0, 0.0));
    const cd s1 = w0 * (-z + disc);
    const cd s2 = w0 * (-z - disc);

    // exp(A dt) via spectral decomposition; the repeated-root branch keeps
    // the critically damped case well conditioned.
    cd e11, e12, e21, e22;
    if (std::abs(s1 - s2) > 1e-9 * w0) {
        const cd f1 = std::exp(s1 * dt) / (s1 - s2);
        const cd f2 = std::exp(s2 * dt) / (s1 - s2);
        e11 = f1 * (0.0 - s2) - f2 * (0.0 - s1);
        e12 = f1 - f2;
        e21 = (f1 - f2) * a21c;
        e22 = f1 * (a22c - s2) - f2 * (a22c - s1);
    } else {
        const cd s = 0.5 * (s1 + s2);
        const cd e = std::exp(s * dt);
        e11 = e * (1.0 + (0.0 - s) * dt);
        e12 = e * dt;
        e21 = e * a21c * dt;
        e22 = e * (1.0 + (a22c - s) * dt);
    }

    Discrete2 d;
    d.a11 = e11.real();
    d.a12 = e12.real();
    d.a21 = e21.real();
    d.a22 = e22.real();

    // Bd = A^-1 (Ad - I) B with B = [0, K w0^2]^T and
    // A^-1 = [[-2 zeta / w0, -1 / w0^2], [1, 0]].
    const double bc = m.dc_gain * w0 * w0;
    const double p1 = (d.a12) * bc;        // (Ad - I) B, first row
    const double p2 = (d.a22 - 1.0) * bc;  // second row
    d.b1 = (-2.0 * z / w0) * p1 + (-1.0 / (w0 * w0)) * p2;
    d.b2 = p1;
    return d;
}

// Frequency response of the discretized system at angular sample phase
// theta = 2 pi f dt: H = C (zI - Ad)^-1 Bd, C = [1, 0].
cd discrete_response(const Discrete2& d, double theta) {
    const cd z = std::polar(1.0, theta);
    const cd m11 = z - d.a11, m12 = -d.a12;
    const cd m21 = -d.a21, m22 = z - d.a22;
    const cd det = m11 * m22 - m12 * m21;
    // First row of (zI - Ad)^-1 * Bd.
    return (m22 * d.b1 - m12 * d.b2) / det;
}

double span_of(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

} // namespace

void ActuatorModel::validate() const {
    if (!(natural_frequency_hz > 0.0))
        throw std::invalid_argument("ActuatorModel: natural_frequency_hz must be positive");
    if (!(damping_ratio > 0.0))
        throw std::invalid_argument("ActuatorModel: damping_ratio must be positive");
    if (!(dc_gain > 0.0))
        throw std::invalid_argument("ActuatorModel: dc_gain must be positive");
    if (slew_limit_mg_per_s && !(*slew_limit_mg_per_s > 0.0))
        throw std::invalid_argument("ActuatorModel: slew limit must be positive");
    if (amplitude_limit_mg && !(*amplitude_limit_mg > 0.0))
        throw std::invalid_argument("ActuatorModel: amplitude limit must be positive");
}

ActuatorModel ActuatorModel::from_bandwidth(double f3db_hz, double zeta, double dc_gain) {
    if (!(f3db_hz > 0.0))
        throw std::invalid_argument("ActuatorModel: bandwidth must be positive");
    ActuatorModel m;
    m.damping_ratio = zeta;
    m.dc_gain = dc_gain;
    m.natural_frequency_hz = f3db_hz / bandwidth_factor(zeta);
    m.validate();
    return m;
}

double ActuatorModel::bandwidth_hz() const {
    return natural_frequency_hz * bandwidth_factor(damping_ratio);
}

double ActuatorModel::damped_frequency_hz() const {
    if (damping_ratio >= 1.0)
        throw std::domain_error("damped_frequency_hz: model is not underdamped");
    return natural_frequency_hz * std::sqrt(1.0 - damping_ratio * damping_ratio);
}

double ActuatorModel::settle_time_s() const {
    return 6.0 / (damping_ratio * 2.0 * kPi * natural_frequency_hz);
}

double step_overshoot(const ActuatorModel& model) {
    model.validate();
    const double z = model.damping_ratio;
    if (z >= 1.0)
        return 0.0;
    return std::exp(-z * kPi / std::sqrt(1.0 - z * z));
}

Waveform simulate_response(const ActuatorModel& model, const Waveform& drive) {
    model.validate();
    drive.validate();
    const double dt_max = 1.0 / (20.0 * model.natural_frequency_hz);
    if (drive.dt > dt_max) {
        std::ostringstream msg;
        msg << "simulate_response: dt " << drive.dt << " s too coarse for f0 "
            << model.natural_frequency_hz << " Hz (need dt <= " << dt_max << " s)";
        throw DiscretizationError(msg.str());
    }

    const Discrete2 d = discretize(model, drive.dt);
    Waveform out;
    out.dt = drive.dt;
    out.unit = drive.unit;
    out.samples.resize(drive.size());

    // Settled initial condition at the first commanded level.
    double x1 = model.dc_gain * drive.samples.front();
    double x2 = 0.0;
    for (size_t i = 0; i < drive.size(); ++i) {
        out.samples[i] = x1;
        const double u = drive.samples[i];
        const double n1 = d.a11 * x1 + d.a12 * x2 + d.b1 * u;
        const double n2 = d.a21 * x1 + d.a22 * x2 + d.b2 * u;
        x1 = n1;
        x2 = n2;
    }
    return out;
}

PrecompensationResult precompensate(const ActuatorModel& model, const Waveform& target,
                                    const PrecompensateOptions& options) {
    model.validate();
    target.validate();
    if (options.lambda < 0.0)
        throw std::invalid_argument("precompensate: lambda must be >= 0");

    const size_t n = target.size();
    const double base = target.samples.front();
    const size_t settle = size_t(std::ceil(model.settle_time_s() / target.dt)) + 1;
    const size_t len = fft::next_pow2(n + 2 * settle + 64);
    const size_t offset = settle; // room for acausal pre-shaping of the drive

    std::vector<cd> spec(len, cd(0.0, 0.0));
    for (size_t i = 0; i < n; ++i)
        spec[offset + i] = target.samples[i] - base;
    fft::transform(spec, false);

    const Discrete2 d = discretize(model, target.dt);
    for (size_t k = 0; k < len; ++k) {
        const double theta = 2.0 * kPi * double(k) / double(len);
        const cd h = discrete_response(d, theta);
        spec[k] *= std::conj(h) / (std::norm(h) + options.lambda);
    }
    fft::transform(spec, true);

    PrecompensationResult result;
    result.drive.dt = target.dt;
    result.drive.unit = target.unit;
    result.drive.samples.resize(n);
    // With lambda > 0 the baseline bin is attenuated like every other one,
    // so the drive relaxes toward zero as lambda grows; the baseline is
    // restored through the same regularized DC gain for consistency.
    const cd h0 = discrete_response(d, 0.0);
    const double dc = (std::conj(h0) / (std::norm(h0) + options.lambda)).real();
    for (size_t i = 0; i < n; ++i)
        result.drive.samples[i] = base * dc + spec[offset + i].real();

    // Feasibility projection under the configured drive limits.
    result.projected = false;
    if (model.amplitude_limit_mg) {
        const double a = *model.amplitude_limit_mg;
        for (double& s : result.drive.samples) {
            const double c = std::clamp(s, -a, a);
            if (c != s)
                result.projected = true;
            s = c;
        }
    }
    if (model.slew_limit_mg_per_s) {
        const double step = *model.slew_limit_mg_per_s * target.dt;
        auto& s = result.drive.samples;
        for (size_t i = 1; i < n; ++i) {
            const double c = std::clamp(s[i], s[i - 1] - step, s[i - 1] + step);
            if (c != s[i])
                result.projected = true;
            s[i] = c;
        }
        for (size_t i = n - 1; i-- > 0;) {
            const double c = std::clamp(s[i], s[i + 1] - step, s[i + 1] + step);
            if (c != s[i])
                result.projected = true;
            s[i] = c;
        }
    }

    const Waveform achieved = simulate_response(model, result.drive);
    double ss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = achieved.samples[i] - target.samples[i];
        ss += r * r;
    }
    const double span = span_of(target.samples);
    const double denom = span > 0.0 ? span : std::max(std::fabs(base), 1.0);
    result.residual_rel = std::sqrt(ss / double(n)) / denom;

    if (result.projected && result.residual_rel > options.feasibility_tol) {
        std::ostringstream msg;
        msg << "precompensate: drive limits leave a relative residual of "
            << result.residual_rel << " (bound " << options.feasibility_tol << ")";
        throw CompensationError(msg.str(), result.residual_rel);
    }
    return result;
}

SmoothResult smooth_edges(const Waveform& w, double rise_time_s) {
    w.validate();
    if (rise_time_s < 2.0 * w.dt)
        throw std::invalid_argument("smooth_edges: rise_time must be at least 2 samples");

    SmoothResult result;
    result.waveform = w;
    const size_t n = w.size();
    const auto [lo, hi] = std::minmax_element(w.samples.begin(), w.samples.end());
    const double span = *hi - *lo;
    if (span <= 0.0)
        return result;

    // A step is a sample-to-sample jump that is large on the waveform scale
    // and much larger than the slopes next to it. Smooth ramps (including
    // ones this function produced) never trigger this.
    std::vector<size_t> edges;
    const auto jump = [&](size_t i) { return w.samples[i + 1] - w.samples[i]; };
    for (size_t i = 0; i + 1 < n; ++i) {
        const double d = std::fabs(jump(i));
        if (d < 0.05 * span)
            continue;
        const double prev = i > 0 ? std::fabs(jump(i - 1)) : 0.0;
        const double next = i + 2 < n ? std::fabs(jump(i + 1)) : 0.0;
        if (d > 3.0 * std::max({prev, next, 1e-12 * span}))
            edges.push_back(i);
    }
    if (edges.empty())
        return result;

    const size_t ramp = std::max<size_t>(2, size_t(std::llround(rise_time_s / w.dt)));
    for (size_t e = 0; e < edges.size(); ++e) {
        const size_t i = edges[e];
        if (e + 1 < edges.size() && double(edges[e + 1] - i) * w.dt < rise_time_s)
            result.degraded = true;
        const double vl = w.samples[i];
        const double vr = w.samples[i + 1];
        // Ramp window centered on the edge, clamped to the waveform.
        const long start = long(i) + 1 - long(ramp / 2);
        for (size_t k = 0; k < ramp; ++k) {
            const long idx = start + long(k);
            if (idx < 0 || idx >= long(n))
                continue;
            const double phase = double(k + 1) / double(ramp + 1);
            result.waveform.samples[size_t(idx)] =
                vl + (vr - vl) * 0.5 * (1.0 - std::cos(kPi * phase));
        }
        ++result.edges_smoothed;
    }
    return result;
}

} // namespace sqz
