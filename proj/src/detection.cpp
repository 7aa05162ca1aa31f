#include "sqzpulse/detection.hpp"

#include "sqzpulse/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

namespace sqz {

namespace {

constexpr double kPi = std::numbers::pi;

// Time constant of the Gaussian power-smoothing kernel implied by the RBW:
// a Gaussian low-pass with its -3 dB cutoff at the RBW has amplitude
// response exp(-ln2/2 * (f/rbw)^2), i.e. sigma_t = sqrt(ln2) / (2 pi rbw).
double rbw_kernel_sigma(double rbw_hz) {
    return std::sqrt(std::numbers::ln2_v<double>) / (2.0 * kPi * rbw_hz);
}

std::vector<double> gaussian_kernel(double sigma_s, double dt) {
    const long half = std::max(1L, std::lround(std::ceil(5.0 * sigma_s / dt)));
    std::vector<double> k(size_t(2 * half + 1));
    double sum = 0.0;
    for (long j = -half; j <= half; ++j) {
        const double t = double(j) * dt;
        const double v = std::exp(-0.5 * t * t / (sigma_s * sigma_s));
        k[size_t(j + half)] = v;
        sum += v;
    }
    for (double& v : k)
        v /= sum; // exact unit DC gain on the sample grid
    return k;
}

// Same-length convolution with edge-value extension, so constant inputs
// stay exactly constant.
std::vector<double> convolve_hold(const std::vector<double>& x, const std::vector<double>& k) {
    const long n = long(x.size());
    const long half = (long(k.size()) - 1) / 2;
    std::vector<double> y(x.size(), 0.0);
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long j = -half; j <= half; ++j) {
            const long idx = std::clamp(i + j, 0L, n - 1);
            acc += k[size_t(j + half)] * x[size_t(idx)];
        }
        y[size_t(i)] = acc;
    }
    return y;
}

// Single-pole video low-pass, initialized settled at the first sample.
void video_filter(std::vector<double>& p, double vbw_hz, double dt) {
    const double alpha = 1.0 - std::exp(-2.0 * kPi * vbw_hz * dt);
    double y = p.front();
    for (double& v : p) {
        y += alpha * (v - y);
        v = y;
    }
}

std::vector<double> to_linear_power(const Waveform& noise_db, const DetectionConfig& cfg) {
    std::vector<double> v(noise_db.size());
    const double eta = cfg.budget.total_efficiency();
    for (size_t i = 0; i < v.size(); ++i) {
        v[i] = std::pow(10.0, noise_db.samples[i] / 10.0);
        if (cfg.apply_budget)
            v[i] = eta * v[i] + (1.0 - eta);
    }
    return v;
}

double display_shift_db(const DetectionConfig& cfg) {
    return cfg.convention == ShotConvention::corrected ? cfg.budget.shot_cal_offset_db : 0.0;
}

NoiseTrace finish_trace(std::vector<double> power, const Waveform& input,
                        const DetectionConfig& cfg, DetectionMode mode, uint64_t seed) {
    NoiseTrace trace;
    trace.mode = mode;
    trace.seed = seed;
    trace.reference_db = shot_reference(cfg.budget, cfg.convention).db;
    const double shift = display_shift_db(cfg);
    trace.time_s.resize(power.size());
    trace.level_db.resize(power.size());
    for (size_t i = 0; i < power.size(); ++i) {
        trace.time_s[i] = input.time(i);
        trace.level_db[i] = 10.0 * std::log10(power[i]) - shift;
    }
    return trace;
}

// splitmix64 step; used to derive independent, reproducible per-record seeds.
uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + stream * 0x9E3779B97F4A7C15ull + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Fixed-shape pairwise (binary-counter) accumulator: the reduction tree
// depends only on the record count, never on evaluation order, so averages
// are reproducible to the last bit.
class PairwiseAccumulator {
public:
    explicit PairwiseAccumulator(size_t n) : n_(n) {}

    void add(std::vector<double> v) {
        levels_.push_back(std::move(v));
        fills_.push_back(1);
        while (fills_.size() > 1 && fills_[fills_.size() - 1] == fills_[fills_.size() - 2]) {
            auto& dst = levels_[levels_.size() - 2];
            const auto& src = levels_.back();
            for (size_t i = 0; i < n_; ++i)
                dst[i] += src[i];
            fills_[fills_.size() - 2] *= 2;
            levels_.pop_back();
            fills_.pop_back();
        }
        ++count_;
    }

    std::vector<double> mean() const {
        std::vector<double> total(n_, 0.0);
        for (auto it = levels_.rbegin(); it != levels_.rend(); ++it)
            for (size_t i = 0; i < n_; ++i)
                total[i] += (*it)[i];
        for (double& v : total)
            v /= double(count_);
        return total;
    }

private:
    size_t n_;
    size_t count_ = 0;
    std::vector<std::vector<double>> levels_;
    std::vector<size_t> fills_;
};

} // namespace

double pairwise_mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    PairwiseAccumulator acc(1);
    for (double v : values) acc.add({v});
    return acc.mean().front();
}

const char* mode_name(DetectionMode m) {
    return m == DetectionMode::quasi_static ? "quasi_static" : "monte_carlo";
}

DetectionMode mode_from_name(const std::string& name) {
    if (name == "quasi_static" || name == "quasi")
        return DetectionMode::quasi_static;
    if (name == "monte_carlo" || name == "mc")
        return DetectionMode::monte_carlo;
    throw ConfigError("unknown detection mode '" + name + "'");
}

void DetectionConfig::validate() const {
    if (!(center_frequency_hz > 0.0) || !(rbw_hz > 0.0) || !(vbw_hz > 0.0))
        throw ConfigError("DetectionConfig: bandwidths and center frequency must be positive");
    if (n_averages < 1)
        throw ConfigError("DetectionConfig: n_averages must be >= 1");
    budget.validate();
    if (mode == DetectionMode::monte_carlo) {
        const double needed = 2.0 * (center_frequency_hz + 3.0 * rbw_hz);
        if (!(sample_rate_hz > needed)) {
            std::ostringstream msg;
            msg << "DetectionConfig: sample_rate " << sample_rate_hz
                << " Hz violates the sideband Nyquist bound (need > " << needed << " Hz)";
            throw ConfigError(msg.str());
        }
    }
}

NoiseTrace quasi_static_trace(const Waveform& noise_db, const DetectionConfig& cfg) {
    noise_db.validate();
    cfg.validate();
    std::vector<double> p = to_linear_power(noise_db, cfg);
    p = convolve_hold(p, gaussian_kernel(rbw_kernel_sigma(cfg.rbw_hz), noise_db.dt));
    video_filter(p, cfg.vbw_hz, noise_db.dt);
    return finish_trace(std::move(p), noise_db, cfg, DetectionMode::quasi_static, cfg.seed);
}

NoiseTrace monte_carlo_trace(const Waveform& noise_db, const DetectionConfig& cfg) {
    noise_db.validate();
    if (cfg.mode != DetectionMode::monte_carlo)
        throw ConfigError("monte_carlo_trace: cfg.mode must be monte_carlo");
    cfg.validate();

    const size_t n_out = noise_db.size();
    const double dt_out = noise_db.dt;
    const double dts = 1.0 / cfg.sample_rate_hz;

    // The complex-envelope filter is the Gaussian whose squared magnitude in
    // time equals the quasi-static power kernel, so the Monte-Carlo mean
    // reproduces the quasi-static trace exactly.
    const double sigma_g = rbw_kernel_sigma(cfg.rbw_hz);
    const double sigma_h = std::sqrt(2.0) * sigma_g;

    const size_t pad = size_t(std::ceil(8.0 * sigma_h / dts)) + 16;
    const size_t n_fine = size_t(std::ceil(noise_db.duration() / dts)) + 1;
    const size_t len = fft::next_pow2(n_fine + 2 * pad);

    // Per-sample variance on the synthesis grid (linear interpolation of the
    // smoothed quantity it represents, edge-held into the padding).
    const std::vector<double> v_coarse = to_linear_power(noise_db, cfg);
    std::vector<double> v_fine(len);
    for (size_t i = 0; i < len; ++i) {
        const double t = (double(i) - double(pad)) * dts;
        const double x = t / dt_out;
        if (x <= 0.0) {
            v_fine[i] = v_coarse.front();
        } else if (x >= double(n_out - 1)) {
            v_fine[i] = v_coarse.back();
        } else {
            const size_t j = size_t(x);
            const double f = x - double(j);
            v_fine[i] = v_coarse[j] * (1.0 - f) + v_coarse[j + 1] * f;
        }
    }

    // Analytic band-pass mask around the center frequency; positive
    // frequencies only, doubled to form the complex envelope.
    std::vector<double> mask(len, 0.0);
    double mask_power = 0.0;
    for (size_t k = 0; k < len; ++k) {
        const double f = (k <= len / 2 ? double(k) : double(k) - double(len)) / (dts * double(len));
        if (f > 0.0) {
            const double df = f - cfg.center_frequency_hz;
            mask[k] = 2.0 * std::exp(-2.0 * kPi * kPi * sigma_h * sigma_h * df * df);
            mask_power += mask[k] * mask[k];
        }
    }
    const double norm = double(len) / mask_power; // E|z|^2 = v for white input

    PairwiseAccumulator acc(n_out);
    std::vector<std::complex<double>> work(len);
    std::vector<double> p_fine(len), record(n_out);
    for (int r = 0; r < cfg.n_averages; ++r) {
        std::mt19937_64 rng(mix_seed(cfg.seed, uint64_t(r)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (size_t i = 0; i < len; ++i)
            work[i] = std::complex<double>(std::sqrt(v_fine[i]) * gauss(rng), 0.0);
        fft::transform(work, false);
        for (size_t k = 0; k < len; ++k)
            work[k] *= mask[k];
        fft::transform(work, true);
        for (size_t i = 0; i < len; ++i)
            p_fine[i] = std::norm(work[i]) * norm;
        video_filter(p_fine, cfg.vbw_hz, dts);
        for (size_t i = 0; i < n_out; ++i) {
            const size_t idx = pad + size_t(std::llround(double(i) * dt_out / dts));
            record[i] = p_fine[std::min(idx, len - 1)];
        }
        acc.add(record);
    }
    return finish_trace(acc.mean(), noise_db, cfg, DetectionMode::monte_carlo, cfg.seed);
}

NoiseTrace shot_reference_trace(const DetectionConfig& cfg, size_t n, double dt) {
    const Waveform shot = make_constant(0.0, n, dt, WaveformUnit::decibel);
    if (cfg.mode == DetectionMode::monte_carlo) {
        DetectionConfig ref_cfg = cfg;
        ref_cfg.seed = mix_seed(cfg.seed, 0x5407u); // decorrelate from the signal trace
        return monte_carlo_trace(shot, ref_cfg);
    }
    return quasi_static_trace(shot, cfg);
}

void SpectrumModel::validate() const {
    if (!(depth_db >= 0.0) || !(excess_db >= 0.0))
        throw ConfigError("SpectrumModel: depth and excess must be >= 0 dB");
    if (!(corner_lo_hz > 0.0) || !(corner_hi_hz > corner_lo_hz))
        throw ConfigError("SpectrumModel: need 0 < corner_lo < corner_hi");
    if (lo_order < 1 || hi_order < 1)
        throw ConfigError("SpectrumModel: rolloff orders must be >= 1");
}

SqueezingSpectrum spectrum(const SpectrumModel& model, const DetectionConfig& cfg,
                           double f_min_hz, double f_max_hz, int n_points) {
    model.validate();
    cfg.validate();
    if (!(f_min_hz > 0.0) || !(f_max_hz >= f_min_hz) || n_points < 1 ||
        (n_points > 1 && !(f_max_hz > f_min_hz)))
        throw ConfigError("spectrum: need 0 < f_min <= f_max and at least 1 point");

    SqueezingSpectrum s;
    const double eta = cfg.budget.total_efficiency();
    const double shift = display_shift_db(cfg);
    const double lr = std::log(f_max_hz / f_min_hz);
    for (int i = 0; i < n_points; ++i) {
        const double f =
            n_points == 1 ? f_min_hz : f_min_hz * std::exp(lr * double(i) / double(n_points - 1));
        // Band profile: 1 deep inside the squeezing band, 0 at both extremes.
        const double lo = 1.0 / (1.0 + std::pow(model.corner_lo_hz / f, model.lo_order));
        const double hi = 1.0 / (1.0 + std::pow(f / model.corner_hi_hz, model.hi_order));
        const double band = lo * hi;
        const double v_sq = std::pow(10.0, -model.depth_db * band / 10.0);
        const double v_as = std::pow(10.0, (model.depth_db + model.excess_db) * band / 10.0);
        const double d_sq = eta * v_sq + (1.0 - eta);
        const double d_as = eta * v_as + (1.0 - eta);
        s.frequency_hz.push_back(f);
        s.squeezed_db.push_back(10.0 * std::log10(d_sq) - shift);
        s.antisqueezed_db.push_back(10.0 * std::log10(d_as) - shift);
    }
    return s;
}

} // namespace sqz
