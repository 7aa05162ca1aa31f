#include <doctest.h>

#include "sqzpulse/detection.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace sqz;

namespace {

Waveform constant_db(double db, size_t n, double dt = 1e-6) {
    Waveform w;
    w.dt = dt;
    w.unit = WaveformUnit::decibel;
    w.samples.assign(n, db);
    return w;
}

double rms_diff(const NoiseTrace& a, const NoiseTrace& b) {
    double ss = 0.0;
    for (size_t i = 0; i < a.level_db.size(); ++i) {
        const double d = a.level_db[i] - b.level_db[i];
        ss += d * d;
    }
    return std::sqrt(ss / double(a.level_db.size()));
}

} // namespace

TEST_CASE("detection config validation") {
    DetectionConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(!cfg.slow_video());

    DetectionConfig bad = cfg;
    bad.rbw_hz = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    // Monte-Carlo mode needs headroom above the analysis band.
    bad = cfg;
    bad.mode = DetectionMode::monte_carlo;
    bad.sample_rate_hz = 2e6; // < 2 * (1 MHz + 3 * 100 kHz)
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.sample_rate_hz = 1e7;
    CHECK_NOTHROW(bad.validate());

    CHECK(mode_from_name("quasi") == DetectionMode::quasi_static);
    CHECK(mode_from_name("mc") == DetectionMode::monte_carlo);
    CHECK_THROWS_AS((void)mode_from_name("analog"), ConfigError);
}

TEST_CASE("shot noise displays at the reference for any budget") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.3, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        DetectionConfig cfg;
        cfg.budget.optical_transmission = u(rng);
        cfg.budget.detector_qe = u(rng);
        cfg.apply_budget = true; // loss must not move shot noise
        const NoiseTrace tr = quasi_static_trace(constant_db(0.0, 400), cfg);
        for (double v : tr.level_db)
            CHECK(std::fabs(v) < 1e-9);
        CHECK(tr.reference_db == doctest::Approx(0.0));
    }
}

TEST_CASE("quasi-static chain is the identity on flat input") {
    DetectionConfig cfg;
    const NoiseTrace tr = quasi_static_trace(constant_db(-2.3, 300), cfg);
    for (double v : tr.level_db)
        CHECK(v == doctest::Approx(-2.3).epsilon(1e-12));
}

TEST_CASE("resolution-bandwidth response sets the step rise time") {
    DetectionConfig cfg;
    cfg.vbw_hz = 3e9; // video transparent for this measurement
    Waveform w = constant_db(-2.3, 4000, 2e-8);
    for (size_t i = 2000; i < w.size(); ++i) w.samples[i] = 0.0;
    const NoiseTrace tr = quasi_static_trace(w, cfg);

    // Work on linear power, where the classic 10-90% figure applies.
    std::vector<double> p(tr.level_db.size());
    for (size_t i = 0; i < p.size(); ++i) p[i] = std::pow(10.0, tr.level_db[i] / 10.0);
    const double lo = p.front();
    const double hi = p.back();
    double t10 = -1.0, t90 = -1.0;
    for (size_t i = 1; i < p.size(); ++i) {
        const double fp = (p[i - 1] - lo) / (hi - lo);
        const double f = (p[i] - lo) / (hi - lo);
        if (fp < 0.1 && f >= 0.1) t10 = w.dt * (double(i - 1) + (0.1 - fp) / (f - fp));
        if (fp < 0.9 && f >= 0.9) t90 = w.dt * (double(i - 1) + (0.9 - fp) / (f - fp));
    }
    CHECK((t90 - t10) * cfg.rbw_hz == doctest::Approx(0.34).epsilon(0.03));

    // The step arrival is preserved: halfway point at the step time.
    double t50 = 0.0;
    for (size_t i = 1; i < p.size(); ++i) {
        const double fp = (p[i - 1] - lo) / (hi - lo);
        const double f = (p[i] - lo) / (hi - lo);
        if (fp < 0.5 && f >= 0.5) t50 = w.dt * (double(i - 1) + (0.5 - fp) / (f - fp));
    }
    CHECK(t50 == doctest::Approx(2000.0 * w.dt).epsilon(0.002));
}

TEST_CASE("a 30 us feature broadens by the response width in quadrature") {
    DetectionConfig cfg; // rbw 100 kHz
    Waveform w = constant_db(-2.3, 1800, 1e-7);
    for (size_t i = 0; i < w.size(); ++i) {
        const double t = (double(i) - 900.0) * w.dt;
        w.samples[i] = -2.3 + 2.29 * std::exp(-4.0 * std::log(2.0) * t * t / (30e-6 * 30e-6));
    }
    const NoiseTrace tr = quasi_static_trace(w, cfg);
    const double peak = *std::max_element(tr.level_db.begin(), tr.level_db.end());
    const double half = 0.5 * (tr.level_db.front() + peak);
    double first = -1.0, last = -1.0;
    for (size_t i = 1; i < tr.level_db.size(); ++i) {
        const double a = tr.level_db[i - 1];
        const double b = tr.level_db[i];
        if ((a < half && b >= half) || (a >= half && b < half)) {
            const double t = w.dt * (double(i - 1) + (half - a) / (b - a));
            if (first < 0.0) first = t;
            last = t;
        }
    }
    const double fwhm = last - first;
    CHECK(fwhm > 30e-6);             // never narrower than the input
    CHECK(fwhm < 30.45e-6);          // about sqrt(30^2 + 3.1^2) us
    CHECK(fwhm == doctest::Approx(30.2e-6).epsilon(0.008));
    CHECK(peak < -0.01 - 1e-6);      // smoothing shaves the apex slightly
    CHECK(peak > -0.1);
}

TEST_CASE("video bandwidth at bench settings is transparent") {
    DetectionConfig fast; // vbw 3 MHz
    DetectionConfig none = fast;
    none.vbw_hz = 3e9;
    Waveform w = constant_db(-2.3, 3000, 1e-7);
    for (size_t i = 0; i < w.size(); ++i)
        w.samples[i] += 2.0 * std::exp(-std::pow((double(i) - 1500.0) * w.dt / 20e-6, 2.0));
    const NoiseTrace a = quasi_static_trace(w, fast);
    const NoiseTrace b = quasi_static_trace(w, none);
    double worst = 0.0;
    for (size_t i = 0; i < a.level_db.size(); ++i)
        worst = std::max(worst, std::fabs(a.level_db[i] - b.level_db[i]));
    CHECK(worst < 0.01);

    // A deliberately slow video filter is anything but transparent.
    DetectionConfig slow = fast;
    slow.vbw_hz = 1e4;
    CHECK(slow.slow_video());
    const NoiseTrace c = quasi_static_trace(w, slow);
    double moved = 0.0;
    for (size_t i = 0; i < a.level_db.size(); ++i)
        moved = std::max(moved, std::fabs(c.level_db[i] - b.level_db[i]));
    CHECK(moved > 0.1);
}

TEST_CASE("shot convention shifts the display, not the physics") {
    DetectionConfig raw;
    DetectionConfig corr = raw;
    corr.convention = ShotConvention::corrected;
    Waveform w = constant_db(-2.3, 200);
    const NoiseTrace a = quasi_static_trace(w, raw);
    const NoiseTrace b = quasi_static_trace(w, corr);
    CHECK(a.reference_db == doctest::Approx(0.0));
    CHECK(b.reference_db == doctest::Approx(-0.2));
    for (size_t i = 0; i < a.level_db.size(); ++i)
        CHECK(b.level_db[i] == doctest::Approx(a.level_db[i] - 0.2).epsilon(1e-12));
    // Levels relative to the displayed reference are identical.
    for (size_t i = 0; i < a.level_db.size(); ++i)
        CHECK(b.level_db[i] - b.reference_db ==
              doctest::Approx(a.level_db[i] - a.reference_db).epsilon(1e-12));
}

TEST_CASE("optional loss budget for source-referenced input") {
    DetectionConfig cfg;
    cfg.apply_budget = true;
    // A -2.847 dB source through 0.855 efficiency lands at -2.3 dB.
    const NoiseTrace tr = quasi_static_trace(constant_db(-2.8473610, 200), cfg);
    for (double v : tr.level_db)
        CHECK(v == doctest::Approx(-2.3).epsilon(1e-6));
}

TEST_CASE("monte carlo traces are seeded and reproducible") {
    DetectionConfig cfg;
    cfg.mode = DetectionMode::monte_carlo;
    cfg.n_averages = 10;
    const Waveform w = constant_db(-2.3, 120);
    const NoiseTrace a = monte_carlo_trace(w, cfg);
    const NoiseTrace b = monte_carlo_trace(w, cfg);
    REQUIRE(a.level_db.size() == b.level_db.size());
    for (size_t i = 0; i < a.level_db.size(); ++i)
        CHECK(a.level_db[i] == b.level_db[i]); // bit-identical

    cfg.seed = 99;
    const NoiseTrace c = monte_carlo_trace(w, cfg);
    double diff = 0.0;
    for (size_t i = 0; i < a.level_db.size(); ++i)
        diff = std::max(diff, std::fabs(a.level_db[i] - c.level_db[i]));
    CHECK(diff > 0.01);
    CHECK(c.seed == 99);
    CHECK(c.mode == DetectionMode::monte_carlo);
}

TEST_CASE("monte carlo fluctuations follow averaging statistics") {
    // A chi-squared power estimate averaged over N records has a decibel
    // spread of about 4.34 / sqrt(N).
    DetectionConfig cfg;
    cfg.mode = DetectionMode::monte_carlo;
    const Waveform w = constant_db(-2.3, 201);
    const NoiseTrace qs = quasi_static_trace(w, cfg);

    cfg.n_averages = 400;
    const double rms400 = rms_diff(monte_carlo_trace(w, cfg), qs);
    CHECK(rms400 > 0.15);
    CHECK(rms400 < 0.30);

    cfg.n_averages = 25;
    const double rms25 = rms_diff(monte_carlo_trace(w, cfg), qs);
    CHECK(rms25 > 0.6);
    CHECK(rms25 < 1.2);

    // Quadrupling sqrt(N) should quarter the spread, within sampling slack.
    CHECK(rms25 / rms400 > 2.6);
    CHECK(rms25 / rms400 < 6.0);
}

TEST_CASE("monte carlo mean tracks a shaped pulse") {
    DetectionConfig cfg;
    cfg.mode = DetectionMode::monte_carlo;
    cfg.n_averages = 600;
    cfg.sample_rate_hz = 1e7;
    Waveform w = constant_db(-2.3, 301);
    for (size_t i = 0; i < w.size(); ++i) {
        const double t = (double(i) - 150.0) * w.dt;
        w.samples[i] = -2.3 + 2.29 * std::exp(-4.0 * std::log(2.0) * t * t / (60e-6 * 60e-6));
    }
    const NoiseTrace qs = quasi_static_trace(w, cfg);
    const NoiseTrace mc = monte_carlo_trace(w, cfg);
    CHECK(rms_diff(mc, qs) < 0.35); // 4.34/sqrt(600) = 0.18 expected
    // The pulse shape itself spans 2.3 dB, so this is a real constraint.
    const double peak = *std::max_element(mc.level_db.begin(), mc.level_db.end());
    CHECK(peak > -0.6);
}

TEST_CASE("shot reference trace") {
    DetectionConfig cfg;
    NoiseTrace tr = shot_reference_trace(cfg, 100, 1e-6);
    CHECK(tr.time_s.size() == 100);
    for (double v : tr.level_db)
        CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

    cfg.convention = ShotConvention::corrected;
    tr = shot_reference_trace(cfg, 100, 1e-6);
    for (double v : tr.level_db)
        CHECK(v == doctest::Approx(-0.2).epsilon(1e-12));

    // Monte-Carlo reference fluctuates around the reference level.
    cfg.convention = ShotConvention::raw;
    cfg.mode = DetectionMode::monte_carlo;
    cfg.n_averages = 400;
    tr = shot_reference_trace(cfg, 200, 1e-6);
    double mean = 0.0;
    for (double v : tr.level_db) mean += v;
    mean /= double(tr.level_db.size());
    CHECK(std::fabs(mean) < 0.1);
    double spread = 0.0;
    for (double v : tr.level_db) spread += (v - mean) * (v - mean);
    CHECK(std::sqrt(spread / double(tr.level_db.size())) > 0.02);
}

TEST_CASE("record averaging is order-stable") {
    std::mt19937_64 rng(17);
    std::lognormal_distribution<double> ln(0.0, 1.5);
    std::vector<double> values(50000);
    for (double& v : values) v = ln(rng);
    const double a = pairwise_mean(values);
    std::shuffle(values.begin(), values.end(), rng);
    const double b = pairwise_mean(values);
    std::sort(values.begin(), values.end());
    const double c = pairwise_mean(values);
    CHECK(std::fabs(a - b) / a < 1e-12);
    CHECK(std::fabs(a - c) / a < 1e-12);
}

TEST_CASE("parametric squeezing spectrum") {
    const SpectrumModel model;
    const DetectionConfig cfg;

    SUBCASE("frozen band points") {
        const SqueezingSpectrum s = spectrum(model, cfg, 1e5, 1e6, 2);
        CHECK(s.squeezed_db[0] == doctest::Approx(-2.138887).epsilon(1e-5));
        CHECK(s.squeezed_db[1] == doctest::Approx(-2.230353).epsilon(1e-5));
        CHECK(s.antisqueezed_db[0] == doctest::Approx(7.708780).epsilon(1e-5));
    }

    SUBCASE("at least 2 dB of squeezing across the band") {
        const SqueezingSpectrum s = spectrum(model, cfg, 1e5, 1e6, 120);
        for (size_t i = 0; i < s.frequency_hz.size(); ++i) {
            CHECK(s.squeezed_db[i] <= -2.0);
            // Uncertainty product after loss stays physical.
            const double prod = std::pow(10.0, (s.squeezed_db[i] + s.antisqueezed_db[i]) / 10.0);
            CHECK(prod >= 1.0 - 1e-12);
        }
    }

    SUBCASE("pure profile without loss keeps the product at one") {
        SpectrumModel pure = model;
        pure.excess_db = 0.0;
        DetectionConfig lossless = cfg;
        lossless.budget.optical_transmission = 1.0;
        lossless.budget.detector_qe = 1.0;
        const SqueezingSpectrum s = spectrum(pure, lossless, 1e4, 2e7, 150);
        for (size_t i = 0; i < s.frequency_hz.size(); ++i)
            CHECK(s.squeezed_db[i] + s.antisqueezed_db[i] == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("single-point grid and grid validation") {
        const SqueezingSpectrum one = spectrum(model, cfg, 1e6, 1e6, 1);
        CHECK(one.frequency_hz.size() == 1);
        CHECK(one.squeezed_db[0] == doctest::Approx(-2.230353).epsilon(1e-5));
        CHECK_THROWS_AS((void)spectrum(model, cfg, 0.0, 1e6, 5), ConfigError);
        CHECK_THROWS_AS((void)spectrum(model, cfg, 1e6, 1e5, 5), ConfigError);
        CHECK_THROWS_AS((void)spectrum(model, cfg, 1e5, 1e6, 0), ConfigError);
    }

    SUBCASE("corner frequencies bound the squeezing band") {
        const SqueezingSpectrum s = spectrum(model, cfg, 1e3, 1e9, 200);
        CHECK(s.squeezed_db.front() > -0.1); // technical noise floor wins far below
        CHECK(s.squeezed_db.back() > -0.1);  // cavity rolloff wins far above
        const double deepest = *std::min_element(s.squeezed_db.begin(), s.squeezed_db.end());
        CHECK(deepest > -2.8);               // loss keeps the display above the source depth
        CHECK(deepest < -2.2);
    }
}
