#include <doctest.h>

#include "sqzpulse/compiler.hpp"

#include <algorithm>
#include <cmath>

using namespace sqz;

namespace {

TransferFunction fitted() { return fit_transfer(synth_calibration(SynthParams{})); }

PulseSpec spec_of(PulseShape shape, Polarity pol, double duration) {
    PulseSpec s;
    s.shape = shape;
    s.polarity = pol;
    s.duration_s = duration;
    if (pol == Polarity::positive) {
        s.baseline_db = -2.3;
        s.peak_db = -0.01;
    } else {
        s.baseline_db = -0.01;
        s.peak_db = -2.3;
    }
    return s;
}

double measured_fwhm(const Waveform& w, double baseline, double peak) {
    const double half = 0.5 * (baseline + peak);
    const bool up = peak > baseline;
    double first = -1.0, last = -1.0;
    for (size_t i = 1; i < w.size(); ++i) {
        const double a = w.samples[i - 1], b = w.samples[i];
        const bool crossed = up ? (a < half && b >= half) || (a >= half && b < half)
                                : (a > half && b <= half) || (a <= half && b > half);
        if (crossed) {
            const double frac = (half - a) / (b - a);
            const double t = w.dt * (double(i - 1) + frac);
            if (first < 0.0) first = t;
            last = t;
        }
    }
    return last - first;
}

} // namespace

TEST_CASE("pulse naming round trips") {
    for (PulseShape s : {PulseShape::gaussian, PulseShape::triangular, PulseShape::square})
        CHECK(shape_from_name(shape_name(s)) == s);
    for (Polarity p : {Polarity::positive, Polarity::negative})
        CHECK(polarity_from_name(polarity_name(p)) == p);
    CHECK_THROWS_AS((void)shape_from_name("circle"), std::invalid_argument);
    CHECK_THROWS_AS((void)polarity_from_name("sideways"), std::invalid_argument);
}

TEST_CASE("pulse spec validation") {
    PulseSpec s = spec_of(PulseShape::gaussian, Polarity::positive, 30e-6);
    CHECK_NOTHROW(s.validate());
    s.duration_s = 5e-6; // under 10 samples at 1 us
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = spec_of(PulseShape::gaussian, Polarity::positive, 30e-6);
    std::swap(s.baseline_db, s.peak_db); // positive pulse must rise
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = spec_of(PulseShape::gaussian, Polarity::negative, 30e-6);
    std::swap(s.baseline_db, s.peak_db); // negative pulse must dip
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = spec_of(PulseShape::square, Polarity::positive, 1e-3);
    s.dt_s = -1e-6;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("target rendering") {
    SUBCASE("gaussian width is the full width at half the excursion") {
        const PulseSpec s = spec_of(PulseShape::gaussian, Polarity::positive, 30e-6);
        const Waveform w = render_target(s);
        CHECK(w.samples.front() == doctest::Approx(-2.3).epsilon(1e-6));
        CHECK(*std::max_element(w.samples.begin(), w.samples.end()) ==
              doctest::Approx(-0.01).epsilon(1e-9));
        CHECK(measured_fwhm(w, -2.3, -0.01) == doctest::Approx(30e-6).epsilon(0.02));
        // Default padding: half the 3-FWHM extent on both sides.
        CHECK(w.duration() == doctest::Approx(2.0 * 3.0 * 30e-6).epsilon(0.02));
    }

    SUBCASE("triangle and square hit their levels") {
        const Waveform tri =
            render_target(spec_of(PulseShape::triangular, Polarity::negative, 200e-6));
        CHECK(*std::min_element(tri.samples.begin(), tri.samples.end()) ==
              doctest::Approx(-2.3).epsilon(1e-9));
        CHECK(tri.samples.front() == doctest::Approx(-0.01).epsilon(1e-12));
        CHECK(measured_fwhm(tri, -0.01, -2.3) == doctest::Approx(100e-6).epsilon(0.03));

        const Waveform sq = render_target(spec_of(PulseShape::square, Polarity::positive, 1e-3));
        int at_peak = 0;
        for (double v : sq.samples)
            if (v == doctest::Approx(-0.01).epsilon(1e-12)) ++at_peak;
        CHECK(at_peak == doctest::Approx(1000).epsilon(0.01));
    }

    SUBCASE("repetition period pins the window length") {
        PulseSpec s = spec_of(PulseShape::gaussian, Polarity::positive, 100e-6);
        s.repetition_period_s = 2e-3;
        const Waveform w = render_target(s);
        CHECK(w.duration() == doctest::Approx(2e-3).epsilon(1e-3));
        s.repetition_period_s = 100e-6; // shorter than the 3-FWHM extent
        CHECK_THROWS_AS((void)render_target(s), ConfigError);
    }

    SUBCASE("explicit leads override the default padding") {
        PulseSpec s = spec_of(PulseShape::square, Polarity::positive, 200e-6);
        RenderOptions r;
        r.lead_in_s = 50e-6;
        r.lead_out_s = 150e-6;
        const Waveform w = render_target(s, r);
        CHECK(w.duration() == doctest::Approx(400e-6).epsilon(1e-6));
    }
}

TEST_CASE("compilation against an ideal driver") {
    const TransferFunction tf = fitted();

    const PulseSpec specs[] = {
        spec_of(PulseShape::gaussian, Polarity::positive, 30e-6),
        spec_of(PulseShape::gaussian, Polarity::negative, 60e-6),
        spec_of(PulseShape::triangular, Polarity::negative, 200e-6),
        spec_of(PulseShape::square, Polarity::positive, 1e-3),
        spec_of(PulseShape::gaussian, Polarity::negative, 1e-3),
        spec_of(PulseShape::triangular, Polarity::positive, 1e-3),
    };
    for (const PulseSpec& s : specs) {
        const CompiledDrive c = compile(s, tf, nullptr);
        const RoundTripError err = roundtrip_error(c);
        CHECK(err.rms_db < 0.05);
        CHECK(c.diagnostics.clamp_count == 0);
        CHECK(c.diagnostics.inversion_rms_db < 1e-5);
        const double lowest =
            *std::min_element(c.predicted_noise.samples.begin(), c.predicted_noise.samples.end());
        CHECK(lowest >= tf.n_min_db() - 1e-9);
        // Ideal driver: the command is the field.
        for (size_t i = 0; i < c.drive_field.size(); ++i)
            CHECK(c.predicted_field.samples[i] == c.drive_field.samples[i]);
    }
}

TEST_CASE("unreachable targets fail loudly, small excursions clamp") {
    const TransferFunction tf = fitted();

    PulseSpec s = spec_of(PulseShape::gaussian, Polarity::positive, 50e-6);
    s.peak_db = 0.5; // far above the saturated branch level
    CHECK_THROWS_AS((void)compile(s, tf, nullptr), UnreachableTargetError);
    s.peak_db = -0.01;
    s.baseline_db = -3.0; // below the deepest calibrated squeezing
    CHECK_THROWS_AS((void)compile(s, tf, nullptr), UnreachableTargetError);

    // Shot-level peak misses the saturated level by ~0.0013 dB: clamped.
    s = spec_of(PulseShape::gaussian, Polarity::positive, 50e-6);
    s.peak_db = 0.0;
    const CompiledDrive c = compile(s, tf, nullptr);
    CHECK(c.diagnostics.clamp_count > 0);
    CHECK(c.diagnostics.max_clamp_excess_db > 0.0);
    CHECK(c.diagnostics.max_clamp_excess_db < 0.05);
    CHECK(!c.diagnostics.warnings.empty());
    const double highest =
        *std::max_element(c.predicted_noise.samples.begin(), c.predicted_noise.samples.end());
    CHECK(highest <= tf.n_sat_db(Branch::positive) + 1e-9);
}

TEST_CASE("polarity duality") {
    const TransferFunction tf = fitted();
    const PulseSpec pos = spec_of(PulseShape::triangular, Polarity::positive, 200e-6);
    const PulseSpec neg = spec_of(PulseShape::triangular, Polarity::negative, 200e-6);
    const Waveform wp = render_target(pos);
    const Waveform wn = render_target(neg);
    REQUIRE(wp.size() == wn.size());
    // Opposite polarities of the same shape mirror around the level midline.
    for (size_t i = 0; i < wp.size(); ++i)
        CHECK(wp.samples[i] + wn.samples[i] == doctest::Approx(-2.31).epsilon(1e-12));

    const CompiledDrive cp = compile(pos, tf, nullptr);
    const CompiledDrive cn = compile(neg, tf, nullptr);
    CHECK(roundtrip_error(cp).rms_db < 0.05);
    CHECK(roundtrip_error(cn).rms_db < 0.05);
    // The positive pulse drives the field up from zero, the negative one
    // releases it from saturation toward zero.
    CHECK(std::fabs(cp.drive_field.samples.front()) < 1e-3);
    CHECK(cn.drive_field.samples.front() > 80.0);
}

TEST_CASE("field branch selection") {
    const TransferFunction tf = fitted();
    PulseSpec s = spec_of(PulseShape::gaussian, Polarity::positive, 50e-6);
    CompileOptions neg;
    neg.branch = Branch::negative;
    const CompiledDrive c = compile(s, tf, nullptr, neg);
    for (double b : c.drive_field.samples)
        CHECK(b <= 1e-9);
    CHECK(roundtrip_error(c).rms_db < 0.05);
}

TEST_CASE("compilation through the actuator") {
    const TransferFunction tf = fitted();
    const ActuatorModel act = ActuatorModel::from_bandwidth(1.0e4, 0.3);

    SUBCASE("pre-compensated square tracks the smoothed target") {
        const PulseSpec s = spec_of(PulseShape::square, Polarity::positive, 1e-3);
        const CompiledDrive c = compile(s, tf, &act);
        CHECK(roundtrip_error(c).rms_db < 0.05);
        CHECK(!c.diagnostics.ring_down);
        CHECK(c.diagnostics.precomp_residual_rel < 1e-6);
    }

    SUBCASE("uncompensated sharp square rings down") {
        PulseSpec s = spec_of(PulseShape::square, Polarity::positive, 200e-6);
        CompileOptions raw;
        raw.compensate = false;
        raw.rise_time_s = 2e-6; // nearly unsmoothed edges
        const CompiledDrive c = compile(s, tf, &act, raw);
        CHECK(c.diagnostics.ring_down);
        CHECK(c.diagnostics.ring_down_db > 0.05);
        bool mentioned = false;
        for (const auto& w : c.diagnostics.warnings)
            mentioned = mentioned || w.find("ring-down") != std::string::npos;
        CHECK(mentioned);

        // The same drive pre-compensated does not ring.
        raw.compensate = true;
        const CompiledDrive ok = compile(s, tf, &act, raw);
        CHECK(!ok.diagnostics.ring_down);
    }

    SUBCASE("dc-gain correction applies on the uncompensated path") {
        ActuatorModel scaled = act;
        scaled.dc_gain = 2.0;
        PulseSpec s = spec_of(PulseShape::gaussian, Polarity::positive, 1e-3);
        CompileOptions raw;
        raw.compensate = false;
        const CompiledDrive c = compile(s, tf, &scaled, raw);
        // The command is the wanted field divided by the dc gain.
        const double wanted = tf.field_for_noise(-0.01, Branch::positive);
        const double peak_drive =
            *std::max_element(c.drive_field.samples.begin(), c.drive_field.samples.end());
        CHECK(peak_drive == doctest::Approx(0.5 * wanted).epsilon(1e-9));
        CHECK(roundtrip_error(c).rms_db < 0.05); // 1 ms is slow against 10 kHz
    }
}

TEST_CASE("pulse trains tile exactly") {
    const TransferFunction tf = fitted();
    PulseSpec s = spec_of(PulseShape::gaussian, Polarity::positive, 100e-6);
    s.repetition_period_s = 1.2e-3;
    CompileOptions opt;
    opt.periods = 3;
    const CompiledDrive c = compile(s, tf, nullptr, opt);
    const CompiledDrive one = compile(s, tf, nullptr);
    REQUIRE(c.target_noise.size() == 3 * one.target_noise.size());
    for (size_t i = 0; i < one.target_noise.size(); ++i)
        for (size_t p = 0; p < 3; ++p)
            CHECK(c.drive_field.samples[p * one.target_noise.size() + i] ==
                  doctest::Approx(one.drive_field.samples[i]).epsilon(1e-14));

    opt.periods = 2;
    PulseSpec no_period = s;
    no_period.repetition_period_s.reset();
    CHECK_THROWS_AS((void)compile(no_period, tf, nullptr, opt), ConfigError);
}

TEST_CASE("compilation is deterministic") {
    const TransferFunction tf = fitted();
    const PulseSpec s = spec_of(PulseShape::square, Polarity::positive, 1e-3);
    const ActuatorModel act = ActuatorModel::from_bandwidth(1.0e4, 0.3);
    const CompiledDrive a = compile(s, tf, &act);
    const CompiledDrive b = compile(s, tf, &act);
    REQUIRE(a.drive_field.size() == b.drive_field.size());
    for (size_t i = 0; i < a.drive_field.size(); ++i) {
        CHECK(a.drive_field.samples[i] == b.drive_field.samples[i]);
        CHECK(a.predicted_noise.samples[i] == b.predicted_noise.samples[i]);
    }
}
