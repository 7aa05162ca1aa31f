#pragma once

// Static noise-versus-field calibration: ingestion of measured sweeps,
// a synthetic sweep generator for self-tests, the monotone two-branch
// transfer-curve fit, and its inversion.

#include "sqzpulse/errors.hpp"
#include "sqzpulse/interp.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sqz {

enum class Quadrature { squeezed, antisqueezed };

/// Sign branch of the field axis. The two branches meet at B = 0.
enum class Branch { negative, positive };

/// One row of a calibration sweep: noise of both quadratures at a DC field.
struct CalibrationPoint {
    double b_mg = 0.0;             // longitudinal field, milligauss
    double squeezed_db = 0.0;      // quieter quadrature, dB relative to shot
    double antisqueezed_db = 0.0;  // louder quadrature, dB relative to shot
};

/// A validated sweep, sorted by field. Frequency metadata is carried along
/// for documentation only.
struct CalibrationSet {
    std::vector<CalibrationPoint> points;
    std::string source;
    std::optional<double> center_frequency_hz;
    std::optional<double> rbw_hz;
};

/// Reads the three-column format `b_mG,squeezed_dB,antisqueezed_dB`.
/// Lines starting with '#' are comments; `# key: value` pairs populate the
/// metadata fields. Rows are sorted by field; duplicate fields, rows with
/// squeezed above antisqueezed, and branches with too few points to fit all
/// raise IngestionError.
CalibrationSet load_calibration(std::istream& in, const std::string& source_name);
CalibrationSet load_calibration_file(const std::string& path);

/// Parameters of the synthetic sweep generator. The quiet quadrature relaxes
/// exponentially from its deepest level at B = 0 toward shot noise; the loud
/// quadrature creeps up much more weakly.
struct SynthParams {
    double depth_db = 2.3;       // squeezing at B = 0 (positive number of dB)
    double b0_mg = 20.0;         // exponential field scale
    double anti_base_db = 6.0;   // antisqueezed level at B = 0
    double anti_rise_db = 0.6;   // total antisqueezed rise at large |B|
    double anti_b0_mg = 40.0;    // antisqueezed field scale
    double b_max_mg = 150.0;     // sweep extent (symmetric)
    int n_points = 151;          // uniform grid, odd count includes B = 0
    double noise_sigma_db = 0.0; // additive Gaussian measurement noise
    uint64_t seed = 20;
};

/// Noiseless generator curves (the oracle the fit is tested against).
double synth_squeezed_db(double b_mg, const SynthParams& p);
double synth_antisqueezed_db(double b_mg, const SynthParams& p);

/// Deterministic synthetic sweep; identical seeds give identical sets.
CalibrationSet synth_calibration(const SynthParams& p);

struct FitOptions {
    // Branches whose isotonic-regression RMS residual exceeds this are
    // rejected as non-monotonizable.
    double max_isotonic_rms_db = 0.25;
};

/// Fitted noise-versus-field map: per quadrature, one monotone interpolant
/// for each sign branch over |B|, continuous at B = 0, with the squeezed
/// minimum pinned there.
class TransferFunction {
public:
    /// Noise level in dB at a signed field. Fields beyond the calibrated
    /// range evaluate to the end value; *clamped (if given) reports that.
    double noise_at_field(double b_mg, Quadrature q = Quadrature::squeezed,
                          bool* clamped = nullptr) const;

    /// Unique field on the branch where the squeezed (or chosen) quadrature
    /// reaches `target_db`, solved by bisection to 1e-6 dB. The returned
    /// value is signed (negative branch gives B <= 0).
    /// Throws UnreachableTargetError outside [n_min_db, n_sat_db].
    double field_for_noise(double target_db, Branch branch,
                           Quadrature q = Quadrature::squeezed) const;

    double n_min_db(Quadrature q = Quadrature::squeezed) const;
    /// Level the branch saturates to at its calibrated extreme.
    double n_sat_db(Branch branch, Quadrature q = Quadrature::squeezed) const;
    /// Largest calibrated |B| of the branch, in mG.
    double field_limit_mg(Branch branch) const;

    bool symmetry_assumed() const { return symmetry_assumed_; }
    double isotonic_rms_db(Quadrature q, Branch b) const;

    /// Versioned JSON persistence (knots, values, fit metadata).
    std::string to_json() const;
    static TransferFunction from_json(const std::string& text);
    void save(const std::string& path) const;
    static TransferFunction load(const std::string& path);

private:
    friend TransferFunction fit_transfer(const CalibrationSet&, const FitOptions&);
    const MonotoneCubic& curve(Quadrature q, Branch b) const;

    MonotoneCubic curves_[2][2];   // [quadrature][branch], over |B|
    double isotonic_rms_[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    bool symmetry_assumed_ = false;
    std::string source_;
    std::optional<double> center_frequency_hz_;
    std::optional<double> rbw_hz_;
};

/// Fits the two-branch monotone map. Each branch is isotonic-regressed in
/// |B| (rejecting data whose residual exceeds options.max_isotonic_rms_db)
/// and interpolated with a monotone cubic. A sweep covering only one sign
/// is mirrored onto the other branch and flagged.
TransferFunction fit_transfer(const CalibrationSet& set, const FitOptions& options = {});

} // namespace sqz
