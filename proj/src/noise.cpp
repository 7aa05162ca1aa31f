#include "sqzpulse/noise.hpp"

#include <cmath>
#include <sstream>

namespace sqz {

QuadraturePair::QuadraturePair(Variance lo, Variance hi) : v_min(lo), v_max(hi) {
    if (!(lo.value > 0.0) || !(hi.value > 0.0) || lo.value > hi.value)
        throw std::domain_error("QuadraturePair: need 0 < v_min <= v_max");
    // Minimum-uncertainty bound, with a little slack for roundoff.
    if (lo.value * hi.value < 1.0 - 1e-9)
        throw std::domain_error("QuadraturePair: v_min * v_max < 1 is unphysical");
}

void LossBudget::validate() const {
    if (!(optical_transmission > 0.0) || optical_transmission > 1.0)
        throw std::domain_error("LossBudget: optical_transmission must be in (0, 1]");
    if (!(detector_qe > 0.0) || detector_qe > 1.0)
        throw std::domain_error("LossBudget: detector_qe must be in (0, 1]");
    if (!(shot_cal_offset_db >= 0.0))
        throw std::domain_error("LossBudget: shot_cal_offset_db must be >= 0");
}

NoiseLevel variance_to_db(Variance v) {
    if (!(v.value > 0.0))
        throw std::domain_error("variance_to_db: variance must be positive");
    return {10.0 * std::log10(v.value)};
}

Variance db_to_variance(NoiseLevel level) {
    if (!std::isfinite(level.db))
        throw std::domain_error("db_to_variance: level must be finite");
    return {std::pow(10.0, level.db / 10.0)};
}

Variance apply_loss(Variance v, double efficiency) {
    if (!(v.value > 0.0))
        throw std::domain_error("apply_loss: variance must be positive");
    if (!(efficiency > 0.0) || efficiency > 1.0)
        throw std::domain_error("apply_loss: efficiency must be in (0, 1]");
    return {efficiency * v.value + (1.0 - efficiency)};
}

Variance infer_source_variance(Variance detected, const LossBudget& budget) {
    budget.validate();
    const double eta = budget.total_efficiency();
    const double floor = 1.0 - eta;
    if (detected.value <= floor) {
        std::ostringstream msg;
        msg << "infer_source_variance: detected variance " << detected.value
            << " is at or below the vacuum floor " << floor
            << " implied by efficiency " << eta;
        throw InfeasibleDetectionError(msg.str());
    }
    return {(detected.value - floor) / eta};
}

Variance rotate_quadrature(const QuadraturePair& pair, double theta_rad) {
    const double c = std::cos(theta_rad);
    const double s = std::sin(theta_rad);
    return {pair.v_min.value * c * c + pair.v_max.value * s * s};
}

NoiseLevel shot_reference(const LossBudget& budget, ShotConvention convention) {
    budget.validate();
    if (convention == ShotConvention::corrected)
        return {-budget.shot_cal_offset_db};
    return {0.0};
}

} // namespace sqz
