#pragma once

// Small monotone-fitting toolbox: pool-adjacent-violators regression and a
// Fritsch-Carlson monotonicity-preserving piecewise cubic.

#include <cstddef>
#include <span>
#include <vector>

namespace sqz {

/// Least-squares non-decreasing fit of y (uniform weights), computed with the
/// pool-adjacent-violators algorithm. Returns a vector of the same length.
std::vector<double> isotonic_non_decreasing(std::span<const double> y);

/// C1 piecewise-cubic Hermite interpolant with Fritsch-Carlson tangent
/// limiting: monotone input data yields a monotone interpolant, and the
/// curve never overshoots the local data range.
class MonotoneCubic {
public:
    MonotoneCubic() = default;

    /// x strictly increasing, sizes equal, at least 2 knots.
    MonotoneCubic(std::vector<double> x, std::vector<double> y);

    /// Evaluates the interpolant; arguments outside [front_x, back_x] are
    /// clamped to the end values (use inside() to detect that case).
    double operator()(double x) const;

    bool inside(double x) const { return x >= x_.front() && x <= x_.back(); }
    double front_x() const { return x_.front(); }
    double back_x() const { return x_.back(); }
    double front_y() const { return y_.front(); }
    double back_y() const { return y_.back(); }
    size_t size() const { return x_.size(); }
    const std::vector<double>& knots() const { return x_; }
    const std::vector<double>& values() const { return y_; }

private:
    std::vector<double> x_, y_, m_; // knots, values, limited tangents
};

} // namespace sqz
