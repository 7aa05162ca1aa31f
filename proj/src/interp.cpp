#include "sqzpulse/interp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sqz {

std::vector<double> isotonic_non_decreasing(std::span<const double> y) {
    const size_t n = y.size();
    std::vector<double> fit(n);
    if (n == 0)
        return fit;

    // Blocks of pooled values: (mean, count), merged while out of order.
    std::vector<double> mean(n);
    std::vector<size_t> count(n);
    size_t blocks = 0;
    for (size_t i = 0; i < n; ++i) {
        mean[blocks] = y[i];
        count[blocks] = 1;
        ++blocks;
        while (blocks > 1 && mean[blocks - 2] > mean[blocks - 1]) {
            const double total = mean[blocks - 2] * double(count[blocks - 2]) +
                                 mean[blocks - 1] * double(count[blocks - 1]);
            count[blocks - 2] += count[blocks - 1];
            mean[blocks - 2] = total / double(count[blocks - 2]);
            --blocks;
        }
    }
    size_t k = 0;
    for (size_t b = 0; b < blocks; ++b)
        for (size_t j = 0; j < count[b]; ++j)
            fit[k++] = mean[b];
    return fit;
}

namespace {

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

// One-sided three-point slope estimate for the first knot (mirror for the
// last), limited the standard Fritsch-Carlson way.
double edge_tangent(double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (sgn(m) != sgn(d0))
        m = 0.0;
    else if (sgn(d0) != sgn(d1) && std::fabs(m) > 3.0 * std::fabs(d0))
        m = 3.0 * d0;
    return m;
}

} // namespace

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const size_t n = x_.size();
    if (n < 2 || y_.size() != n)
        throw std::invalid_argument("MonotoneCubic: need >= 2 knots and matching sizes");
    for (size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1]))
            throw std::invalid_argument("MonotoneCubic: knots must be strictly increasing");

    m_.assign(n, 0.0);
    if (n == 2) {
        const double d = (y_[1] - y_[0]) / (x_[1] - x_[0]);
        m_[0] = m_[1] = d;
        return;
    }

    std::vector<double> h(n - 1), d(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    // Interior tangents: weighted harmonic mean when the secants agree in
    // sign, zero otherwise (keeps local extrema flat).
    for (size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] == 0.0 || d[i] == 0.0 || sgn(d[i - 1]) != sgn(d[i])) {
            m_[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m_[0] = edge_tangent(h[0], h[1], d[0], d[1]);
    m_[n - 1] = edge_tangent(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
}

double MonotoneCubic::operator()(double x) const {
    if (x_.empty())
        throw std::logic_error("MonotoneCubic: evaluating a default-constructed curve");
    if (x <= x_.front())
        return y_.front();
    if (x >= x_.back())
        return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const size_t i = size_t(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
}

} // namespace sqz
