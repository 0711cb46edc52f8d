#pragma once

#include <cmath>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "gprism/error.hpp"
#include "gprism/series.hpp"

namespace gprism {

/// Additive split y = gamma + z of one window. `trend` is the moving-average trend
/// (edges extended by the nearest interior value); `profile` is the zero-sum seasonal
/// profile indexed by phase relative to the window start.
struct Decomposition {
    std::vector<double> gamma;
    std::vector<double> z;
    std::vector<double> trend;
    std::vector<double> profile;
    std::size_t period = 0;
};

namespace detail {

/// Centered moving average spanning 2*floor(period/2)+1 points. For even periods the
/// two end points carry half weight (the 2 x period average), so any period-periodic
/// sequence is annihilated and linear trends pass through unchanged.
inline double centered_trend_at(std::span<const double> y, std::size_t i, std::size_t period) {
    const std::size_t half = period / 2;
    double acc = 0.0;
    if (period % 2 == 0) {
        acc += 0.5 * (y[i - half] + y[i + half]);
        for (std::size_t k = i - half + 1; k < i + half; ++k) acc += y[k];
    } else {
        for (std::size_t k = i - half; k <= i + half; ++k) acc += y[k];
    }
    return acc / static_cast<double>(period);
}

/// Splits y into (g, z) with g within an ulp or so of `seasonal` and fl(g + z) == y.
/// Two constructions are tried: re-deriving g = y - fl(y - seasonal), exact when the
/// remainder dominates; and rounding `seasonal` onto the ulp(y) grid, exact when y
/// dominates. If neither holds (|seasonal| well above |y|) the plain difference is used.
inline std::pair<double, double> exact_split(double y, double seasonal) {
    {
        const double z = y - seasonal;
        const double g = y - z;
        if (g + z == y) return {g, z};
    }
    {
        const double q = std::nextafter(std::abs(y), INFINITY) - std::abs(y);
        const double g = std::round(seasonal / q) * q;
        const double z = y - g;
        if (std::isfinite(g) && g + z == y) return {g, z};
    }
    return {seasonal, y - seasonal};
}

}  // namespace detail

/// Classical additive moving-average decomposition of a window `y` with the given period.
///
/// The seasonal profile is the phase-wise mean of the detrended values over interior
/// points (where the centered average fits), centered to sum to zero; gamma repeats the
/// profile (up to ulp-level adjustment) and gamma + z reproduces y bit-exactly.
[[nodiscard]] inline Decomposition decompose(std::span<const double> y, std::size_t period) {
    if (period < 2) throw Error(ErrorCode::InvalidArgument, "period must be >= 2");
    if (y.size() < 2 * period) {
        throw Error(ErrorCode::WindowTooShort, "window of " + std::to_string(y.size()) +
                    " is shorter than two periods of " + std::to_string(period));
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "decompose input is not finite");
    }

    const std::size_t n = y.size();
    const std::size_t half = period / 2;
    const std::size_t lo = half, hi = n - 1 - half;

    Decomposition out;
    out.period = period;
    out.trend.assign(n, 0.0);
    for (std::size_t i = lo; i <= hi; ++i) out.trend[i] = detail::centered_trend_at(y, i, period);
    for (std::size_t i = 0; i < lo; ++i) out.trend[i] = out.trend[lo];
    for (std::size_t i = hi + 1; i < n; ++i) out.trend[i] = out.trend[hi];

    std::vector<double> phase_sum(period, 0.0);
    std::vector<std::size_t> phase_count(period, 0);
    for (std::size_t i = lo; i <= hi; ++i) {
        phase_sum[i % period] += y[i] - out.trend[i];
        ++phase_count[i % period];
    }
    out.profile.resize(period);
    double mean = 0.0;
    for (std::size_t p = 0; p < period; ++p) {
        out.profile[p] = phase_sum[p] / static_cast<double>(phase_count[p]);
        mean += out.profile[p];
    }
    mean /= static_cast<double>(period);
    for (double& v : out.profile) v -= mean;

    out.gamma.resize(n);
    out.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::tie(out.gamma[i], out.z[i]) = detail::exact_split(y[i], out.profile[i % period]);
    }
    return out;
}

/// Decomposes the `window` points of `s` immediately preceding `end_exclusive`. The
/// result is indexed from end_exclusive - window to end_exclusive - 1.
[[nodiscard]] inline Decomposition decompose_series_window(const TimeSeries& s, TimeStamp end_exclusive,
                                                           std::size_t window, std::size_t period) {
    const TimeSeries slice = slice_window(s, end_exclusive, window);
    const std::vector<double> y = dense_values(slice);
    return decompose(y, period);
}

}  // namespace gprism
