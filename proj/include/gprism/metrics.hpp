#pragma once

#include <cmath>
#include <span>

#include "gprism/error.hpp"

namespace gprism {

namespace detail {
inline void check_metric_args(std::span<const double> y_hat, std::span<const double> y) {
    if (y_hat.size() != y.size()) {
        throw Error(ErrorCode::LengthMismatch, "prediction and actual lengths differ (" +
                    std::to_string(y_hat.size()) + " vs " + std::to_string(y.size()) + ")");
    }
    if (y.empty()) throw Error(ErrorCode::InvalidArgument, "metrics need at least one point");
}
}  // namespace detail

/// ||y_hat - y||_2 / sqrt(n)
[[nodiscard]] inline double rmse(std::span<const double> y_hat, std::span<const double> y) {
    detail::check_metric_args(y_hat, y);
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) ss += (y_hat[i] - y[i]) * (y_hat[i] - y[i]);
    return std::sqrt(ss) / std::sqrt(static_cast<double>(y.size()));
}

/// ||y_hat - y||_1 / n
[[nodiscard]] inline double mae(std::span<const double> y_hat, std::span<const double> y) {
    detail::check_metric_args(y_hat, y);
    double sa = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) sa += std::abs(y_hat[i] - y[i]);
    return sa / static_cast<double>(y.size());
}

}  // namespace gprism
