#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "gprism/lasso.hpp"

namespace gprism::testing {

/// Ordinary least squares with intercept via the normal equations. Returns the slope
/// coefficients on the original scale followed by the intercept.
inline std::vector<double> ols_normal_equations(const DesignMatrix& X, const std::vector<double>& y) {
    const auto n = static_cast<Eigen::Index>(X.rows()), p = static_cast<Eigen::Index>(X.cols());
    Eigen::MatrixXd A(n, p + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) A(i, j) = X(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        A(i, p) = 1.0;
        b(i) = y[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd beta = (A.transpose() * A).ldlt().solve(A.transpose() * b);
    return std::vector<double>(beta.data(), beta.data() + beta.size());
}

/// Random design with centered columns satisfying X'X / n = I (Householder QR).
inline DesignMatrix orthonormal_design(std::size_t n, std::size_t p, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = gauss(rng);
    A.rowwise() -= A.colwise().mean();
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ() *
                              Eigen::MatrixXd::Identity(A.rows(), A.cols());
    const Eigen::MatrixXd X = Q * std::sqrt(static_cast<double>(n));
    std::vector<double> cm(X.data(), X.data() + X.size());
    return DesignMatrix(n, p, std::move(cm));
}

inline DesignMatrix gaussian_design(std::size_t n, std::size_t p, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> cm(n * p);
    for (auto& v : cm) v = gauss(rng);
    return DesignMatrix(n, p, std::move(cm));
}

/// Stationarity on the standardized scale: zero coefficient needs |g_j| <= lambda + slack,
/// nonzero needs |g_j + lambda sign(b_j)| <= slack, where g_j = -(1/n) x_j' r.
inline double kkt_violation(const DesignMatrix& X, const std::vector<double>& y, const LassoFit& fit) {
    const std::size_t n = X.rows(), p = X.cols();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - fit.predict(X.row(i));
    double worst = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double mean = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += X(i, j);
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) ss += (X(i, j) - mean) * (X(i, j) - mean);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd < kDegenerateStddev) continue;
        double g = 0.0;
        for (std::size_t i = 0; i < n; ++i) g -= (X(i, j) - mean) / sd * r[i];
        g /= static_cast<double>(n);
        const double b = fit.coefficients[j] * sd;
        const double v = b == 0.0 ? std::max(0.0, std::abs(g) - fit.lambda)
                                  : std::abs(g + fit.lambda * (b > 0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

}  // namespace gprism::testing
