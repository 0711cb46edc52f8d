#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gprism/error.hpp"

namespace gprism {

/// Dense n x p design matrix stored column-major, with unique column labels.
class DesignMatrix {
public:
    DesignMatrix() = default;

    DesignMatrix(std::size_t rows, std::size_t cols, std::vector<double> column_major,
                 std::vector<std::string> labels = {})
        : rows_(rows), cols_(cols), values_(std::move(column_major)), labels_(std::move(labels)) {
        if (rows_ < 1 || cols_ < 1) throw Error(ErrorCode::DimensionMismatch, "design matrix must be at least 1x1");
        if (values_.size() != rows_ * cols_) {
            throw Error(ErrorCode::DimensionMismatch, "design matrix storage does not match " +
                        std::to_string(rows_) + "x" + std::to_string(cols_));
        }
        if (labels_.empty()) {
            for (std::size_t j = 0; j < cols_; ++j) labels_.push_back("x" + std::to_string(j));
        }
        if (labels_.size() != cols_) throw Error(ErrorCode::DimensionMismatch, "label count differs from column count");
        if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size()) {
            throw Error(ErrorCode::InvalidArgument, "column labels must be unique");
        }
        for (double v : values_) {
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "design matrix has a non-finite entry");
        }
    }

    /// Builds from rows (each of equal length).
    static DesignMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                  std::vector<std::string> labels = {}) {
        if (rows.empty()) throw Error(ErrorCode::DimensionMismatch, "no rows");
        const std::size_t n = rows.size(), p = rows.front().size();
        std::vector<double> cm(n * p);
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[i].size() != p) throw Error(ErrorCode::DimensionMismatch, "ragged rows");
            for (std::size_t j = 0; j < p; ++j) cm[j * n + i] = rows[i][j];
        }
        return DesignMatrix(n, p, std::move(cm), std::move(labels));
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return values_[j * rows_ + i]; }
    [[nodiscard]] std::span<const double> column(std::size_t j) const {
        return std::span<const double>(values_).subspan(j * rows_, rows_);
    }
    [[nodiscard]] std::vector<double> row(std::size_t i) const {
        std::vector<double> r(cols_);
        for (std::size_t j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
        return r;
    }
    [[nodiscard]] const std::vector<std::string>& column_labels() const noexcept { return labels_; }

    /// Rows [begin, end) as a new matrix.
    [[nodiscard]] DesignMatrix row_range(std::size_t begin, std::size_t end) const {
        return select_rows(range_indices(begin, end));
    }

    [[nodiscard]] DesignMatrix select_rows(const std::vector<std::size_t>& idx) const {
        std::vector<double> cm(idx.size() * cols_);
        for (std::size_t j = 0; j < cols_; ++j)
            for (std::size_t r = 0; r < idx.size(); ++r) cm[j * idx.size() + r] = (*this)(idx[r], j);
        return DesignMatrix(idx.size(), cols_, std::move(cm), labels_);
    }

    static std::vector<std::size_t> range_indices(std::size_t begin, std::size_t end) {
        std::vector<std::size_t> idx(end - begin);
        std::iota(idx.begin(), idx.end(), begin);
        return idx;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> values_;
    std::vector<std::string> labels_;
};

struct ColumnScale {
    double mean = 0.0;
    double stddev = 0.0;  // population (1/n) standard deviation
};

inline constexpr double kDegenerateStddev = 1e-12;

struct LassoOptions {
    double tol = 1e-7;
    std::size_t max_iters = 100000;
    /// Record the penalized objective after every sweep (diagnostics / tests).
    bool record_objective = false;
};

struct LassoFit {
    double intercept = 0.0;
    std::vector<double> coefficients;        // original column scale
    std::vector<double> standardized_coefficients;
    std::vector<ColumnScale> standardization;
    double lambda = 0.0;
    std::size_t n_iters = 0;
    bool converged = false;
    double max_last_update = 0.0;
    std::vector<double> objective_trace;

    [[nodiscard]] std::size_t nonzero_count() const noexcept {
        return static_cast<std::size_t>(std::count_if(coefficients.begin(), coefficients.end(),
                                                      [](double b) { return b != 0.0; }));
    }

    [[nodiscard]] double predict(std::span<const double> row) const {
        if (row.size() != coefficients.size()) {
            throw Error(ErrorCode::DimensionMismatch, "feature row has " + std::to_string(row.size()) +
                        " values, model has " + std::to_string(coefficients.size()));
        }
        double acc = intercept;
        for (std::size_t j = 0; j < row.size(); ++j) acc += coefficients[j] * row[j];
        return acc;
    }
};

/// sign(v) * max(|v| - t, 0)
[[nodiscard]] inline double soft_threshold(double v, double t) {
    if (t < 0.0) throw Error(ErrorCode::InvalidArgument, "threshold must be non-negative");
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

namespace detail {

/// Centered and scaled copy of a regression problem. Scaling uses the population
/// standard deviation, so every active column satisfies x'x / n = 1.
struct StandardizedProblem {
    std::size_t n = 0, p = 0;
    std::vector<double> xs;  // column-major standardized
    std::vector<double> yc;  // centered response
    double y_mean = 0.0;
    std::vector<ColumnScale> scale;
    std::vector<bool> active;
    std::vector<double> gram;  // p x p, x_j'x_k / n
    std::vector<double> xty;   // x_j'yc / n

    StandardizedProblem(const DesignMatrix& X, std::span<const double> y) : n(X.rows()), p(X.cols()) {
        if (y.size() != n) {
            throw Error(ErrorCode::DimensionMismatch, "response has " + std::to_string(y.size()) +
                        " rows, design has " + std::to_string(n));
        }
        if (n < 2) throw Error(ErrorCode::TooFewRows, "lasso needs at least 2 rows");
        for (double v : y) {
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "response has a non-finite entry");
        }
        const double dn = static_cast<double>(n);
        y_mean = std::accumulate(y.begin(), y.end(), 0.0) / dn;
        yc.resize(n);
        for (std::size_t i = 0; i < n; ++i) yc[i] = y[i] - y_mean;

        xs.resize(n * p);
        scale.resize(p);
        active.assign(p, false);
        for (std::size_t j = 0; j < p; ++j) {
            const auto col = X.column(j);
            const double mean = std::accumulate(col.begin(), col.end(), 0.0) / dn;
            double ss = 0.0;
            for (double v : col) ss += (v - mean) * (v - mean);
            const double sd = std::sqrt(ss / dn);
            scale[j] = {mean, sd};
            if (sd < kDegenerateStddev) continue;
            active[j] = true;
            for (std::size_t i = 0; i < n; ++i) xs[j * n + i] = (col[i] - mean) / sd;
        }
        gram.assign(p * p, 0.0);
        xty.assign(p, 0.0);
        for (std::size_t j = 0; j < p; ++j) {
            if (!active[j]) continue;
            const auto cj = this->col(j);
            double dy = 0.0;
            for (std::size_t i = 0; i < n; ++i) dy += cj[i] * yc[i];
            xty[j] = dy / dn;
            for (std::size_t k = 0; k <= j; ++k) {
                if (!active[k]) continue;
                const auto ck = this->col(k);
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += cj[i] * ck[i];
                gram[j * p + k] = gram[k * p + j] = dot / dn;
            }
        }
    }

    [[nodiscard]] std::vector<double> residual(std::span<const double> b) const {
        std::vector<double> r = yc;
        for (std::size_t j = 0; j < p; ++j) {
            if (!active[j] || b[j] == 0.0) continue;
            const auto c = col(j);
            for (std::size_t i = 0; i < n; ++i) r[i] -= c[i] * b[j];
        }
        return r;
    }

    [[nodiscard]] std::span<const double> col(std::size_t j) const {
        return std::span<const double>(xs).subspan(j * n, n);
    }

    /// max_j |x_j' yc| / n over active columns.
    [[nodiscard]] double lambda_max() const {
        double best = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (!active[j]) continue;
            const auto c = col(j);
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += c[i] * yc[i];
            best = std::max(best, std::abs(dot) / static_cast<double>(n));
        }
        return best;
    }

    [[nodiscard]] double objective(std::span<const double> residual, std::span<const double> b,
                                   double lambda) const {
        double rss = 0.0;
        for (double r : residual) rss += r * r;
        double l1 = 0.0;
        for (double v : b) l1 += std::abs(v);
        return rss / (2.0 * static_cast<double>(n)) + lambda * l1;
    }

    /// Cyclic coordinate descent from the standardized starting point `b`.
    [[nodiscard]] LassoFit solve(double lambda, std::vector<double> b, const LassoOptions& opt) const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw Error(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
        }
        // Covariance updates: grad[j] = x_j'r / n is kept current, so a coordinate step
        // costs O(1) when the coefficient stays put and O(p) when it moves.
        for (std::size_t j = 0; j < p; ++j)
            if (!active[j]) b[j] = 0.0;
        std::vector<double> grad = xty;
        for (std::size_t k = 0; k < p; ++k) {
            if (b[k] == 0.0) continue;
            for (std::size_t j = 0; j < p; ++j) grad[j] -= gram[j * p + k] * b[k];
        }

        LassoFit fit;
        fit.lambda = lambda;
        std::size_t sweep = 0;
        double max_delta = 0.0;
        while (sweep < opt.max_iters) {
            ++sweep;
            max_delta = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                if (!active[j]) continue;
                const double old = b[j];
                const double updated = soft_threshold(grad[j] + old, lambda);
                const double delta = updated - old;
                if (delta != 0.0) {
                    const double* gj = &gram[j * p];
                    for (std::size_t k = 0; k < p; ++k) grad[k] -= gj[k] * delta;
                    b[j] = updated;
                    max_delta = std::max(max_delta, std::abs(delta));
                }
            }
            if (opt.record_objective) fit.objective_trace.push_back(objective(residual(b), b, lambda));
            if (max_delta < opt.tol) {
                fit.converged = true;
                break;
            }
        }
        fit.n_iters = sweep;
        fit.max_last_update = max_delta;
        fit.standardization = scale;
        fit.coefficients.assign(p, 0.0);
        fit.intercept = y_mean;
        for (std::size_t j = 0; j < p; ++j) {
            if (!active[j] || b[j] == 0.0) continue;
            fit.coefficients[j] = b[j] / scale[j].stddev;
            fit.intercept -= fit.coefficients[j] * scale[j].mean;
        }
        fit.standardized_coefficients = std::move(b);
        return fit;
    }
};

/// Log-spaced grid from lambda_max down to eps_ratio * lambda_max.
inline std::vector<double> lambda_grid(double lambda_max, std::size_t n_lambdas, double eps_ratio) {
    std::vector<double> grid(n_lambdas);
    if (lambda_max <= 0.0) return grid;
    const double log_hi = std::log(lambda_max), log_lo = std::log(eps_ratio * lambda_max);
    for (std::size_t k = 0; k < n_lambdas; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(n_lambdas - 1);
        grid[k] = std::exp(log_hi + frac * (log_lo - log_hi));
    }
    grid.front() = lambda_max;
    return grid;
}

inline void check_path_args(std::size_t n_lambdas, double eps_ratio) {
    if (n_lambdas < 2) throw Error(ErrorCode::InvalidArgument, "n_lambdas must be >= 2");
    if (!(eps_ratio > 0.0 && eps_ratio < 1.0)) throw Error(ErrorCode::InvalidArgument, "eps_ratio must lie in (0, 1)");
}

inline std::vector<LassoFit> solve_path(const StandardizedProblem& prob, const std::vector<double>& lambdas,
                                        const LassoOptions& opt) {
    std::vector<LassoFit> fits;
    fits.reserve(lambdas.size());
    std::vector<double> warm(prob.p, 0.0);
    for (double lam : lambdas) {
        fits.push_back(prob.solve(lam, warm, opt));
        warm = fits.back().standardized_coefficients;
    }
    return fits;
}

}  // namespace detail

/// Smallest lambda whose fit is all-zero, on the standardized scale.
[[nodiscard]] inline double lambda_max(const DesignMatrix& X, std::span<const double> y) {
    return detail::StandardizedProblem(X, y).lambda_max();
}

/// Minimizes (1/2n)||y - mu - X b||^2 + lambda ||b||_1 over standardized columns by cyclic
/// coordinate descent. The intercept is unpenalized; columns with (population) standard
/// deviation below 1e-12 are held at zero. Coefficients are returned on the original scale.
[[nodiscard]] inline LassoFit fit_lasso(const DesignMatrix& X, std::span<const double> y, double lambda,
                                        const LassoOptions& opt = {}) {
    const detail::StandardizedProblem prob(X, y);
    return prob.solve(lambda, std::vector<double>(prob.p, 0.0), opt);
}

struct PathPoint {
    double lambda;
    LassoFit fit;
};

/// Warm-started fits along a log-spaced grid from lambda_max to eps_ratio * lambda_max,
/// in decreasing order; `append_zero` adds a final unpenalized fit.
[[nodiscard]] inline std::vector<PathPoint> lambda_path(const DesignMatrix& X, std::span<const double> y,
                                                        std::size_t n_lambdas, double eps_ratio,
                                                        const LassoOptions& opt = {}, bool append_zero = false) {
    detail::check_path_args(n_lambdas, eps_ratio);
    const detail::StandardizedProblem prob(X, y);
    std::vector<double> grid = detail::lambda_grid(prob.lambda_max(), n_lambdas, eps_ratio);
    if (append_zero) grid.push_back(0.0);
    auto fits = detail::solve_path(prob, grid, opt);
    std::vector<PathPoint> out;
    out.reserve(fits.size());
    for (std::size_t k = 0; k < fits.size(); ++k) out.push_back({grid[k], std::move(fits[k])});
    return out;
}

enum class LambdaRule { Minimum, OneStandardError };

struct CvResult {
    double lambda_star = 0.0;
    std::size_t lambda_index = 0;
    LassoFit fit;
    std::vector<double> lambdas;
    std::vector<double> cv_mean_mse;
    std::vector<double> cv_se;
};

/// Blocked K-fold cross-validation over the lambda path. Folds are contiguous row blocks
/// in time order. The grid comes from the full data; each fold standardizes its own
/// training rows. Under the one-standard-error rule (the default) lambda* is the largest
/// lambda whose mean validation MSE is within one standard error of the minimum; under
/// Minimum it is the argmin (ties go to the larger lambda). The returned fit is refit on
/// all rows.
[[nodiscard]] inline CvResult select_lambda_cv(const DesignMatrix& X, std::span<const double> y,
                                               std::size_t n_folds, std::size_t n_lambdas, double eps_ratio,
                                               const LassoOptions& opt = {},
                                               LambdaRule rule = LambdaRule::OneStandardError) {
    detail::check_path_args(n_lambdas, eps_ratio);
    if (n_folds < 2) throw Error(ErrorCode::InvalidArgument, "n_folds must be >= 2");
    const std::size_t n = X.rows();
    if (y.size() != n) throw Error(ErrorCode::DimensionMismatch, "response length differs from design rows");
    if (n < 2 * n_folds) {
        throw Error(ErrorCode::TooFewRows, std::to_string(n) + " rows cannot support " +
                    std::to_string(n_folds) + " folds");
    }

    const detail::StandardizedProblem full(X, y);
    CvResult out;
    out.lambdas = detail::lambda_grid(full.lambda_max(), n_lambdas, eps_ratio);

    std::vector<std::vector<double>> fold_mse(n_folds, std::vector<double>(n_lambdas, 0.0));
    for (std::size_t f = 0; f < n_folds; ++f) {
        const std::size_t lo = f * n / n_folds, hi = (f + 1) * n / n_folds;
        std::vector<std::size_t> train;
        train.reserve(n - (hi - lo));
        for (std::size_t i = 0; i < n; ++i)
            if (i < lo || i >= hi) train.push_back(i);
        std::vector<double> y_train;
        y_train.reserve(train.size());
        for (std::size_t i : train) y_train.push_back(y[i]);

        const detail::StandardizedProblem prob(X.select_rows(train), y_train);
        const auto fits = detail::solve_path(prob, out.lambdas, opt);
        for (std::size_t k = 0; k < n_lambdas; ++k) {
            double sse = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                double pred = fits[k].intercept;
                for (std::size_t j = 0; j < X.cols(); ++j) pred += fits[k].coefficients[j] * X(i, j);
                sse += (y[i] - pred) * (y[i] - pred);
            }
            fold_mse[f][k] = sse / static_cast<double>(hi - lo);
        }
    }

    out.cv_mean_mse.assign(n_lambdas, 0.0);
    out.cv_se.assign(n_lambdas, 0.0);
    const double df = static_cast<double>(n_folds);
    for (std::size_t k = 0; k < n_lambdas; ++k) {
        double mean = 0.0;
        for (std::size_t f = 0; f < n_folds; ++f) mean += fold_mse[f][k];
        mean /= df;
        double var = 0.0;
        for (std::size_t f = 0; f < n_folds; ++f) var += (fold_mse[f][k] - mean) * (fold_mse[f][k] - mean);
        out.cv_mean_mse[k] = mean;
        out.cv_se[k] = std::sqrt(var / (df - 1.0) / df);
    }

    std::size_t best = 0;
    for (std::size_t k = 1; k < n_lambdas; ++k)
        if (out.cv_mean_mse[k] < out.cv_mean_mse[best]) best = k;
    if (rule == LambdaRule::OneStandardError) {
        const double bound = out.cv_mean_mse[best] + out.cv_se[best];
        for (std::size_t k = 0; k <= best; ++k) {
            if (out.cv_mean_mse[k] <= bound) {
                best = k;
                break;
            }
        }
    }
    out.lambda_index = best;
    out.lambda_star = out.lambdas[best];

    const std::vector<double> prefix(out.lambdas.begin(), out.lambdas.begin() + static_cast<std::ptrdiff_t>(best) + 1);
    auto fits = detail::solve_path(full, prefix, opt);
    out.fit = std::move(fits.back());
    return out;
}

}  // namespace gprism
