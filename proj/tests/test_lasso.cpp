#include <gtest/gtest.h>

#include <random>

#include "gprism/lasso.hpp"
#include "support/oracles.hpp"

namespace gprism {
namespace {

using testing::gaussian_design;
using testing::kkt_violation;
using testing::ols_normal_equations;
using testing::orthonormal_design;

std::vector<double> linear_response(const DesignMatrix& X, const std::vector<double>& beta, double intercept,
                                    double noise_sd, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, noise_sd);
    std::vector<double> y(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        y[i] = intercept;
        for (std::size_t j = 0; j < X.cols(); ++j) y[i] += beta[j] * X(i, j);
        if (noise_sd > 0) y[i] += g(rng);
    }
    return y;
}

double objective(const DesignMatrix& X, const std::vector<double>& y, const LassoFit& f) {
    double rss = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const double r = y[i] - f.predict(X.row(i));
        rss += r * r;
    }
    double l1 = 0.0;
    for (double b : f.standardized_coefficients) l1 += std::abs(b);
    return rss / (2.0 * static_cast<double>(X.rows())) + f.lambda * l1;
}

TEST(SoftThreshold, Examples) {
    EXPECT_EQ(soft_threshold(5, 2), 3);
    EXPECT_EQ(soft_threshold(-5, 2), -3);
    EXPECT_EQ(soft_threshold(1, 2), 0);
    EXPECT_EQ(soft_threshold(-2, 2), 0);
    EXPECT_THROW((void)soft_threshold(1, -1), Error);
}

TEST(FitLasso, AtLambdaMaxEverythingIsZero) {
    std::mt19937_64 rng(1);
    const auto X = gaussian_design(30, 5, rng);
    const auto y = linear_response(X, {1, -2, 0, 0.5, 3}, 4.0, 1.0, rng);
    const double lmax = lambda_max(X, y);
    for (double scale : {1.0, 1.5, 100.0}) {
        const auto fit = fit_lasso(X, y, lmax * scale);
        for (double b : fit.coefficients) EXPECT_EQ(b, 0.0);
        double mean = 0.0;
        for (double v : y) mean += v;
        EXPECT_DOUBLE_EQ(fit.intercept, mean / 30.0);
        EXPECT_TRUE(fit.converged);
    }
    // just below lambda_max something enters
    EXPECT_GT(fit_lasso(X, y, lmax * 0.99).nonzero_count(), 0u);
}

TEST(FitLasso, ZeroLambdaMatchesOls) {
    std::mt19937_64 rng(2);
    const auto X = gaussian_design(20, 3, rng);
    const auto y = linear_response(X, {1.5, -0.7, 2.0}, -3.0, 0.5, rng);
    const auto fit = fit_lasso(X, y, 0.0);
    const auto ols = ols_normal_equations(X, y);
    ASSERT_TRUE(fit.converged);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(fit.coefficients[j], ols[j], 1e-5);
    EXPECT_NEAR(fit.intercept, ols[3], 1e-5);
}

TEST(FitLasso, OrthonormalDesignIsSoftThresholdedOls) {
    std::mt19937_64 rng(3);
    const auto X = orthonormal_design(50, 6, rng);
    const auto y = linear_response(X, {2.0, -1.0, 0.3, 0.0, -0.05, 1.2}, 1.0, 0.3, rng);
    const auto ols = ols_normal_equations(X, y);
    for (double lam : {0.0, 0.01, 0.1, 0.5, 1.0, 5.0}) {
        const auto fit = fit_lasso(X, y, lam);
        for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(fit.coefficients[j], soft_threshold(ols[j], lam), 1e-6);
    }
}

TEST(FitLasso, ConstantColumnGetsZero) {
    std::mt19937_64 rng(4);
    auto rows = std::vector<std::vector<double>>(25);
    std::normal_distribution<double> g;
    for (auto& r : rows) r = {g(rng), 3.0, g(rng)};
    const auto X = DesignMatrix::from_rows(rows);
    const auto y = linear_response(X, {1.0, 0.0, -1.0}, 2.0, 0.1, rng);
    const auto fit = fit_lasso(X, y, 0.0);
    EXPECT_EQ(fit.coefficients[1], 0.0);
    EXPECT_NEAR(fit.coefficients[0], 1.0, 0.2);
}

TEST(FitLasso, Errors) {
    std::mt19937_64 rng(5);
    const auto X = gaussian_design(10, 2, rng);
    auto code = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    EXPECT_EQ(code([&] { (void)fit_lasso(X, std::vector<double>(9, 1.0), 0.1); }), ErrorCode::DimensionMismatch);
    std::vector<double> bad(10, 1.0);
    bad[4] = NAN;
    EXPECT_EQ(code([&] { (void)fit_lasso(X, bad, 0.1); }), ErrorCode::NonFiniteInput);
    EXPECT_EQ(code([&] { (void)DesignMatrix(1, 2, {1.0, NAN}); }), ErrorCode::NonFiniteInput);
    EXPECT_EQ(code([&] { (void)DesignMatrix(1, 2, {1.0, 2.0}, {"a", "a"}); }), ErrorCode::InvalidArgument);
}

TEST(FitLasso, ReportsNonConvergence) {
    std::mt19937_64 rng(6);
    const auto X = gaussian_design(40, 6, rng);
    const auto y = linear_response(X, {1, 1, 1, 1, 1, 1}, 0.0, 1.0, rng);
    LassoOptions opt;
    opt.max_iters = 1;
    opt.tol = 1e-12;
    const auto fit = fit_lasso(X, y, 0.0, opt);
    EXPECT_FALSE(fit.converged);
    EXPECT_EQ(fit.n_iters, 1u);
}

TEST(FitLasso, ObjectiveNonIncreasingPerSweep) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto X = gaussian_design(30, 8, rng);
        const auto y = linear_response(X, {1, 0, -1, 0.5, 0, 0, 2, 0}, 0.0, 1.0, rng);
        LassoOptions opt;
        opt.record_objective = true;
        const auto fit = fit_lasso(X, y, 0.05 * lambda_max(X, y), opt);
        for (std::size_t k = 1; k < fit.objective_trace.size(); ++k) {
            EXPECT_LE(fit.objective_trace[k], fit.objective_trace[k - 1] + 1e-12);
        }
    }
}

TEST(FitLasso, KktAtConvergence) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const auto X = gaussian_design(40, 6, rng);
        const auto y = linear_response(X, {1, 0, -1, 0.5, 0, 0.2}, 3.0, 1.0, rng);
        for (const auto& pt : lambda_path(X, y, 20, 1e-3)) {
            ASSERT_TRUE(pt.fit.converged);
            EXPECT_LE(kkt_violation(X, y, pt.fit), 10 * 1e-7);
        }
    }
}

TEST(FitLasso, ColumnRescalingLeavesPredictionsUnchanged) {
    std::mt19937_64 rng(9);
    const auto X = gaussian_design(35, 4, rng);
    const auto y = linear_response(X, {1, -2, 0.5, 0}, 1.0, 0.5, rng);
    std::vector<double> cm;
    for (std::size_t j = 0; j < 4; ++j) {
        const double c = j == 2 ? 1000.0 : (j == 0 ? 0.01 : 1.0);
        for (double v : X.column(j)) cm.push_back(c * v);
    }
    const DesignMatrix Xs(35, 4, cm);
    const double lam = 0.1 * lambda_max(X, y);
    LassoOptions opt;
    opt.tol = 1e-12;
    const auto a = fit_lasso(X, y, lam, opt), b = fit_lasso(Xs, y, lam, opt);
    for (std::size_t i = 0; i < 35; ++i) EXPECT_NEAR(a.predict(X.row(i)), b.predict(Xs.row(i)), 1e-8);
}

TEST(FitLasso, Reproducible) {
    std::mt19937_64 rng(10);
    const auto X = gaussian_design(40, 5, rng);
    const auto y = linear_response(X, {1, 2, 3, 4, 5}, 0.0, 1.0, rng);
    const auto a = select_lambda_cv(X, y, 5, 30, 1e-3), b = select_lambda_cv(X, y, 5, 30, 1e-3);
    EXPECT_EQ(a.fit.coefficients, b.fit.coefficients);
    EXPECT_EQ(a.fit.intercept, b.fit.intercept);
    EXPECT_EQ(a.cv_mean_mse, b.cv_mean_mse);
}

TEST(LambdaPath, FirstEntryIsZeroAndGridIsLogSpaced) {
    std::mt19937_64 rng(11);
    const auto X = gaussian_design(40, 5, rng);
    const auto y = linear_response(X, {1, 0, 0, -1, 0}, 0.0, 1.0, rng);
    const auto path = lambda_path(X, y, 10, 0.01);
    ASSERT_EQ(path.size(), 10u);
    EXPECT_EQ(path.front().fit.nonzero_count(), 0u);
    EXPECT_EQ(path.front().lambda, lambda_max(X, y));
    EXPECT_NEAR(path.back().lambda, 0.01 * path.front().lambda, 1e-12);
    for (std::size_t k = 1; k < path.size(); ++k) {
        EXPECT_LT(path[k].lambda, path[k - 1].lambda);
        EXPECT_NEAR(path[k].lambda / path[k - 1].lambda, std::pow(0.01, 1.0 / 9.0), 1e-12);
    }
    EXPECT_THROW((void)lambda_path(X, y, 1, 0.01), Error);
    EXPECT_THROW((void)lambda_path(X, y, 10, 1.0), Error);
}

TEST(LambdaPath, ZeroAppendedEndsAtOls) {
    std::mt19937_64 rng(12);
    const auto X = gaussian_design(30, 4, rng);
    const auto y = linear_response(X, {0.5, -1, 2, 0}, 1.0, 0.5, rng);
    const auto path = lambda_path(X, y, 15, 1e-3, {}, true);
    const auto ols = ols_normal_equations(X, y);
    EXPECT_EQ(path.back().lambda, 0.0);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(path.back().fit.coefficients[j], ols[j], 1e-5);
}

TEST(LambdaPath, WarmRefitDoesNotIncreaseObjective) {
    std::mt19937_64 rng(13);
    const auto X = gaussian_design(30, 6, rng);
    const auto y = linear_response(X, {1, 1, 0, 0, -1, 0}, 0.0, 1.0, rng);
    const auto path = lambda_path(X, y, 10, 1e-2);
    for (std::size_t k = 1; k < path.size(); ++k) {
        // warm start from the previous lambda vs. a cold start: same optimum
        const auto cold = fit_lasso(X, y, path[k].lambda);
        EXPECT_NEAR(objective(X, y, path[k].fit), objective(X, y, cold), 1e-9);
    }
}

TEST(SelectLambdaCv, FoldBoundaries) {
    std::mt19937_64 rng(14);
    const auto X4 = gaussian_design(4, 2, rng);
    const std::vector<double> y4{1, 2, 3, 5};
    EXPECT_NO_THROW((void)select_lambda_cv(X4, y4, 2, 5, 0.01));
    const auto X8 = gaussian_design(8, 2, rng);
    try {
        (void)select_lambda_cv(X8, std::vector<double>(8, 1.0), 5, 5, 0.01);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewRows);
    }
}

TEST(SelectLambdaCv, PureNoiseSelectsLambdaMax) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    int null_models = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto X = gaussian_design(100, 10, rng);
        std::vector<double> y(100);
        for (auto& v : y) v = g(rng);
        const auto cv = select_lambda_cv(X, y, 5, 50, 1e-3);
        if (cv.lambda_index == 0 && cv.fit.nonzero_count() == 0) ++null_models;
    }
    EXPECT_GE(null_models, 90);
}

TEST(SelectLambdaCv, MinimumRuleIsLessConservativeOnNoise) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    int min_null = 0, se_null = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto X = gaussian_design(100, 10, rng);
        std::vector<double> y(100);
        for (auto& v : y) v = g(rng);
        min_null += select_lambda_cv(X, y, 5, 50, 1e-3, {}, LambdaRule::Minimum).lambda_index == 0;
        se_null += select_lambda_cv(X, y, 5, 50, 1e-3, {}, LambdaRule::OneStandardError).lambda_index == 0;
    }
    EXPECT_LE(min_null, se_null);
    EXPECT_GE(min_null, 50);
}

TEST(SelectLambdaCv, RecoversSingleActiveFeature) {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 20; ++trial) {
        const auto X = gaussian_design(60, 10, rng);
        std::vector<double> beta(10, 0.0);
        const std::size_t active = rng() % 10;
        beta[active] = 2.0;
        const auto y = linear_response(X, beta, 1.0, 0.1, rng);
        const auto cv = select_lambda_cv(X, y, 5, 50, 1e-3);
        std::size_t best = 0;
        for (std::size_t j = 1; j < 10; ++j)
            if (std::abs(cv.fit.coefficients[j]) > std::abs(cv.fit.coefficients[best])) best = j;
        EXPECT_EQ(best, active);
    }
}

TEST(SelectLambdaCv, OneStandardErrorPicksSparserModel) {
    std::mt19937_64 rng(16);
    const auto X = gaussian_design(80, 8, rng);
    const auto y = linear_response(X, {1, 0.5, 0.2, 0, 0, 0, 0, 0.1}, 0.0, 1.0, rng);
    const auto a = select_lambda_cv(X, y, 5, 40, 1e-3, {}, LambdaRule::Minimum);
    const auto b = select_lambda_cv(X, y, 5, 40, 1e-3, {}, LambdaRule::OneStandardError);
    EXPECT_GE(b.lambda_star, a.lambda_star);
    EXPECT_LE(b.cv_mean_mse[b.lambda_index], a.cv_mean_mse[a.lambda_index] + a.cv_se[a.lambda_index]);
}

}  // namespace
}  // namespace gprism
