// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

// Eigen before httplib: <resolv.h> defines a _res macro that clashes with Eigen parameter names.
#include "support/oracles.hpp"

#include "gprism/cli/config.hpp"
#include "gprism/decomposition.hpp"
#include "gprism/ingest/parsers.hpp"
#include "gprism/lasso.hpp"
#include "gprism/metrics.hpp"
#include "gprism/pipeline.hpp"
#include "support/cli_runner.hpp"
#include "support/fixtures.hpp"
#include "support/stub_server.hpp"
#include "support/synthetic.hpp"

namespace {

using namespace gprism;
using namespace gprism::testing;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::vector<double> linear_response(const DesignMatrix& X, const std::vector<double>& beta, double intercept,
                                    double noise_sd, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, noise_sd);
    std::vector<double> y(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        y[i] = intercept + g(rng);
        for (std::size_t j = 0; j < X.cols(); ++j) y[i] += beta[j] * X(i, j);
    }
    return y;
}

// 1. lambda = 0 against the normal equations; orthonormal designs against soft-thresholding.
Outcome lasso_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> pick_p(1, 8);
    std::normal_distribution<double> g;
    double ols_err = 0.0, st_err = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const std::size_t p = pick_p(rng);
        std::vector<double> beta(p);
        for (auto& b : beta) b = 2.0 * g(rng);
        const auto X = gaussian_design(40, p, rng);
        const auto y = linear_response(X, beta, g(rng), 1.0, rng);
        const auto fit = fit_lasso(X, y, 0.0);
        const auto ols = ols_normal_equations(X, y);
        for (std::size_t j = 0; j < p; ++j) ols_err = std::max(ols_err, std::abs(fit.coefficients[j] - ols[j]));

        const auto Q = orthonormal_design(40, p, rng);
        const auto yq = linear_response(Q, beta, g(rng), 1.0, rng);
        const auto ols_q = ols_normal_equations(Q, yq);
        const double lmax = lambda_max(Q, yq);
        for (int k = 0; k < 10; ++k) {
            const double lambda = lmax * static_cast<double>(k) / 9.0;
            const auto f = fit_lasso(Q, yq, lambda);
            for (std::size_t j = 0; j < p; ++j)
                st_err = std::max(st_err, std::abs(f.coefficients[j] - soft_threshold(ols_q[j], lambda)));
        }
    }
    const double secs = seconds_since(t0);
    return {ols_err < 1e-5 && st_err < 1e-6 && secs < 5.0,
            "max |b - b_ols| = " + fmt("%.3g", ols_err) + " (< 1e-5), max |b - S(b_ols, lambda)| = " +
                fmt("%.3g", st_err) + " (< 1e-6), " + fmt("%.2f", secs) + " s (< 5 s)"};
}

// 2. Stationarity of every converged fit along the path.
Outcome kkt_suite() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    std::normal_distribution<double> g;
    const LassoOptions opt;
    double worst = 0.0;
    std::size_t fits = 0, unconverged = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t n = 30 + 5 * static_cast<std::size_t>(inst % 8), p = 3 + static_cast<std::size_t>(inst % 10);
        std::vector<double> beta(p);
        for (std::size_t j = 0; j < p; ++j) beta[j] = j % 3 == 0 ? 0.0 : g(rng);
        const auto X = gaussian_design(n, p, rng);
        const auto y = linear_response(X, beta, 2.0, 1.0, rng);
        for (const auto& pt : lambda_path(X, y, 50, 1e-3, opt)) {
            if (!pt.fit.converged) {
                ++unconverged;
                continue;
            }
            ++fits;
            worst = std::max(worst, kkt_violation(X, y, pt.fit));
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 10 * opt.tol && fits > 0 && secs < 10.0,
            std::to_string(fits) + " converged fits (" + std::to_string(unconverged) + " unconverged), worst violation " +
                fmt("%.3g", worst) + " (<= 10 tol = " + fmt("%.1g", 10 * opt.tol) + "), " + fmt("%.2f", secs) + " s (< 10 s)"};
}

// 3. Noiseless linear trend plus sine: gamma recovers the sine.
Outcome decomposition_recovery() {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double gamma_err = 0.0, profile_sum = 0.0;
    std::size_t inexact = 0;
    for (std::size_t p : {4u, 12u, 52u}) {
        for (int rep = 0; rep < 5; ++rep) {
            const std::size_t M = 4 * p;
            const double level = 50.0 + 100.0 * u(rng), slope = 0.5 * (u(rng) - 0.5), amp = 1.0 + 4.0 * u(rng);
            const double phase = 2.0 * std::numbers::pi * u(rng);
            std::vector<double> y(M), sine(M);
            for (std::size_t i = 0; i < M; ++i) {
                sine[i] = amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(p) + phase);
                y[i] = level + slope * static_cast<double>(i) + sine[i];
            }
            const auto d = decompose(y, p);
            for (std::size_t i = p / 2; i + p / 2 < M; ++i) gamma_err = std::max(gamma_err, std::abs(d.gamma[i] - sine[i]));
            for (std::size_t i = 0; i < M; ++i) inexact += (d.gamma[i] + d.z[i] != y[i]);
            for (std::size_t start = 0; start + p <= M; start += p) {
                double s = 0.0;
                for (std::size_t i = start; i < start + p; ++i) s += d.gamma[i];
                profile_sum = std::max(profile_sum, std::abs(s));
            }
        }
    }
    return {gamma_err < 1e-6 && inexact == 0 && profile_sum < 1e-9,
            "p in {4,12,52}, M = 4p: max |gamma - sine| = " + fmt("%.3g", gamma_err) + " (< 1e-6), " +
                std::to_string(inexact) + " points with gamma + z != y, max |sum per period| = " +
                fmt("%.3g", profile_sum) + " (< 1e-9)"};
}

ModelConfig ordering_config(Variant v) {
    ModelConfig cfg;
    cfg.period = 8;
    cfg.window_M = 32;
    cfg.lags_K = 8;
    cfg.horizons = {0};
    cfg.operator_specs = {OperatorSpec::moving_average(17), OperatorSpec::rate_of_change(5)};
    cfg.exogenous_names = {"driver"};
    cfg.lasso.n_lambdas = 30;
    cfg.variant = v;
    return cfg;
}

// 4. Garbage after the test time leaves every prediction bit unchanged.
Outcome no_look_ahead() {
    const auto sig = planted_signal(404, 160, 8);
    ModelConfig cfg = ordering_config(Variant::MRT);
    cfg.horizons = {0, 1, 2, 3};
    std::mt19937_64 rng(4040);
    std::uniform_int_distribution<int> pick(80, 150);
    std::uniform_real_distribution<double> garbage(-1e6, 1e6);
    auto corrupt_after = [&](const TimeSeries& s, TimeStamp i, bool inclusive) {
        std::vector<Value> v = s.values();
        for (std::size_t k = 0; k < v.size(); ++k)
            if (s.timestamp(k) > i || (inclusive && s.timestamp(k) == i)) v[k] = garbage(rng);
        return TimeSeries(s.name(), s.freq(), s.start(), v);
    };
    auto same = [](const BacktestReport& a, const BacktestReport& b) {
        for (std::size_t h = 0; h < a.horizons.size(); ++h) {
            const auto& ra = a.horizons[h].records;
            const auto& rb = b.horizons[h].records;
            if (ra.size() != rb.size()) return false;
            for (std::size_t k = 0; k < ra.size(); ++k) {
                if (std::memcmp(&ra[k].y_pred, &rb[k].y_pred, sizeof(double)) != 0 || ra[k].lambda != rb[k].lambda ||
                    ra[k].nonzero_count != rb[k].nonzero_count)
                    return false;
            }
        }
        return true;
    };
    int target_ok = 0, exog_ok = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const TimeStamp i = saturday(pick(rng));
        const EvaluationSpan span{i, i};
        const auto clean = walk_forward(sig.target, {sig.driver}, cfg, span);
        // target: the test-time value itself is never an input either, so it is corrupted too
        const auto t_bad = walk_forward(corrupt_after(sig.target, i, true), {sig.driver}, cfg, span);
        const auto x_bad = walk_forward(sig.target, {corrupt_after(sig.driver, i, false)}, cfg, span);
        target_ok += same(clean, t_bad);
        exog_ok += same(clean, x_bad);
    }
    return {target_ok == 10 && exog_ok == 10,
            "10 test times x horizons 0..3 (MRT): target corruption at/after t unchanged in " + std::to_string(target_ok) +
                "/10, exogenous corruption after t unchanged in " + std::to_string(exog_ok) + "/10"};
}

// 5. Planted signal: the augmented variants do not lose to the decomposition-only model.
Outcome variant_ordering() {
    const auto t0 = Clock::now();
    std::vector<double> original, mr, mrt;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto sig = planted_signal(500 + seed, 200, 8);
        const EvaluationSpan span{saturday(150), saturday(199)};
        for (Variant v : {Variant::Original, Variant::MR, Variant::MRT}) {
            const auto rep = walk_forward(sig.target, {sig.driver}, ordering_config(v), span);
            (v == Variant::Original ? original : v == Variant::MR ? mr : mrt).push_back(rep.horizons[0].rmse);
        }
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    };
    const double mo = median(original), mm = median(mr), mt = median(mrt);
    const double secs = seconds_since(t0);
    return {mt <= mo && mm <= mo && secs < 120.0,
            "20 seeds, nowcast median RMSE: Original " + fmt("%.4f", mo) + ", MR " + fmt("%.4f", mm) + ", MRT " +
                fmt("%.4f", mt) + " (both must be <= Original), " + fmt("%.1f", secs) + " s (< 120 s)"};
}

// 6. rmse >= mae, equality iff equal absolute errors, absolute homogeneity.
Outcome metric_identities() {
    std::mt19937_64 rng(606);
    std::uniform_int_distribution<std::size_t> pick_n(1, 40);
    std::normal_distribution<double> g(0.0, 10.0);
    std::bernoulli_distribution equal_case(0.3), flip(0.5);
    std::size_t violations = 0;
    for (int c = 0; c < 1000; ++c) {
        const std::size_t n = pick_n(rng);
        std::vector<double> y(n), yhat(n);
        const bool equal = equal_case(rng) || n == 1;
        const double a = std::abs(g(rng)) + 0.1;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = g(rng);
            yhat[i] = equal ? y[i] + (flip(rng) ? a : -a) : y[i] + g(rng);
        }
        const double r = rmse(yhat, y), m = mae(yhat, y);
        // equality is judged within 1e-12, so rounding below mae in the equal-error case is equality
        const double eq_tol = 1e-12 * std::max(1.0, r);
        if (r < m - eq_tol) ++violations;
        double lo = INFINITY, hi = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            lo = std::min(lo, std::abs(yhat[i] - y[i]));
            hi = std::max(hi, std::abs(yhat[i] - y[i]));
        }
        const bool errors_equal = hi - lo <= 1e-12 * std::max(1.0, hi);
        const bool metrics_equal = std::abs(r - m) <= eq_tol;
        if (errors_equal != metrics_equal) ++violations;
        const double k = g(rng);
        std::vector<double> ys(n), yhats(n);
        for (std::size_t i = 0; i < n; ++i) {
            ys[i] = k * y[i];
            yhats[i] = k * yhat[i];
        }
        if (std::abs(rmse(yhats, ys) - std::abs(k) * r) > 1e-9 * std::max(1.0, std::abs(k) * r)) ++violations;
        if (std::abs(mae(yhats, ys) - std::abs(k) * m) > 1e-9 * std::max(1.0, std::abs(k) * m)) ++violations;
    }
    return {violations == 0, "1000 random cases, " + std::to_string(violations) + " violations"};
}

// 7. Feature census on the checked-in fixture experiment.
Outcome column_count_identity() {
    const auto cfg = cli::load_experiment_config(fixture_path("backtest/config.json"));
    const auto data = cli::load_data(cfg);
    const std::size_t q = data.filtered.kept.size();
    std::string detail;
    bool ok = true;
    for (Variant v : {Variant::Original, Variant::MR, Variant::OriginalG, Variant::MRT}) {
        const ModelConfig m = cli::model_for(cfg, data, v);
        const std::size_t ops = m.operator_specs.size();
        const bool with_ops = v == Variant::MR || v == Variant::MRT;
        const bool with_exog = v == Variant::OriginalG || v == Variant::MRT;
        const std::size_t expected = 2 * m.lags_K + (with_ops ? ops : 0) + (with_exog ? q : 0);
        const auto fm = build_feature_matrix(data.target, data.filtered.kept, 0, m, cfg.evaluation.start,
                                             cfg.evaluation.end, RowMode::Training);
        ok = ok && fm.X.cols() == expected;
        detail += std::string(to_string(v)) + " " + std::to_string(fm.X.cols()) + "/" + std::to_string(expected) + "  ";
    }
    return {ok, detail + "(K = 8, 2 operators, q = " + std::to_string(q) + ")"};
}

// 8. Two warm-cache backtests write byte-identical files.
Outcome end_to_end_determinism() {
    const auto dir = scratch_dir("accept_e2e");
    for (const char* f : {"claims.csv", "trends.csv", "sparse.csv"})
        spit(dir / f, read_fixture(std::string("backtest/") + f));
    auto cfg = nlohmann::json::parse(read_fixture("backtest/config.json"));
    cfg["exogenous"].push_back({{"name", "tw_unemployment_rate"}, {"source", "storywrangler"}, {"term", "unemployment rate"}});
    cfg["storywrangler"] = {{"cache_dir", "cache"}};
    cfg["jobs"] = 2;
    spit(dir / "config.json", cfg.dump(2));

    std::size_t requests = 0;
    {
        StubServer server;
        server.handle("/api/ngrams/2grams/(.+)", [&](const httplib::Request& req, httplib::Response& res) {
            ++requests;
            const auto start = TimeStamp::parse(req.get_param_value("start"));
            const auto end = TimeStamp::parse(req.get_param_value("end"));
            std::mt19937_64 rng(808);
            std::normal_distribution<double> g(0.0, 1e-7);
            nlohmann::json data = nlohmann::json::array();
            for (TimeStamp t = start; t <= end; t = t.plus_days(1))
                data.push_back({{"date", t.to_string()}, {"freq", 2e-6 + std::abs(g(rng))}, {"count", 1}, {"rank", 9}});
            res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
        });
        server.start();
        ::setenv(kStorywranglerUrlEnv, server.url().c_str(), 1);
        const auto warm = run_cli({"backtest", "--config", (dir / "config.json").string(), "--out-dir",
                                   (dir / "run0").string()}, dir);
        ::unsetenv(kStorywranglerUrlEnv);
        if (warm.exit_code != 0) return {false, "cache-warming run failed: " + warm.err};
    }
    // The stub is gone: both runs below can only be served from the cache.
    ::setenv(kStorywranglerUrlEnv, "http://127.0.0.1:9", 1);
    const auto a = run_cli({"backtest", "--config", (dir / "config.json").string(), "--seed", "11", "--out-dir", (dir / "run1").string()}, dir);
    const auto b = run_cli({"backtest", "--config", (dir / "config.json").string(), "--seed", "11", "--out-dir", (dir / "run2").string()}, dir);
    ::unsetenv(kStorywranglerUrlEnv);
    if (a.exit_code != 0 || b.exit_code != 0) return {false, "warm-cache run failed: " + a.err + b.err};
    std::size_t files = 0, identical = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / "run1")) {
        ++files;
        identical += slurp(e.path()) == slurp(dir / "run2" / e.path().filename());
    }
    std::filesystem::remove_all(dir);
    return {files == 6 && identical == files && requests == 1,
            std::to_string(identical) + "/" + std::to_string(files) + " output files byte-identical, " +
                std::to_string(requests) + " network request (cache warm-up only)"};
}

// 9. Random byte mutations never escape the structured error type.
Outcome parser_fuzz() {
    struct Target {
        std::string fixture;
        std::function<TimeSeries(const std::string&)> parse;
    };
    const std::vector<Target> targets{
        {"claims.csv", [](const std::string& b) { return parse_claims_csv(b); }},
        {"oecd_cci.csv", [](const std::string& b) { return parse_oecd_cci_csv(b, "FRA"); }},
        {"gtrends.csv", [](const std::string& b) { return parse_gtrends_csv(b, "unemployment"); }},
        {"series.csv", [](const std::string& b) { return parse_series_csv(b); }},
        {"backtest/claims.csv", [](const std::string& b) { return parse_claims_csv(b); }},
        {"backtest/trends.csv", [](const std::string& b) { return parse_gtrends_csv(b, "unemployment benefits"); }},
        {"backtest/sparse.csv", [](const std::string& b) { return parse_series_csv(b); }},
    };
    static const std::vector<std::string> tokens{",", "\"", "\n", "\r\n", ".", "<1", "-", "101", "1e308", "nan",
                                                 "2020-02-30", "9999-01-01", "\xEF\xBB\xBF", std::string(1, '\0')};
    std::mt19937_64 rng(909);
    std::size_t errors = 0, valid = 0, escaped = 0, invalid_series = 0;
    for (const auto& t : targets) {
        const std::string base = read_fixture(t.fixture);
        for (int k = 0; k < 10000; ++k) {
            std::string s = base;
            const int edits = 1 + static_cast<int>(rng() % 4);
            for (int e = 0; e < edits && !s.empty(); ++e) {
                const std::size_t pos = rng() % s.size();
                switch (rng() % 5) {
                    case 0: s[pos] = static_cast<char>(rng() & 0xFF); break;
                    case 1: s.insert(pos, 1, static_cast<char>(rng() & 0xFF)); break;
                    case 2: s.erase(pos, 1 + rng() % 8); break;
                    case 3: s.insert(pos, tokens[rng() % tokens.size()]); break;
                    default: s.insert(pos, s.substr(rng() % s.size(), rng() % 64)); break;
                }
            }
            try {
                const TimeSeries ts = t.parse(s);
                bool ok = !ts.empty();
                for (std::size_t i = 0; i < ts.size() && ok; ++i) ok = !ts[i] || std::isfinite(*ts[i]);
                ok = ok && on_grid(ts.start(), ts.freq());
                ++valid;
                invalid_series += !ok;
            } catch (const Error&) {
                ++errors;
            } catch (...) {
                ++escaped;
            }
        }
    }
    return {escaped == 0 && invalid_series == 0,
            std::to_string(targets.size()) + " fixtures x 10000 mutations: " + std::to_string(valid) + " valid series, " +
                std::to_string(errors) + " structured errors, " + std::to_string(escaped) + " other exceptions, " +
                std::to_string(invalid_series) + " invariant breaches"};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
        {"LASSO-oracle equivalence", lasso_oracle},
        {"KKT suite", kkt_suite},
        {"Decomposition recovery", decomposition_recovery},
        {"No-look-ahead", no_look_ahead},
        {"Variant ordering on planted signal", variant_ordering},
        {"Metric identities", metric_identities},
        {"Column-count identity", column_count_identity},
        {"End-to-end determinism", end_to_end_determinism},
        {"Parser totality fuzz", parser_fuzz},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
