#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gprism/error.hpp"
#include "gprism/lasso.hpp"
#include "gprism/operators.hpp"
#include "gprism/series.hpp"

namespace gprism {

/// The four model families compared in backtests: decomposition lags only (Original),
/// plus target operators (MR), plus exogenous signals (OriginalG), or both (MRT).
enum class Variant { Original, MR, OriginalG, MRT };

[[nodiscard]] constexpr std::string_view to_string(Variant v) noexcept {
    switch (v) {
        case Variant::Original: return "Original";
        case Variant::MR: return "MR";
        case Variant::OriginalG: return "OriginalG";
        case Variant::MRT: return "MRT";
    }
    return "Unknown";
}

[[nodiscard]] inline std::optional<Variant> parse_variant(std::string_view s) {
    if (s == "Original" || s == "original") return Variant::Original;
    if (s == "MR" || s == "mr") return Variant::MR;
    if (s == "OriginalG" || s == "original/G" || s == "original/g") return Variant::OriginalG;
    if (s == "MRT" || s == "MR/T" || s == "mr/t") return Variant::MRT;
    return std::nullopt;
}

[[nodiscard]] constexpr bool uses_operators(Variant v) noexcept { return v == Variant::MR || v == Variant::MRT; }
[[nodiscard]] constexpr bool uses_exogenous(Variant v) noexcept { return v == Variant::OriginalG || v == Variant::MRT; }

struct LassoSettings {
    std::size_t folds = 5;
    std::size_t n_lambdas = 50;
    double eps_ratio = 1e-3;
    double tol = 1e-7;
    std::size_t max_iters = 100000;
    LambdaRule rule = LambdaRule::OneStandardError;

    [[nodiscard]] LassoOptions options() const { return {tol, max_iters, false}; }
};

struct ModelConfig {
    std::size_t window_M = 156;  // decomposition window
    std::size_t lags_K = 52;     // decomposed lags entering the regression
    std::size_t period = 52;
    std::vector<std::size_t> horizons{0, 1, 2, 3};
    std::vector<OperatorSpec> operator_specs;
    std::vector<std::string> exogenous_names;
    LassoSettings lasso;
    Variant variant = Variant::Original;
    /// Most recent training rows kept at each retrain; nullopt is an expanding window.
    std::optional<std::size_t> sliding_window;
    std::size_t jobs = 1;

    /// 52/156 for weekly targets, 12/36 for monthly ones.
    static ModelConfig defaults_for(Frequency freq) {
        ModelConfig cfg;
        if (freq == Frequency::Monthly) {
            cfg.period = 12;
            cfg.window_M = 36;
            cfg.lags_K = 12;
        }
        return cfg;
    }

    [[nodiscard]] std::vector<OperatorSpec> effective_operators() const {
        std::vector<OperatorSpec> out;
        if (!uses_operators(variant)) return out;
        for (const auto& s : operator_specs) out.push_back(s.safe_variant());
        return out;
    }

    [[nodiscard]] std::vector<std::string> effective_exogenous() const {
        return uses_exogenous(variant) ? exogenous_names : std::vector<std::string>{};
    }

    /// 2K + |operators| * [MR or MRT] + q * [OriginalG or MRT]
    [[nodiscard]] std::size_t feature_count() const {
        return 2 * lags_K + effective_operators().size() + effective_exogenous().size();
    }

    void validate() const {
        auto fail = [](const std::string& why) { throw Error(ErrorCode::ConfigError, why); };
        if (period < 2) fail("period must be >= 2");
        if (window_M < 2 * period) fail("window M must cover at least two periods");
        if (lags_K < 1 || lags_K > window_M) fail("lag count K must lie in 1..M");
        if (horizons.empty()) fail("at least one horizon is required");
        if (lasso.folds < 2) fail("lasso folds must be >= 2");
        if (lasso.n_lambdas < 2) fail("n_lambdas must be >= 2");
        if (!(lasso.eps_ratio > 0.0 && lasso.eps_ratio < 1.0)) fail("eps_ratio must lie in (0, 1)");
        if (!(lasso.tol > 0.0)) fail("tol must be positive");
        if (sliding_window && *sliding_window < 2 * lasso.folds) fail("sliding window too short for the fold count");
        if (jobs < 1) fail("jobs must be >= 1");
        for (const auto& s : operator_specs) s.validate();
        if (uses_exogenous(variant) && exogenous_names.empty()) {
            fail(std::string(to_string(variant)) + " needs at least one exogenous series");
        }
    }
};

}  // namespace gprism
