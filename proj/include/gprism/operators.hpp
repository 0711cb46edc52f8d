#pragma once

#include <charconv>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gprism/decomposition.hpp"
#include "gprism/error.hpp"
#include "gprism/series.hpp"

namespace gprism {

enum class OperatorKind { MovingAverage, MovingAverageSafe, RateOfChange, RateOfChangeSafe, SeasonalFeature };
enum class SeasonalPart { Gamma, Z };

[[nodiscard]] constexpr std::string_view to_string(OperatorKind k) noexcept {
    switch (k) {
        case OperatorKind::MovingAverage: return "MovingAverage";
        case OperatorKind::MovingAverageSafe: return "MovingAverageSafe";
        case OperatorKind::RateOfChange: return "RateOfChange";
        case OperatorKind::RateOfChangeSafe: return "RateOfChangeSafe";
        case OperatorKind::SeasonalFeature: return "SeasonalFeature";
    }
    return "Unknown";
}

inline constexpr double kZeroBaselineThreshold = 1e-12;

// Window functions. Each takes the length-k window oldest-first.

[[nodiscard]] inline double moving_average_window(std::span<const double> x) {
    if (x.empty()) throw Error(ErrorCode::InvalidArgument, "moving average of an empty window");
    double sum = 0.0;
    for (double v : x) sum += v;
    return sum / static_cast<double>(x.size());
}

/// Mean of all but the final (contemporaneous) entry.
[[nodiscard]] inline double moving_average_window_safe(std::span<const double> x) {
    if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "safe moving average needs k >= 2");
    return moving_average_window(x.first(x.size() - 1));
}

[[nodiscard]] inline double rate_of_change_window(std::span<const double> x) {
    if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "rate of change needs k >= 2");
    if (std::abs(x.front()) < kZeroBaselineThreshold) {
        throw Error(ErrorCode::ZeroBaseline, "window baseline is zero");
    }
    return (x.back() - x.front()) / x.front();
}

/// (x[k-2] - x[0]) / x[0]; the final entry is never read.
[[nodiscard]] inline double rate_of_change_window_safe(std::span<const double> x) {
    if (x.size() < 3) throw Error(ErrorCode::InvalidArgument, "safe rate of change needs k >= 3");
    return rate_of_change_window(x.first(x.size() - 1));
}

/// j-th element (1-based) of the gamma or z component of the window's decomposition.
[[nodiscard]] inline double seasonal_feature_window(std::span<const double> x, std::size_t period,
                                                    std::size_t j, SeasonalPart part) {
    if (j < 1 || j > x.size()) {
        throw Error(ErrorCode::InvalidArgument, "element index " + std::to_string(j) +
                    " outside window of " + std::to_string(x.size()));
    }
    const Decomposition d = decompose(x, period);
    return part == SeasonalPart::Gamma ? d.gamma[j - 1] : d.z[j - 1];
}

/// A windowed function together with its window size and kind-specific parameters.
/// Canonical text form: `Kind(k=..)`, or
/// `SeasonalFeature(k=..,period=..,j=..,part=gamma|z)`.
struct OperatorSpec {
    OperatorKind kind = OperatorKind::MovingAverage;
    std::size_t window_k = 2;
    // SeasonalFeature only.
    std::size_t period = 0;
    std::size_t element_index_j = 0;
    SeasonalPart part = SeasonalPart::Gamma;

    static OperatorSpec moving_average(std::size_t k) { return checked({OperatorKind::MovingAverage, k}); }
    static OperatorSpec moving_average_safe(std::size_t k) { return checked({OperatorKind::MovingAverageSafe, k}); }
    static OperatorSpec rate_of_change(std::size_t k) { return checked({OperatorKind::RateOfChange, k}); }
    static OperatorSpec rate_of_change_safe(std::size_t k) { return checked({OperatorKind::RateOfChangeSafe, k}); }
    static OperatorSpec seasonal_feature(std::size_t k, std::size_t period, std::size_t j, SeasonalPart part) {
        return checked({OperatorKind::SeasonalFeature, k, period, j, part});
    }

    void validate() const {
        auto fail = [this](const std::string& why) {
            throw Error(ErrorCode::InvalidOperatorSpec, std::string(gprism::to_string(kind)) + ": " + why);
        };
        if (window_k < 2) fail("window k must be >= 2");
        if (kind == OperatorKind::RateOfChangeSafe && window_k < 3) fail("window k must be >= 3");
        if (kind == OperatorKind::SeasonalFeature) {
            if (period < 2) fail("period must be >= 2");
            if (window_k < 2 * period) fail("window k must be >= 2 * period");
            if (element_index_j < 1 || element_index_j > window_k) fail("j must lie in 1..k");
        }
    }

    /// Evaluates the window function on exactly `window_k` values.
    [[nodiscard]] double evaluate(std::span<const double> window) const {
        if (window.size() != window_k) {
            throw Error(ErrorCode::InvalidArgument, "window has " + std::to_string(window.size()) +
                        " values, operator expects " + std::to_string(window_k));
        }
        switch (kind) {
            case OperatorKind::MovingAverage: return moving_average_window(window);
            case OperatorKind::MovingAverageSafe: return moving_average_window_safe(window);
            case OperatorKind::RateOfChange: return rate_of_change_window(window);
            case OperatorKind::RateOfChangeSafe: return rate_of_change_window_safe(window);
            case OperatorKind::SeasonalFeature:
                return seasonal_feature_window(window, period, element_index_j, part);
        }
        return 0.0;
    }

    /// Variant that never reads the contemporaneous entry. SeasonalFeature has none and
    /// is returned unchanged.
    [[nodiscard]] OperatorSpec safe_variant() const {
        OperatorSpec s = *this;
        if (kind == OperatorKind::MovingAverage) s.kind = OperatorKind::MovingAverageSafe;
        if (kind == OperatorKind::RateOfChange) s.kind = OperatorKind::RateOfChangeSafe;
        s.validate();
        return s;
    }

    [[nodiscard]] std::string to_string() const {
        std::string out = std::string(gprism::to_string(kind)) + "(k=" + std::to_string(window_k);
        if (kind == OperatorKind::SeasonalFeature) {
            out += ",period=" + std::to_string(period) + ",j=" + std::to_string(element_index_j) +
                   ",part=" + (part == SeasonalPart::Gamma ? "gamma" : "z");
        }
        return out + ")";
    }

    static OperatorSpec parse(std::string_view text);

    friend bool operator==(const OperatorSpec&, const OperatorSpec&) = default;

private:
    static OperatorSpec checked(OperatorSpec s) {
        s.validate();
        return s;
    }
};

inline OperatorSpec OperatorSpec::parse(std::string_view text) {
    auto fail = [&](const std::string& why) -> OperatorSpec {
        throw Error(ErrorCode::InvalidOperatorSpec, "'" + std::string(text) + "': " + why);
    };
    const auto open = text.find('(');
    if (open == std::string_view::npos || text.empty() || text.back() != ')') return fail("expected Kind(k=..)");

    const std::string_view name = text.substr(0, open);
    OperatorSpec spec;
    if (name == "MovingAverage") spec.kind = OperatorKind::MovingAverage;
    else if (name == "MovingAverageSafe") spec.kind = OperatorKind::MovingAverageSafe;
    else if (name == "RateOfChange") spec.kind = OperatorKind::RateOfChange;
    else if (name == "RateOfChangeSafe") spec.kind = OperatorKind::RateOfChangeSafe;
    else if (name == "SeasonalFeature") spec.kind = OperatorKind::SeasonalFeature;
    else return fail("unknown operator kind");

    std::map<std::string, std::string, std::less<>> params;
    std::string_view body = text.substr(open + 1, text.size() - open - 2);
    while (!body.empty()) {
        const auto comma = body.find(',');
        const std::string_view item = body.substr(0, comma);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0) return fail("malformed parameter");
        if (!params.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1))).second)
            return fail("duplicate parameter");
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
        if (body.empty()) return fail("trailing comma");
    }

    auto take_count = [&](std::string_view key) -> std::size_t {
        const auto it = params.find(key);
        if (it == params.end()) fail("missing parameter " + std::string(key));
        std::size_t v = 0;
        const auto& s = it->second;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) fail("bad count for " + std::string(key));
        params.erase(it);
        return v;
    };

    spec.window_k = take_count("k");
    if (spec.kind == OperatorKind::SeasonalFeature) {
        spec.period = take_count("period");
        spec.element_index_j = take_count("j");
        const auto it = params.find("part");
        if (it == params.end()) return fail("missing parameter part");
        if (it->second == "gamma") spec.part = SeasonalPart::Gamma;
        else if (it->second == "z") spec.part = SeasonalPart::Z;
        else return fail("part must be gamma or z");
        params.erase(it);
    }
    if (!params.empty()) return fail("unexpected parameter " + params.begin()->first);
    spec.validate();
    return spec;
}

/// Series produced by an operator: the first `transient_len` entries are missing.
struct OperatorOutput {
    TimeSeries series;
    std::size_t transient_len = 0;
};

/// Rolls the operator's window function over `s`: output position i (0-based) holds
/// f(s[i-k+1..i]) for i >= k-1 and a missing marker before that.
[[nodiscard]] inline OperatorOutput apply_operator(const OperatorSpec& spec, const TimeSeries& s) {
    spec.validate();
    const std::size_t k = spec.window_k;
    if (s.size() < k) {
        throw Error(ErrorCode::SeriesTooShort, "'" + s.name() + "' has " + std::to_string(s.size()) +
                    " points, operator needs " + std::to_string(k));
    }
    std::vector<double> y(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s[i]) {
            throw Error(ErrorCode::MissingInWindow, "'" + s.name() + "' is missing " + s.timestamp(i).to_string());
        }
        y[i] = *s[i];
    }
    std::vector<Value> out(s.size());
    const std::span<const double> all(y);
    for (std::size_t i = k - 1; i < y.size(); ++i) out[i] = spec.evaluate(all.subspan(i + 1 - k, k));
    return {TimeSeries(s.name() + ":" + spec.to_string(), s.freq(), s.start(), std::move(out)), k - 1};
}

}  // namespace gprism
