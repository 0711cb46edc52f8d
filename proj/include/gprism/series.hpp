#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gprism/error.hpp"

namespace gprism {

/// Calendar date with day resolution.
class TimeStamp {
public:
    constexpr TimeStamp() = default;
    constexpr explicit TimeStamp(std::chrono::sys_days days) : days_(days) {}

    static TimeStamp from_ymd(int year, unsigned month, unsigned day) {
        const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                              std::chrono::day{day}};
        if (!ymd.ok()) {
            throw Error(ErrorCode::InvalidArgument, "invalid calendar date " +
                        std::to_string(year) + "-" + std::to_string(month) + "-" +
                        std::to_string(day));
        }
        return TimeStamp(std::chrono::sys_days{ymd});
    }

    /// Strict ISO 8601 `YYYY-MM-DD`; years outside 1800..2200 are rejected.
    static std::optional<TimeStamp> try_parse(std::string_view text) {
        if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
        int y = 0;
        unsigned m = 0, d = 0;
        auto digits = [](std::string_view s) {
            return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
        };
        if (!digits(text.substr(0, 4)) || !digits(text.substr(5, 2)) || !digits(text.substr(8, 2)))
            return std::nullopt;
        std::from_chars(text.data(), text.data() + 4, y);
        std::from_chars(text.data() + 5, text.data() + 7, m);
        std::from_chars(text.data() + 8, text.data() + 10, d);
        if (y < 1800 || y > 2200) return std::nullopt;
        const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                              std::chrono::day{d}};
        if (!ymd.ok()) return std::nullopt;
        return TimeStamp(std::chrono::sys_days{ymd});
    }

    static TimeStamp parse(std::string_view text) {
        if (auto ts = try_parse(text)) return *ts;
        throw Error(ErrorCode::InvalidArgument, "not an ISO date: '" + std::string(text) + "'");
    }

    [[nodiscard]] constexpr std::chrono::sys_days days() const noexcept { return days_; }
    [[nodiscard]] constexpr std::chrono::year_month_day ymd() const noexcept {
        return std::chrono::year_month_day{days_};
    }
    [[nodiscard]] std::chrono::weekday weekday() const noexcept {
        return std::chrono::weekday{days_};
    }

    [[nodiscard]] std::string to_string() const {
        const auto ymd = this->ymd();
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        return buf;
    }

    [[nodiscard]] constexpr TimeStamp plus_days(std::int64_t n) const noexcept {
        return TimeStamp(days_ + std::chrono::days{n});
    }

    friend constexpr auto operator<=>(const TimeStamp&, const TimeStamp&) = default;

private:
    std::chrono::sys_days days_{};
};

enum class Frequency { Daily, WeeklyEndingSaturday, Monthly };

[[nodiscard]] constexpr std::string_view to_string(Frequency f) noexcept {
    switch (f) {
        case Frequency::Daily: return "daily";
        case Frequency::WeeklyEndingSaturday: return "weekly";
        case Frequency::Monthly: return "monthly";
    }
    return "unknown";
}

[[nodiscard]] inline std::optional<Frequency> parse_frequency(std::string_view s) {
    if (s == "daily") return Frequency::Daily;
    if (s == "weekly") return Frequency::WeeklyEndingSaturday;
    if (s == "monthly") return Frequency::Monthly;
    return std::nullopt;
}

/// Saturday closing the Sunday..Saturday week that contains `ts`.
[[nodiscard]] inline TimeStamp week_ending_saturday(TimeStamp ts) {
    const unsigned wd = ts.weekday().c_encoding();  // Sunday = 0
    return ts.plus_days(6 - static_cast<std::int64_t>(wd));
}

[[nodiscard]] inline TimeStamp first_of_month(TimeStamp ts) {
    const auto ymd = ts.ymd();
    return TimeStamp(std::chrono::sys_days{ymd.year() / ymd.month() / std::chrono::day{1}});
}

[[nodiscard]] inline bool on_grid(TimeStamp ts, Frequency f) {
    switch (f) {
        case Frequency::Daily: return true;
        case Frequency::WeeklyEndingSaturday: return ts.weekday() == std::chrono::Saturday;
        case Frequency::Monthly: return ts.ymd().day() == std::chrono::day{1};
    }
    return false;
}

/// Moves `n` steps along the frequency grid. `ts` must already be on the grid.
[[nodiscard]] inline TimeStamp advance(TimeStamp ts, Frequency f, std::int64_t n) {
    switch (f) {
        case Frequency::Daily: return ts.plus_days(n);
        case Frequency::WeeklyEndingSaturday: return ts.plus_days(7 * n);
        case Frequency::Monthly: {
            const auto ymd = ts.ymd();
            const auto moved = std::chrono::year_month{ymd.year(), ymd.month()} +
                               std::chrono::months{n};
            return TimeStamp(std::chrono::sys_days{moved / std::chrono::day{1}});
        }
    }
    return ts;
}

/// Signed number of grid steps from `from` to `to`; both must be on the grid.
[[nodiscard]] inline std::int64_t steps_between(TimeStamp from, TimeStamp to, Frequency f) {
    switch (f) {
        case Frequency::Daily: return (to.days() - from.days()).count();
        case Frequency::WeeklyEndingSaturday: return (to.days() - from.days()).count() / 7;
        case Frequency::Monthly: {
            const auto a = from.ymd(), b = to.ymd();
            return (static_cast<int>(b.year()) - static_cast<int>(a.year())) * 12 +
                   (static_cast<int>(static_cast<unsigned>(b.month())) -
                    static_cast<int>(static_cast<unsigned>(a.month())));
        }
    }
    return 0;
}

/// Inclusive calendar range.
struct DateRange {
    TimeStamp start;
    TimeStamp end;
};

/// An observation; `std::nullopt` is the missing marker.
using Value = std::optional<double>;

/// Regularly sampled series: consecutive grid timestamps starting at `start`,
/// gaps carried as explicit missing values. Immutable once constructed.
class TimeSeries {
public:
    TimeSeries() = default;

    TimeSeries(std::string name, Frequency freq, TimeStamp start, std::vector<Value> values)
        : name_(std::move(name)), freq_(freq), start_(start), values_(std::move(values)) {
        if (!on_grid(start_, freq_)) {
            throw Error(ErrorCode::InvalidArgument, "start " + start_.to_string() +
                        " is not on the " + std::string(to_string(freq_)) + " grid");
        }
        for (const auto& v : values_) {
            if (v && !std::isfinite(*v)) {
                throw Error(ErrorCode::NonFiniteInput, "series '" + name_ + "' has a non-finite value");
            }
        }
    }

    /// Convenience for gapless data.
    static TimeSeries from_values(std::string name, Frequency freq, TimeStamp start,
                                  std::span<const double> values) {
        std::vector<Value> v(values.begin(), values.end());
        return TimeSeries(std::move(name), freq, start, std::move(v));
    }

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] Frequency freq() const noexcept { return freq_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] bool empty() const noexcept { return values_.empty(); }
    [[nodiscard]] TimeStamp start() const noexcept { return start_; }
    /// Last timestamp; undefined for an empty series.
    [[nodiscard]] TimeStamp last() const { return timestamp(values_.size() - 1); }
    [[nodiscard]] TimeStamp timestamp(std::size_t i) const {
        return advance(start_, freq_, static_cast<std::int64_t>(i));
    }
    [[nodiscard]] const Value& operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] const std::vector<Value>& values() const noexcept { return values_; }

    /// Offset of `ts` relative to start (may be negative or past the end).
    [[nodiscard]] std::int64_t offset_of(TimeStamp ts) const {
        if (!on_grid(ts, freq_)) {
            throw Error(ErrorCode::InvalidArgument, ts.to_string() + " is not on the " +
                        std::string(to_string(freq_)) + " grid");
        }
        return steps_between(start_, ts, freq_);
    }

    /// Value at `ts`, or missing when `ts` falls outside the series.
    [[nodiscard]] Value at(TimeStamp ts) const {
        const auto off = offset_of(ts);
        if (off < 0 || off >= static_cast<std::int64_t>(values_.size())) return std::nullopt;
        return values_[static_cast<std::size_t>(off)];
    }

    [[nodiscard]] std::size_t missing_count() const noexcept {
        return static_cast<std::size_t>(
            std::count_if(values_.begin(), values_.end(), [](const Value& v) { return !v; }));
    }

    [[nodiscard]] std::vector<TimeStamp> timestamps() const {
        std::vector<TimeStamp> out;
        out.reserve(values_.size());
        for (std::size_t i = 0; i < values_.size(); ++i) out.push_back(timestamp(i));
        return out;
    }

    [[nodiscard]] TimeSeries renamed(std::string name) const {
        TimeSeries copy = *this;
        copy.name_ = std::move(name);
        return copy;
    }

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    std::string name_;
    Frequency freq_ = Frequency::Daily;
    TimeStamp start_{};
    std::vector<Value> values_;
};

enum class AlignPolicy { Inner, Left };

/// Puts every series on one common timestamp vector.
[[nodiscard]] inline std::vector<TimeSeries> align(const std::vector<TimeSeries>& series,
                                                   AlignPolicy policy) {
    if (series.empty()) return {};
    const Frequency freq = series.front().freq();
    for (const auto& s : series) {
        if (s.freq() != freq) {
            throw Error(ErrorCode::MixedFrequency, "cannot align '" + series.front().name() +
                        "' with '" + s.name() + "'");
        }
    }

    TimeStamp lo, hi;
    std::int64_t n = 0;
    if (policy == AlignPolicy::Inner) {
        bool any_empty = false;
        for (const auto& s : series) any_empty = any_empty || s.empty();
        if (!any_empty) {
            lo = series.front().start();
            hi = series.front().last();
            for (const auto& s : series) {
                lo = std::max(lo, s.start());
                hi = std::min(hi, s.last());
            }
            n = lo <= hi ? steps_between(lo, hi, freq) + 1 : 0;
        }
        if (n <= 0) throw Error(ErrorCode::EmptyIntersection, "inner alignment has no rows");
    } else {
        const auto& first = series.front();
        if (first.empty()) {
            std::vector<TimeSeries> out;
            for (const auto& s : series) out.emplace_back(s.name(), freq, first.start(), std::vector<Value>{});
            return out;
        }
        lo = first.start();
        n = static_cast<std::int64_t>(first.size());
    }

    std::vector<TimeSeries> out;
    out.reserve(series.size());
    for (const auto& s : series) {
        std::vector<Value> values(static_cast<std::size_t>(n));
        const std::int64_t shift = steps_between(s.start(), lo, freq);
        for (std::int64_t i = 0; i < n; ++i) {
            const std::int64_t src = i + shift;
            if (src >= 0 && src < static_cast<std::int64_t>(s.size())) {
                values[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(src)];
            }
        }
        out.emplace_back(s.name(), freq, lo, std::move(values));
    }
    return out;
}

enum class Aggregation { Sum, Mean };

/// Aggregates a daily series into Sunday..Saturday weeks stamped on the Saturday.
/// Days outside the input span count as missing.
[[nodiscard]] inline TimeSeries resample_daily_to_weekly(const TimeSeries& s, Aggregation agg) {
    if (s.freq() != Frequency::Daily) {
        throw Error(ErrorCode::InvalidArgument, "resample_daily_to_weekly needs a daily series");
    }
    if (s.empty()) {
        return TimeSeries(s.name(), Frequency::WeeklyEndingSaturday, week_ending_saturday(s.start()), {});
    }
    const TimeStamp first_sat = week_ending_saturday(s.start());
    const TimeStamp last_sat = week_ending_saturday(s.last());
    const auto weeks = static_cast<std::size_t>(steps_between(first_sat, last_sat, Frequency::WeeklyEndingSaturday) + 1);

    std::vector<Value> out(weeks);
    for (std::size_t w = 0; w < weeks; ++w) {
        const TimeStamp sunday = first_sat.plus_days(7 * static_cast<std::int64_t>(w) - 6);
        double sum = 0.0;
        int present = 0;
        for (int d = 0; d < 7; ++d) {
            if (const Value v = s.at(sunday.plus_days(d))) {
                sum += *v;
                ++present;
            }
        }
        if (agg == Aggregation::Sum) {
            if (present == 7) out[w] = sum;
        } else if (present >= 4) {
            out[w] = sum / present;
        }
    }
    return TimeSeries(s.name(), Frequency::WeeklyEndingSaturday, first_sat, std::move(out));
}

/// Fills runs of at most `max_gap` missing values with the last preceding value.
/// Leading missing values are never filled.
[[nodiscard]] inline TimeSeries forward_fill(const TimeSeries& s, std::size_t max_gap) {
    std::vector<Value> values = s.values();
    std::size_t i = 0;
    while (i < values.size()) {
        if (values[i] || i == 0 || !values[i - 1]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < values.size() && !values[j]) ++j;
        if (j - i <= max_gap) {
            for (std::size_t k = i; k < j; ++k) values[k] = values[i - 1];
        }
        i = j;
    }
    return TimeSeries(s.name(), s.freq(), s.start(), std::move(values));
}

/// The `length` points immediately preceding `end_exclusive`, all of which must be present.
[[nodiscard]] inline TimeSeries slice_window(const TimeSeries& s, TimeStamp end_exclusive,
                                             std::size_t length) {
    const std::int64_t end = s.offset_of(end_exclusive);
    const std::int64_t begin = end - static_cast<std::int64_t>(length);
    if (begin < 0 || end > static_cast<std::int64_t>(s.size())) {
        throw Error(ErrorCode::InsufficientHistory, "'" + s.name() + "' lacks " +
                    std::to_string(length) + " points before " + end_exclusive.to_string());
    }
    std::vector<Value> values(s.values().begin() + begin, s.values().begin() + end);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i]) {
            throw Error(ErrorCode::InsufficientHistory, "'" + s.name() + "' is missing " +
                        s.timestamp(static_cast<std::size_t>(begin) + i).to_string() +
                        " inside the window before " + end_exclusive.to_string());
        }
    }
    return TimeSeries(s.name(), s.freq(), s.timestamp(static_cast<std::size_t>(begin)), std::move(values));
}

/// Present values of a series known to be gapless.
[[nodiscard]] inline std::vector<double> dense_values(const TimeSeries& s) {
    std::vector<double> out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s[i]) {
            throw Error(ErrorCode::MissingInWindow, "'" + s.name() + "' is missing " +
                        s.timestamp(i).to_string());
        }
        out.push_back(*s[i]);
    }
    return out;
}

}  // namespace gprism
