#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gprism/error.hpp"
#include "gprism/series.hpp"

namespace gprism {

inline constexpr double kDefaultMaxMissingFraction = 0.2;

struct MissingRateEntry {
    std::string name;
    double missing_fraction = 0.0;
    std::size_t missing = 0;
    std::size_t total = 0;
    bool kept = false;
};

struct FilterResult {
    std::vector<TimeSeries> kept;
    std::vector<MissingRateEntry> manifest;  // one entry per input, input order
};

/// Missing count over the grid points of `s` inside `span` (inclusive). Points outside
/// the series count as missing. Without a span the series' own extent is used.
[[nodiscard]] inline MissingRateEntry missing_rate(const TimeSeries& s, const std::optional<DateRange>& span) {
    MissingRateEntry e{s.name()};
    if (!span) {
        e.total = s.size();
        e.missing = s.missing_count();
    } else {
        TimeStamp t = span->start;
        if (s.freq() == Frequency::WeeklyEndingSaturday) t = week_ending_saturday(t);
        if (s.freq() == Frequency::Monthly && !on_grid(t, s.freq())) t = advance(first_of_month(t), s.freq(), 1);
        for (; t <= span->end; t = advance(t, s.freq(), 1)) {
            ++e.total;
            if (!s.at(t)) ++e.missing;
        }
    }
    e.missing_fraction = e.total == 0 ? 1.0 : static_cast<double>(e.missing) / static_cast<double>(e.total);
    return e;
}

/// Keeps series whose missing fraction is at most `max_missing_fraction`.
[[nodiscard]] inline FilterResult filter_by_missing_rate(const std::vector<TimeSeries>& series,
                                                         double max_missing_fraction,
                                                         const std::optional<DateRange>& span = std::nullopt) {
    if (!(max_missing_fraction >= 0.0 && max_missing_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "max_missing_fraction must lie in [0, 1]");
    }
    FilterResult out;
    for (const auto& s : series) {
        MissingRateEntry e = missing_rate(s, span);
        e.kept = e.missing_fraction <= max_missing_fraction;
        if (e.kept) out.kept.push_back(s);
        out.manifest.push_back(std::move(e));
    }
    return out;
}

}  // namespace gprism
