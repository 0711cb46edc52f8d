#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "gprism/error.hpp"
#include "gprism/ingest/csv.hpp"
#include "gprism/series.hpp"

namespace gprism {

enum class SourceKind { ClaimsCsv, OecdCci, GTrendsCsv, Storywrangler };

/// One observation as read from a source, before grid assembly.
struct RawRecord {
    SourceKind source = SourceKind::ClaimsCsv;
    std::string label;
    TimeStamp date;
    Value value;
};

namespace detail {

/// Places dated records on the grid of `freq`. Dates must be strictly increasing once
/// snapped; grid points without a record become missing.
inline TimeSeries assemble(const std::string& name, Frequency freq, const std::vector<RawRecord>& recs,
                           const std::vector<std::size_t>& lines) {
    if (recs.empty()) throw Error(ErrorCode::MalformedCsv, "no data rows for '" + name + "'");
    for (std::size_t r = 1; r < recs.size(); ++r) {
        if (!(recs[r - 1].date < recs[r].date)) {
            throw Error(ErrorCode::NonMonotoneDates, recs[r].date.to_string() + " does not follow " +
                        recs[r - 1].date.to_string(), lines[r]);
        }
    }
    const TimeStamp start = recs.front().date;
    const auto n = static_cast<std::size_t>(steps_between(start, recs.back().date, freq) + 1);
    std::vector<Value> values(n);
    for (const auto& rec : recs) values[static_cast<std::size_t>(steps_between(start, rec.date, freq))] = rec.value;
    return TimeSeries(name, freq, start, std::move(values));
}

inline TimeStamp parse_date_field(std::string_view s, std::size_t line) {
    if (auto ts = TimeStamp::try_parse(csv::trim(s))) return *ts;
    throw Error(ErrorCode::MalformedCsv, "bad date '" + std::string(s) + "'", line);
}

inline bool is_missing_token(std::string_view s) {
    s = csv::trim(s);
    return s.empty() || s == ".";
}

}  // namespace detail

/// FRED-style claims file: a header row, then DATE,VALUE rows. "." or an empty value is
/// missing; values must be non-negative integers. Dates snap to the week-ending Saturday.
[[nodiscard]] inline TimeSeries parse_claims_csv(std::string_view bytes, const std::string& name = "claims") {
    const auto rows = csv::parse(bytes);
    std::size_t r = 0;
    while (r < rows.size() && rows[r].blank()) ++r;
    if (r == rows.size()) throw Error(ErrorCode::MalformedCsv, "empty claims file", 1);
    if (rows[r].fields.size() != 2) {
        throw Error(ErrorCode::MalformedCsv, "claims header must have 2 columns", rows[r].line);
    }
    if (csv::lower(rows[r].fields[0]).find("date") == std::string::npos) {
        throw Error(ErrorCode::MalformedCsv, "first header column must be a date column", rows[r].line);
    }
    std::vector<RawRecord> recs;
    std::vector<std::size_t> lines;
    for (++r; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.blank()) continue;
        if (row.fields.size() != 2) {
            throw Error(ErrorCode::MalformedCsv, "expected 2 fields, found " + std::to_string(row.fields.size()),
                        row.line);
        }
        RawRecord rec{SourceKind::ClaimsCsv, name, week_ending_saturday(detail::parse_date_field(row.fields[0], row.line)),
                      std::nullopt};
        if (!detail::is_missing_token(row.fields[1])) {
            const auto v = csv::parse_double(csv::trim(row.fields[1]));
            if (!v || *v < 0.0 || *v != std::floor(*v)) {
                throw Error(ErrorCode::MalformedCsv, "claims value '" + row.fields[1] +
                            "' is not a non-negative integer", row.line);
            }
            rec.value = *v;
        }
        recs.push_back(std::move(rec));
        lines.push_back(row.line);
    }
    return detail::assemble(name, Frequency::WeeklyEndingSaturday, recs, lines);
}

/// OECD long-format export; columns located by the LOCATION, TIME (YYYY-MM) and Value
/// headers, other columns ignored.
[[nodiscard]] inline TimeSeries parse_oecd_cci_csv(std::string_view bytes, const std::string& location_code) {
    const auto rows = csv::parse(bytes);
    std::size_t r = 0;
    while (r < rows.size() && rows[r].blank()) ++r;
    if (r == rows.size()) throw Error(ErrorCode::MalformedCsv, "empty OECD file", 1);
    const auto& header = rows[r].fields;
    std::size_t loc = header.size(), time = header.size(), val = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string h = csv::lower(csv::trim(header[c]));
        if (h == "location") loc = c;
        else if (h == "time") time = c;
        else if (h == "value") val = c;
    }
    if (loc == header.size() || time == header.size() || val == header.size()) {
        throw Error(ErrorCode::MalformedCsv, "header lacks LOCATION, TIME or Value", rows[r].line);
    }
    std::vector<RawRecord> recs;
    std::vector<std::size_t> lines;
    for (++r; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.blank()) continue;
        if (row.fields.size() != header.size()) {
            throw Error(ErrorCode::MalformedCsv, "expected " + std::to_string(header.size()) + " fields, found " +
                        std::to_string(row.fields.size()), row.line);
        }
        if (csv::trim(row.fields[loc]) != location_code) continue;
        const std::string_view t = csv::trim(row.fields[time]);
        const auto ts = t.size() == 7 ? TimeStamp::try_parse(std::string(t) + "-01") : std::nullopt;
        if (!ts) throw Error(ErrorCode::MalformedCsv, "bad month '" + std::string(t) + "'", row.line);
        RawRecord rec{SourceKind::OecdCci, location_code, *ts, std::nullopt};
        if (!detail::is_missing_token(row.fields[val])) {
            const auto v = csv::parse_double(csv::trim(row.fields[val]));
            if (!v) throw Error(ErrorCode::MalformedCsv, "bad value '" + row.fields[val] + "'", row.line);
            rec.value = *v;
        }
        recs.push_back(std::move(rec));
        lines.push_back(row.line);
    }
    if (recs.empty()) throw Error(ErrorCode::UnknownLocation, "location '" + location_code + "' not in file");
    return detail::assemble("CCI:" + location_code, Frequency::Monthly, recs, lines);
}

/// Score used for Google Trends' "<1" token (midpoint of the censored interval).
inline constexpr double kTrendsBelowOne = 0.5;

/// Google Trends export: free-form preamble, then a `Week,<term>: (<geo>),...` header and
/// date,score rows. Weeks are stamped on the Saturday closing the week that contains the
/// row's date. `term` selects the column (case-insensitive, geo suffix optional).
[[nodiscard]] inline TimeSeries parse_gtrends_csv(std::string_view bytes, const std::string& term,
                                                 double below_one = kTrendsBelowOne) {
    const auto rows = csv::parse(bytes);
    std::size_t r = 0;
    while (r < rows.size() && !(rows[r].fields.size() >= 2 && csv::lower(csv::trim(rows[r].fields[0])) == "week")) ++r;
    if (r == rows.size()) throw Error(ErrorCode::MalformedCsv, "no 'Week' header row found", rows.empty() ? 1 : rows.back().line);
    const auto& header = rows[r].fields;
    const std::string want = csv::lower(csv::trim(term));
    std::size_t col = 0;
    for (std::size_t c = 1; c < header.size() && col == 0; ++c) {
        std::string h = csv::lower(csv::trim(header[c]));
        if (const auto colon = h.find(": ("); colon != std::string::npos) h.resize(colon);
        if (h == want) col = c;
    }
    if (col == 0) throw Error(ErrorCode::MalformedCsv, "term '" + term + "' not in header", rows[r].line);

    std::vector<RawRecord> recs;
    std::vector<std::size_t> lines;
    for (++r; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.blank()) continue;
        if (row.fields.size() != header.size()) {
            throw Error(ErrorCode::MalformedCsv, "expected " + std::to_string(header.size()) + " fields, found " +
                        std::to_string(row.fields.size()), row.line);
        }
        RawRecord rec{SourceKind::GTrendsCsv, term, week_ending_saturday(detail::parse_date_field(row.fields[0], row.line)),
                      std::nullopt};
        const std::string_view s = csv::trim(row.fields[col]);
        if (s == "<1") {
            rec.value = below_one;
        } else if (!s.empty()) {
            const auto v = csv::parse_double(s);
            if (!v) throw Error(ErrorCode::MalformedCsv, "bad score '" + std::string(s) + "'", row.line);
            if (*v < 0.0 || *v > 100.0) {
                throw Error(ErrorCode::ScoreOutOfRange, "score " + std::string(s) + " outside [0, 100]", row.line);
            }
            rec.value = *v;
        }
        recs.push_back(std::move(rec));
        lines.push_back(row.line);
    }
    return detail::assemble(term, Frequency::WeeklyEndingSaturday, recs, lines);
}

/// Canonical series text:
///   name,freq
///   <name>,<daily|weekly|monthly>
///   date,value
///   <YYYY-MM-DD>,<value or empty for missing>
[[nodiscard]] inline std::string write_series_csv(const TimeSeries& s) {
    std::string out = "name,freq\n" + csv::join({s.name(), std::string(to_string(s.freq()))}) + "\ndate,value\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += s.timestamp(i).to_string();
        out += ',';
        if (s[i]) out += csv::format_double(*s[i]);
        out += '\n';
    }
    return out;
}

[[nodiscard]] inline TimeSeries parse_series_csv(std::string_view bytes) {
    const auto rows = csv::parse(bytes);
    auto expect = [&](std::size_t r, std::string_view a, std::string_view b) {
        if (r >= rows.size() || rows[r].fields.size() != 2 || rows[r].fields[0] != a || rows[r].fields[1] != b) {
            throw Error(ErrorCode::MalformedCsv, "expected header '" + std::string(a) + "," + std::string(b) + "'",
                        r < rows.size() ? rows[r].line : (rows.empty() ? 1 : rows.back().line + 1));
        }
    };
    expect(0, "name", "freq");
    if (rows.size() < 2 || rows[1].fields.size() != 2) {
        throw Error(ErrorCode::MalformedCsv, "expected '<name>,<freq>'", rows.size() < 2 ? rows[0].line + 1 : rows[1].line);
    }
    const std::string name = rows[1].fields[0];
    const auto freq = parse_frequency(rows[1].fields[1]);
    if (!freq) throw Error(ErrorCode::MalformedCsv, "unknown frequency '" + rows[1].fields[1] + "'", rows[1].line);
    expect(2, "date", "value");

    std::vector<RawRecord> recs;
    std::vector<std::size_t> lines;
    for (std::size_t r = 3; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() != 2) {
            throw Error(ErrorCode::MalformedCsv, "expected 2 fields, found " + std::to_string(row.fields.size()),
                        row.line);
        }
        const auto ts = TimeStamp::try_parse(row.fields[0]);
        if (!ts || !on_grid(*ts, *freq)) {
            throw Error(ErrorCode::MalformedCsv, "bad " + std::string(to_string(*freq)) + " date '" +
                        row.fields[0] + "'", row.line);
        }
        RawRecord rec{SourceKind::ClaimsCsv, name, *ts, std::nullopt};
        if (!row.fields[1].empty()) {
            const auto v = csv::parse_double(row.fields[1]);
            if (!v) throw Error(ErrorCode::MalformedCsv, "bad value '" + row.fields[1] + "'", row.line);
            rec.value = *v;
        }
        recs.push_back(std::move(rec));
        lines.push_back(row.line);
    }
    return detail::assemble(name, *freq, recs, lines);
}

}  // namespace gprism
