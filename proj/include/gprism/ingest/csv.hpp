#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gprism/error.hpp"

namespace gprism::csv {

struct Row {
    std::size_t line = 0;  // 1-based physical line where the record starts
    std::vector<std::string> fields;

    [[nodiscard]] bool blank() const { return fields.size() == 1 && fields[0].empty(); }
};

/// RFC 4180 tokenizer: comma separated, double-quoted fields with "" escapes, LF or CRLF
/// line ends, optional UTF-8 BOM. A blank line yields a row with one empty field.
[[nodiscard]] inline std::vector<Row> parse(std::string_view bytes) {
    if (bytes.substr(0, 3) == "\xEF\xBB\xBF") bytes.remove_prefix(3);
    std::vector<Row> rows;
    std::size_t line = 1, pos = 0;
    const std::size_t n = bytes.size();
    while (pos < n) {
        Row row;
        row.line = line;
        std::string field;
        bool done = false;
        while (!done) {
            field.clear();
            if (pos < n && bytes[pos] == '"') {
                const std::size_t open_line = line;
                ++pos;
                for (;;) {
                    if (pos >= n) throw Error(ErrorCode::MalformedCsv, "unterminated quoted field", open_line);
                    const char c = bytes[pos++];
                    if (c == '"') {
                        if (pos < n && bytes[pos] == '"') {
                            field += '"';
                            ++pos;
                            continue;
                        }
                        break;
                    }
                    if (c == '\n') ++line;
                    field += c;
                }
                if (pos < n && bytes[pos] != ',' && bytes[pos] != '\n' && bytes[pos] != '\r') {
                    throw Error(ErrorCode::MalformedCsv, "text after closing quote", line);
                }
            } else {
                while (pos < n && bytes[pos] != ',' && bytes[pos] != '\n' && bytes[pos] != '\r') {
                    if (bytes[pos] == '"') throw Error(ErrorCode::MalformedCsv, "stray quote in field", line);
                    field += bytes[pos++];
                }
            }
            row.fields.push_back(field);
            if (pos >= n) {
                done = true;
            } else if (bytes[pos] == ',') {
                ++pos;
            } else {
                if (bytes[pos] == '\r') {
                    ++pos;
                    if (pos < n && bytes[pos] != '\n') throw Error(ErrorCode::MalformedCsv, "bare carriage return", line);
                }
                if (pos < n) ++pos;
                ++line;
                done = true;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

[[nodiscard]] inline std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

[[nodiscard]] inline std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += quote(fields[i]);
    }
    return out;
}

/// Shortest text that parses back to exactly `v`.
[[nodiscard]] inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Whole-field decimal parse; no leading '+', whitespace, or trailing text.
[[nodiscard]] inline std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

[[nodiscard]] inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

[[nodiscard]] inline std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

}  // namespace gprism::csv
