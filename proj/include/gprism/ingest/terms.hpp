#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gprism/error.hpp"
#include "gprism/ingest/csv.hpp"

namespace gprism {

/// Non-empty list of unique search terms, lowercased with whitespace collapsed.
class TermList {
public:
    explicit TermList(const std::vector<std::string>& terms) {
        std::set<std::string> seen;
        for (const auto& raw : terms) {
            std::string t = normalize(raw);
            if (t.empty()) throw Error(ErrorCode::InvalidArgument, "empty term");
            if (!seen.insert(t).second) throw Error(ErrorCode::InvalidArgument, "duplicate term '" + t + "'");
            terms_.push_back(std::move(t));
        }
        if (terms_.empty()) throw Error(ErrorCode::InvalidArgument, "term list is empty");
    }

    /// One term per line; blank lines and lines starting with '#' are skipped.
    static TermList parse(std::string_view text) {
        std::vector<std::string> terms;
        while (!text.empty()) {
            const auto nl = text.find('\n');
            std::string_view line = text.substr(0, nl);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            line = csv::trim(line);
            if (!line.empty() && line.front() != '#') terms.emplace_back(line);
            if (nl == std::string_view::npos) break;
            text.remove_prefix(nl + 1);
        }
        return TermList(terms);
    }

    static std::string normalize(std::string_view s) {
        std::string out;
        for (char c : csv::lower(s)) {
            const bool space = c == ' ' || c == '\t';
            if (space) {
                if (!out.empty() && out.back() != ' ') out += ' ';
            } else {
                out += c;
            }
        }
        if (!out.empty() && out.back() == ' ') out.pop_back();
        return out;
    }

    [[nodiscard]] const std::vector<std::string>& terms() const noexcept { return terms_; }
    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
    [[nodiscard]] auto begin() const noexcept { return terms_.begin(); }
    [[nodiscard]] auto end() const noexcept { return terms_.end(); }

private:
    std::vector<std::string> terms_;
};

/// The 25 Google Trends queries most related to "unemployment".
[[nodiscard]] inline TermList default_gtrends_terms() {
    return TermList({"unemployment", "unemployment benefits", "unemployment rate", "unemployment office",
                     "pa unemployment", "claim unemployment", "ny unemployment", "nys unemployment",
                     "ohio unemployment", "unemployment florida", "unemployment extension", "texas unemployment",
                     "nj unemployment", "unemployment number", "file unemployment", "unemployment insurance",
                     "california unemployment", "unemployed", "unemployment oregon", "new york unemployment",
                     "indiana unemployment", "unemployment washington", "unemployment wisconsin",
                     "unemployment online", "unemployment login"});
}

[[nodiscard]] inline TermList default_twitter_terms() {
    return TermList({"unemployed", "unemployment", "unemployment rate"});
}

}  // namespace gprism
