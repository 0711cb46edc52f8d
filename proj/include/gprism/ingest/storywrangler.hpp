#pragma once

#include <openssl/evp.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "gprism/error.hpp"
#include "gprism/parallel.hpp"
#include "gprism/series.hpp"

namespace gprism {

/// Which per-day field of an n-gram response becomes the series value. The service
/// reports raw counts, relative frequencies and popularity ranks.
enum class NgramField { Frequency, Count, Rank };

[[nodiscard]] inline std::optional<NgramField> parse_ngram_field(std::string_view s) {
    if (s == "freq" || s == "frequency") return NgramField::Frequency;
    if (s == "count") return NgramField::Count;
    if (s == "rank") return NgramField::Rank;
    return std::nullopt;
}

inline constexpr const char* kStorywranglerUrlEnv = "GPRISM_STORYWRANGLER_URL";
inline constexpr const char* kStorywranglerDefaultUrl = "https://storywrangling.org";

struct StorywranglerOptions {
    std::string base_url;  // empty: $GPRISM_STORYWRANGLER_URL, else the public service
    std::filesystem::path cache_dir = ".gprism-cache/storywrangler";
    NgramField field = NgramField::Frequency;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{30};
    /// Serve from the cache only; a miss is an error instead of a request.
    bool offline = false;
};

/// Number of whitespace-separated tokens; the service partitions its tables by n = 1..3.
[[nodiscard]] inline std::size_t ngram_order(std::string_view term) {
    std::size_t n = 0;
    bool in_token = false;
    for (char c : term) {
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!space && !in_token) ++n;
        in_token = !space;
    }
    if (n < 1 || n > 3) {
        throw Error(ErrorCode::InvalidArgument, "'" + std::string(term) + "' has " + std::to_string(n) +
                    " tokens; n-grams must have 1 to 3");
    }
    return n;
}

/// RFC 3986 percent-encoding of everything but unreserved characters.
[[nodiscard]] inline std::string percent_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
            c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

[[nodiscard]] inline std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::IoError, "SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

/// Request path (relative to the base URL) for one n-gram over a date range:
/// /api/ngrams/<n>grams/<term>?language=<lang>&start=<date>&end=<date>
[[nodiscard]] inline std::string storywrangler_path(const std::string& term, const std::string& lang,
                                                    DateRange range) {
    return "/api/ngrams/" + std::to_string(ngram_order(term)) + "grams/" + percent_encode(term) +
           "?language=" + percent_encode(lang) + "&start=" + range.start.to_string() + "&end=" + range.end.to_string();
}

/// Decodes `{"data":[{"date":"YYYY-MM-DD","count":..,"freq":..,"rank":..}, ...]}` into a
/// daily series covering `range`; days absent from the response (or null) are missing.
[[nodiscard]] inline TimeSeries decode_storywrangler(std::string_view body, const std::string& term, DateRange range,
                                                     NgramField field) {
    using nlohmann::json;
    const json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::DecodeError, "response for '" + term + "' is not JSON");
    if (!doc.is_object() || !doc.contains("data") || !doc["data"].is_array()) {
        throw Error(ErrorCode::DecodeError, "response for '" + term + "' lacks a data array");
    }
    const char* key = field == NgramField::Frequency ? "freq" : field == NgramField::Count ? "count" : "rank";
    const auto n = static_cast<std::size_t>(steps_between(range.start, range.end, Frequency::Daily) + 1);
    std::vector<Value> values(n);
    std::vector<bool> seen(n, false);
    for (const auto& item : doc["data"]) {
        if (!item.is_object() || !item.contains("date") || !item["date"].is_string()) {
            throw Error(ErrorCode::DecodeError, "data entry without a date");
        }
        const auto ts = TimeStamp::try_parse(item["date"].get<std::string>());
        if (!ts) throw Error(ErrorCode::DecodeError, "bad date '" + item["date"].get<std::string>() + "'");
        if (*ts < range.start || range.end < *ts) continue;
        const auto i = static_cast<std::size_t>(steps_between(range.start, *ts, Frequency::Daily));
        if (seen[i]) throw Error(ErrorCode::DecodeError, "duplicate date " + ts->to_string());
        seen[i] = true;
        if (!item.contains(key) || item[key].is_null()) continue;
        if (!item[key].is_number()) throw Error(ErrorCode::DecodeError, std::string(key) + " is not a number");
        const double v = item[key].get<double>();
        if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::DecodeError, std::string(key) + " out of range");
        values[i] = v;
    }
    return TimeSeries(term, Frequency::Daily, range.start, std::move(values));
}

/// Client for the Storywrangler n-gram API. Raw response bodies are cached under
/// cache_dir keyed by SHA-256 of (n, term, language, range), so a warm cache replays a
/// fetch byte for byte without touching the network. Safe to share between threads.
class StorywranglerClient {
public:
    explicit StorywranglerClient(StorywranglerOptions opt = {}) : opt_(std::move(opt)) {
        if (opt_.base_url.empty()) {
            const char* env = std::getenv(kStorywranglerUrlEnv);
            opt_.base_url = env && *env ? env : kStorywranglerDefaultUrl;
        }
        while (!opt_.base_url.empty() && opt_.base_url.back() == '/') opt_.base_url.pop_back();
        if (opt_.max_attempts < 1) throw Error(ErrorCode::InvalidArgument, "max_attempts must be >= 1");
    }

    [[nodiscard]] const StorywranglerOptions& options() const noexcept { return opt_; }

    [[nodiscard]] std::filesystem::path cache_path(const std::string& term, const std::string& lang,
                                                   DateRange range) const {
        const std::string key = "storywrangler/v1\n" + std::to_string(ngram_order(term)) + "\n" + term + "\n" +
                                lang + "\n" + range.start.to_string() + "\n" + range.end.to_string();
        return opt_.cache_dir / (sha256_hex(key) + ".json");
    }

    /// Raw response body, from the cache when present.
    [[nodiscard]] std::string fetch_raw(const std::string& term, const std::string& lang, DateRange range) const {
        if (range.end < range.start) throw Error(ErrorCode::InvalidArgument, "date range ends before it starts");
        const auto path = cache_path(term, lang, range);
        if (auto cached = read_file(path)) return *cached;
        if (opt_.offline) {
            throw Error(ErrorCode::HttpError, "offline and no cached response for '" + term + "'", std::nullopt, 0);
        }
        std::string body = request(storywrangler_path(term, lang, range), term);
        (void)decode_storywrangler(body, term, range, opt_.field);  // never cache an undecodable body
        store(path, body);
        return body;
    }

    [[nodiscard]] TimeSeries fetch(const std::string& term, const std::string& lang, DateRange range) const {
        return decode_storywrangler(fetch_raw(term, lang, range), term, range, opt_.field);
    }

    /// Fetches several terms with at most `parallelism` requests in flight; results keep
    /// the order of `terms`.
    [[nodiscard]] std::vector<TimeSeries> fetch_many(const std::vector<std::string>& terms, const std::string& lang,
                                                     DateRange range, std::size_t parallelism = 4) const {
        std::vector<TimeSeries> out(terms.size());
        detail::run_parallel(terms.size(), parallelism, [&](std::size_t k) { out[k] = fetch(terms[k], lang, range); });
        return out;
    }

private:
    static std::optional<std::string> read_file(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) return std::nullopt;
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    // Write to a unique temporary, then rename: readers never see a partial file and
    // concurrent writers of one key leave one complete copy.
    void store(const std::filesystem::path& path, const std::string& body) const {
        std::lock_guard lock(cache_mutex_);
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        const auto tmp = path.string() + ".tmp" + std::to_string(::getpid()) + "." + std::to_string(++tmp_counter_);
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out.write(body.data(), static_cast<std::streamsize>(body.size()));
            if (!out) throw Error(ErrorCode::IoError, "cannot write cache file " + tmp);
        }
        std::filesystem::rename(tmp, path, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot install cache file " + path.string() + ": " + ec.message());
    }

    std::string request(const std::string& rel_path, const std::string& term) const {
        // Split "scheme://host[:port][/prefix]" into origin and path prefix.
        const auto scheme_end = opt_.base_url.find("://");
        const auto slash = opt_.base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
        const std::string origin = opt_.base_url.substr(0, slash);
        const std::string prefix = slash == std::string::npos ? "" : opt_.base_url.substr(slash);

        httplib::Client cli(origin);
        if (!cli.is_valid()) throw Error(ErrorCode::HttpError, "invalid base URL " + opt_.base_url, std::nullopt, 0);
        cli.set_url_encode(false);
        cli.set_connection_timeout(opt_.timeout);
        cli.set_read_timeout(opt_.timeout);
        cli.set_follow_location(true);

        int last_status = 0;
        for (int attempt = 0; attempt < opt_.max_attempts; ++attempt) {
            if (attempt > 0) std::this_thread::sleep_for(opt_.initial_backoff * (1 << (attempt - 1)));
            const auto res = cli.Get(prefix + rel_path);
            if (!res) {
                last_status = 0;
                continue;
            }
            last_status = res->status;
            if (res->status == 200) return res->body;
            if (res->status == 429 || res->status >= 500) continue;
            throw Error(ErrorCode::HttpError, "HTTP " + std::to_string(res->status) + " for '" + term + "'",
                        std::nullopt, res->status);
        }
        if (last_status == 429) {
            throw Error(ErrorCode::RateLimited, "rate limited after " + std::to_string(opt_.max_attempts) +
                        " attempts for '" + term + "'", std::nullopt, 429);
        }
        throw Error(ErrorCode::HttpError, (last_status == 0 ? std::string("no response") : "HTTP " + std::to_string(last_status)) +
                    " after " + std::to_string(opt_.max_attempts) + " attempts for '" + term + "'",
                    std::nullopt, last_status);
    }

    StorywranglerOptions opt_;
    mutable std::mutex cache_mutex_;
    mutable std::size_t tmp_counter_ = 0;
};

}  // namespace gprism
