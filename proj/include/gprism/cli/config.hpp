#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gprism/error.hpp"
#include "gprism/ingest/filter.hpp"
#include "gprism/ingest/parsers.hpp"
#include "gprism/ingest/storywrangler.hpp"
#include "gprism/model_config.hpp"
#include "gprism/pipeline.hpp"

namespace gprism::cli {

enum class SourceType { ClaimsCsv, OecdCci, GTrendsCsv, SeriesCsv, Storywrangler };

struct SourceSpec {
    std::string name;
    SourceType type = SourceType::SeriesCsv;
    std::filesystem::path path;  // file sources, resolved against the config directory
    std::string term;            // gtrends_csv, storywrangler
    std::string location;        // oecd_cci
    std::string language = "en";
    std::optional<DateRange> range;  // storywrangler; default spans the target
    Aggregation aggregation = Aggregation::Mean;
    double below_one = kTrendsBelowOne;
};

/// Everything a command needs, read from one JSON file. Relative paths are resolved
/// against the directory containing the config.
struct ExperimentConfig {
    std::filesystem::path config_path;
    SourceSpec target;
    std::vector<SourceSpec> exogenous;
    nlohmann::json model_block = nlohmann::json::object();  // applied over the target's frequency defaults
    std::size_t jobs = 1;
    std::vector<Variant> variants{Variant::Original, Variant::MR, Variant::OriginalG, Variant::MRT};
    EvaluationSpan evaluation;
    double max_missing_fraction = kDefaultMaxMissingFraction;
    std::size_t forward_fill_max_gap = 0;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    std::optional<Variant> nowcast_variant;
    StorywranglerOptions storywrangler;
};

namespace detail {

/// Object reader that rejects unknown keys and wrong types with ConfigError.
class Reader {
public:
    Reader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) fail(where_ + " must be an object");
    }

    [[noreturn]] static void fail(const std::string& why) { throw Error(ErrorCode::ConfigError, why); }

    [[nodiscard]] bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    [[nodiscard]] const nlohmann::json& raw(const std::string& key) {
        if (!has(key)) fail(where_ + "." + key + " is required");
        return j_.at(key);
    }

    template <class T>
    [[nodiscard]] T get(const std::string& key) {
        const auto& v = raw(key);
        try {
            if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
                if (!v.is_number_unsigned()) fail(where_ + "." + key + " must be a non-negative integer");
            } else if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) fail(where_ + "." + key + " must be a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) fail(where_ + "." + key + " must be a string");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) fail(where_ + "." + key + " must be a boolean");
            }
            return v.get<T>();
        } catch (const nlohmann::json::exception&) {
            fail(where_ + "." + key + " has the wrong type");
        }
    }

    template <class T>
    [[nodiscard]] T get_or(const std::string& key, T fallback) {
        return has(key) ? get<T>(key) : fallback;
    }

    [[nodiscard]] TimeStamp date(const std::string& key) {
        const std::string s = get<std::string>(key);
        if (auto ts = TimeStamp::try_parse(s)) return *ts;
        fail(where_ + "." + key + " must be a YYYY-MM-DD date, got '" + s + "'");
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) fail("unknown key " + where_ + "." + it.key());
        }
    }

    [[nodiscard]] const std::string& where() const noexcept { return where_; }

private:
    const nlohmann::json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

inline std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

inline SourceSpec read_source(const nlohmann::json& j, const std::string& where, const std::filesystem::path& base) {
    Reader r(j, where);
    SourceSpec s;
    const std::string type = r.get<std::string>("source");
    if (type == "claims_csv") s.type = SourceType::ClaimsCsv;
    else if (type == "oecd_cci") s.type = SourceType::OecdCci;
    else if (type == "gtrends_csv") s.type = SourceType::GTrendsCsv;
    else if (type == "series_csv") s.type = SourceType::SeriesCsv;
    else if (type == "storywrangler") s.type = SourceType::Storywrangler;
    else Reader::fail(where + ".source '" + type + "' is not one of claims_csv, oecd_cci, gtrends_csv, series_csv, storywrangler");

    if (s.type == SourceType::Storywrangler) {
        s.term = r.get<std::string>("term");
        s.language = r.get_or<std::string>("language", "en");
        if (r.has("start") || r.has("end")) s.range = DateRange{r.date("start"), r.date("end")};
        const std::string agg = r.get_or<std::string>("aggregation", "mean");
        if (agg == "mean") s.aggregation = Aggregation::Mean;
        else if (agg == "sum") s.aggregation = Aggregation::Sum;
        else Reader::fail(where + ".aggregation must be mean or sum");
    } else {
        s.path = resolve(base, r.get<std::string>("path"));
    }
    if (s.type == SourceType::GTrendsCsv) {
        s.term = r.get<std::string>("term");
        s.below_one = r.get_or<double>("below_one", kTrendsBelowOne);
    }
    if (s.type == SourceType::OecdCci) s.location = r.get<std::string>("location");
    s.name = r.get_or<std::string>("name", s.term.empty() ? (s.location.empty() ? s.path.stem().string() : s.location) : s.term);
    r.finish();
    return s;
}

inline Variant read_variant(const std::string& text, const std::string& where) {
    if (auto v = parse_variant(text)) return *v;
    Reader::fail(where + " '" + text + "' is not one of Original, MR, OriginalG, MRT");
}

inline void read_model(const nlohmann::json& j, ModelConfig& m) {
    Reader r(j, "model");
    m.window_M = r.get_or<std::size_t>("window", m.window_M);
    m.lags_K = r.get_or<std::size_t>("lags", m.lags_K);
    m.period = r.get_or<std::size_t>("period", m.period);
    if (r.has("horizons")) m.horizons = r.get<std::vector<std::size_t>>("horizons");
    if (r.has("operators")) {
        m.operator_specs.clear();
        for (const auto& s : r.get<std::vector<std::string>>("operators")) m.operator_specs.push_back(OperatorSpec::parse(s));
    }
    if (r.has("sliding_window")) m.sliding_window = r.get<std::size_t>("sliding_window");
    if (r.has("lasso")) {
        Reader l(r.raw("lasso"), "model.lasso");
        m.lasso.folds = l.get_or<std::size_t>("folds", m.lasso.folds);
        m.lasso.n_lambdas = l.get_or<std::size_t>("n_lambdas", m.lasso.n_lambdas);
        m.lasso.eps_ratio = l.get_or<double>("eps_ratio", m.lasso.eps_ratio);
        m.lasso.tol = l.get_or<double>("tol", m.lasso.tol);
        m.lasso.max_iters = l.get_or<std::size_t>("max_iters", m.lasso.max_iters);
        if (l.has("lambda_rule")) {
            const std::string rule = l.get<std::string>("lambda_rule");
            if (rule == "1se") m.lasso.rule = LambdaRule::OneStandardError;
            else if (rule == "min") m.lasso.rule = LambdaRule::Minimum;
            else Reader::fail("model.lasso.lambda_rule must be 1se or min");
        }
        l.finish();
    }
    r.finish();
}

}  // namespace detail

[[nodiscard]] inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    using nlohmann::json;
    const std::string text = detail::read_text_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigSyntax, path.string() + ": " + e.what());
    }
    ExperimentConfig cfg;
    cfg.config_path = path;
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    detail::Reader r(j, "config");

    cfg.target = detail::read_source(r.raw("target"), "target", base);
    if (cfg.target.type == SourceType::Storywrangler) detail::Reader::fail("target cannot be a storywrangler source");

    if (r.has("exogenous")) {
        const auto& ex = r.raw("exogenous");
        if (!ex.is_array()) detail::Reader::fail("exogenous must be an array");
        std::set<std::string> names;
        for (std::size_t k = 0; k < ex.size(); ++k) {
            auto s = detail::read_source(ex[k], "exogenous[" + std::to_string(k) + "]", base);
            if (!names.insert(s.name).second) detail::Reader::fail("duplicate exogenous name '" + s.name + "'");
            cfg.exogenous.push_back(std::move(s));
        }
    }

    // Frequency defaults depend on the parsed target, so the block is kept and re-applied
    // by model_for; reading it here surfaces mistakes before any data is loaded.
    if (r.has("model")) {
        cfg.model_block = r.raw("model");
        ModelConfig probe;
        detail::read_model(cfg.model_block, probe);
    }

    if (r.has("variants")) {
        cfg.variants.clear();
        for (const auto& v : r.get<std::vector<std::string>>("variants")) cfg.variants.push_back(detail::read_variant(v, "variants"));
        if (cfg.variants.empty()) detail::Reader::fail("variants must not be empty");
    }
    {
        detail::Reader e(r.raw("evaluation"), "evaluation");
        cfg.evaluation = {e.date("start"), e.date("end")};
        e.finish();
        if (cfg.evaluation.end < cfg.evaluation.start) detail::Reader::fail("evaluation span is empty");
    }
    cfg.max_missing_fraction = r.get_or<double>("max_missing_fraction", cfg.max_missing_fraction);
    if (!(cfg.max_missing_fraction >= 0.0 && cfg.max_missing_fraction <= 1.0))
        detail::Reader::fail("max_missing_fraction must lie in [0, 1]");
    cfg.forward_fill_max_gap = r.get_or<std::size_t>("forward_fill_max_gap", 0);
    if (r.has("output_dir")) cfg.output_dir = detail::resolve(base, r.get<std::string>("output_dir"));
    else cfg.output_dir = base / "out";
    cfg.seed = r.get_or<std::uint64_t>("seed", 0);
    cfg.jobs = r.get_or<std::size_t>("jobs", 1);
    if (r.has("nowcast")) {
        detail::Reader n(r.raw("nowcast"), "nowcast");
        if (n.has("variant")) cfg.nowcast_variant = detail::read_variant(n.get<std::string>("variant"), "nowcast.variant");
        n.finish();
    }
    cfg.storywrangler.cache_dir = base / ".gprism-cache" / "storywrangler";
    if (r.has("storywrangler")) {
        detail::Reader s(r.raw("storywrangler"), "storywrangler");
        cfg.storywrangler.base_url = s.get_or<std::string>("base_url", "");
        if (s.has("cache_dir")) cfg.storywrangler.cache_dir = detail::resolve(base, s.get<std::string>("cache_dir"));
        if (s.has("field")) {
            const auto f = parse_ngram_field(s.get<std::string>("field"));
            if (!f) detail::Reader::fail("storywrangler.field must be freq, count or rank");
            cfg.storywrangler.field = *f;
        }
        cfg.storywrangler.offline = s.get_or<bool>("offline", false);
        s.finish();
    }
    r.finish();
    return cfg;
}

/// Re-raises `e` with the offending file named in the message.
[[noreturn]] inline void rethrow_with_path(const Error& e, const std::filesystem::path& p) {
    throw Error(e.code(), p.string() + ": " + e.detail(), e.line(), e.http_status());
}

[[nodiscard]] inline TimeSeries load_file_source(const SourceSpec& s) {
    const std::string bytes = detail::read_text_file(s.path);
    try {
        switch (s.type) {
            case SourceType::ClaimsCsv: return parse_claims_csv(bytes, s.name);
            case SourceType::OecdCci: return parse_oecd_cci_csv(bytes, s.location).renamed(s.name);
            case SourceType::GTrendsCsv: return parse_gtrends_csv(bytes, s.term, s.below_one).renamed(s.name);
            case SourceType::SeriesCsv: return parse_series_csv(bytes).renamed(s.name);
            case SourceType::Storywrangler: break;
        }
    } catch (const Error& e) {
        rethrow_with_path(e, s.path);
    }
    throw Error(ErrorCode::InvalidArgument, "not a file source");
}

struct LoadedData {
    TimeSeries target;
    std::vector<TimeSeries> exogenous;  // all configured series, on the target grid
    FilterResult filtered;              // exogenous after the missing-rate filter
    MissingRateEntry target_missing;
};

/// Parses every source, brings exogenous series onto the target frequency (daily
/// series are aggregated Sunday..Saturday), forward-fills short gaps, and applies the
/// missing-rate filter over the evaluation span.
[[nodiscard]] inline LoadedData load_data(const ExperimentConfig& cfg) {
    LoadedData d;
    d.target = load_file_source(cfg.target);
    const Frequency freq = d.target.freq();
    std::optional<StorywranglerClient> client;
    for (const auto& s : cfg.exogenous) {
        TimeSeries x;
        if (s.type == SourceType::Storywrangler) {
            if (!client) client.emplace(cfg.storywrangler);
            const DateRange range = s.range.value_or(DateRange{d.target.start().plus_days(-6), d.target.last()});
            x = client->fetch(s.term, s.language, range).renamed(s.name);
        } else {
            x = load_file_source(s);
        }
        if (x.freq() == Frequency::Daily && freq == Frequency::WeeklyEndingSaturday) {
            x = resample_daily_to_weekly(x, s.aggregation).renamed(s.name);
        }
        if (x.freq() != freq) {
            throw Error(ErrorCode::MixedFrequency, "exogenous '" + s.name + "' is " + std::string(to_string(x.freq())) +
                        ", target is " + std::string(to_string(freq)));
        }
        if (cfg.forward_fill_max_gap > 0) x = forward_fill(x, cfg.forward_fill_max_gap);
        d.exogenous.push_back(std::move(x));
    }
    d.filtered = filter_by_missing_rate(d.exogenous, cfg.max_missing_fraction, cfg.evaluation);
    d.target_missing = missing_rate(d.target, cfg.evaluation);
    return d;
}

/// Model configuration for one variant: frequency defaults, then the config's model
/// block, then the surviving exogenous names.
[[nodiscard]] inline ModelConfig model_for(const ExperimentConfig& cfg, const LoadedData& d, Variant v) {
    ModelConfig m = ModelConfig::defaults_for(d.target.freq());
    detail::read_model(cfg.model_block, m);
    m.jobs = cfg.jobs;
    m.variant = v;
    m.exogenous_names.clear();
    for (const auto& s : d.filtered.kept) m.exogenous_names.push_back(s.name());
    m.validate();
    return m;
}

}  // namespace gprism::cli
