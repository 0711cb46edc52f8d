#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gprism/cli/config.hpp"
#include "gprism/report.hpp"

namespace gprism::cli {

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitParse = 2 };

/// Command-line overrides shared by all subcommands.
struct Overrides {
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::size_t> jobs;
    std::optional<std::uint64_t> seed;
};

namespace detail {

inline void apply(ExperimentConfig& cfg, const Overrides& o) {
    if (o.out_dir) cfg.output_dir = *o.out_dir;
    if (o.jobs) {
        if (*o.jobs < 1) throw Error(ErrorCode::ConfigError, "--jobs must be >= 1");
        cfg.jobs = *o.jobs;
    }
    if (o.seed) cfg.seed = *o.seed;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
}

inline nlohmann::ordered_json manifest_entry(const MissingRateEntry& e, const TimeSeries& s, const std::string& role) {
    return {{"name", e.name},
            {"role", role},
            {"freq", std::string(to_string(s.freq()))},
            {"start", s.empty() ? "" : s.start().to_string()},
            {"end", s.empty() ? "" : s.last().to_string()},
            {"points_in_span", e.total},
            {"missing_in_span", e.missing},
            {"missing_fraction", e.missing_fraction},
            {"kept", e.kept}};
}

}  // namespace detail

/// Structured diagnostic for stderr: {"error":code,"message":..,"line":..,"http_status":..}
[[nodiscard]] inline std::string diagnostic_json(const Error& e) {
    nlohmann::ordered_json j;
    j["error"] = std::string(to_string(e.code()));
    j["message"] = e.detail();
    if (e.line()) j["line"] = *e.line();
    if (e.http_status()) j["http_status"] = *e.http_status();
    return j.dump();
}

/// Runs walk_forward for every configured variant and writes predictions.csv,
/// summary.json and plot_h<l>.csv (one per horizon) under the output directory.
inline int cmd_backtest(const std::filesystem::path& config_path, const Overrides& o = {},
                        std::ostream& out = std::cout) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    detail::apply(cfg, o);
    const LoadedData data = load_data(cfg);
    const Frequency freq = data.target.freq();

    std::vector<BacktestReport> reports;
    std::vector<std::size_t> horizons;
    for (Variant v : cfg.variants) {
        const ModelConfig m = model_for(cfg, data, v);
        horizons = m.horizons;
        reports.push_back(walk_forward(data.target, data.filtered.kept, m, cfg.evaluation));
    }

    detail::write_file(cfg.output_dir / "predictions.csv", predictions_csv(reports, freq));
    detail::write_file(cfg.output_dir / "summary.json", summary_json(reports, cfg.evaluation, cfg.seed).dump(2) + "\n");
    for (std::size_t h : horizons) {
        detail::write_file(cfg.output_dir / ("plot_h" + std::to_string(h) + ".csv"), plot_csv(reports, h, freq));
    }

    out << "horizon,variant,rmse,mae,n_test,n_skipped\n";
    for (std::size_t k = 0; k < horizons.size(); ++k) {
        for (const auto& rep : reports) {
            const auto& h = rep.horizons[k];
            out << h.horizon << ',' << to_string(rep.variant) << ',' << csv::format_double(h.rmse) << ','
                << csv::format_double(h.mae) << ',' << h.n_test << ',' << h.n_skipped << '\n';
        }
    }
    return kExitOk;
}

/// Predicts y at as_of + l for each configured horizon with the model walk_forward
/// would train at test time as_of. Writes nowcast.csv and prints the same rows.
inline int cmd_nowcast(const std::filesystem::path& config_path, TimeStamp as_of, const Overrides& o = {},
                       std::ostream& out = std::cout) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    detail::apply(cfg, o);
    const LoadedData data = load_data(cfg);
    const Frequency freq = data.target.freq();
    if (!on_grid(as_of, freq)) {
        throw Error(ErrorCode::InvalidArgument, "--as-of " + as_of.to_string() + " is not on the " +
                    std::string(to_string(freq)) + " grid");
    }
    const Variant v = cfg.nowcast_variant.value_or(cfg.variants.back());
    const ModelConfig m = model_for(cfg, data, v);
    const FeatureTable table(data.target, data.filtered.kept, m, as_of);

    std::vector<Forecast> rows(m.horizons.size());
    gprism::detail::run_parallel(rows.size(), m.jobs, [&](std::size_t k) { rows[k] = forecast_at(table, as_of, m.horizons[k]); });

    std::string csv_text = "variant,as_of,horizon,target_timestamp,y_pred,lambda,nnz,n_train\n";
    for (const auto& fc : rows) {
        csv_text += csv::join({std::string(to_string(v)), fc.feature_time.to_string(), std::to_string(fc.horizon),
                               fc.target_time.to_string(), csv::format_double(fc.y_pred),
                               csv::format_double(fc.lambda), std::to_string(fc.nonzero_count),
                               std::to_string(fc.n_train)});
        csv_text += '\n';
    }
    detail::write_file(cfg.output_dir / "nowcast.csv", csv_text);
    out << csv_text;
    return kExitOk;
}

/// Parses every source and prints a JSON manifest of missing rates over the evaluation
/// span plus alignment coverage. Dropped exogenous series are reported, not fatal; the
/// command fails (exit 1) only when the target itself exceeds the threshold.
inline int cmd_validate_data(const std::filesystem::path& config_path, const Overrides& o = {},
                             std::ostream& out = std::cout) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    detail::apply(cfg, o);
    const LoadedData data = load_data(cfg);

    MissingRateEntry target = data.target_missing;
    target.kept = target.missing_fraction <= cfg.max_missing_fraction;

    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["evaluation"] = {{"start", cfg.evaluation.start.to_string()}, {"end", cfg.evaluation.end.to_string()}};
    j["max_missing_fraction"] = cfg.max_missing_fraction;
    nlohmann::ordered_json series = nlohmann::ordered_json::array();
    series.push_back(detail::manifest_entry(target, data.target, "target"));
    for (std::size_t k = 0; k < data.exogenous.size(); ++k) {
        series.push_back(detail::manifest_entry(data.filtered.manifest[k], data.exogenous[k], "exogenous"));
    }
    j["series"] = series;

    // Coverage: share of target grid points in the span where the target and each kept
    // exogenous series (and all of them at once) are present.
    const std::vector<TimeSeries>& kept = data.filtered.kept;
    std::vector<std::size_t> both(kept.size(), 0);
    std::size_t all = 0, total = 0;
    const Frequency freq = data.target.freq();
    TimeStamp t = cfg.evaluation.start;
    if (freq == Frequency::WeeklyEndingSaturday) t = week_ending_saturday(t);
    if (freq == Frequency::Monthly && !on_grid(t, freq)) t = advance(first_of_month(t), freq, 1);
    for (; t <= cfg.evaluation.end; t = advance(t, freq, 1)) {
        ++total;
        if (!data.target.at(t)) continue;
        bool every = true;
        for (std::size_t k = 0; k < kept.size(); ++k) {
            if (kept[k].at(t)) ++both[k];
            else every = false;
        }
        if (every) ++all;
    }
    auto frac = [&](std::size_t c) { return total == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(total); };
    nlohmann::ordered_json coverage;
    coverage["points"] = total;
    coverage["all_kept"] = frac(all);
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < kept.size(); ++k) per[kept[k].name()] = frac(both[k]);
    coverage["with_target"] = per;
    j["alignment_coverage"] = coverage;
    j["ok"] = target.kept;
    out << j.dump(2) << '\n';
    return target.kept ? kExitOk : kExitRuntime;
}

/// Entry point for the `gprism` executable.
inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"gprism: walk-forward nowcasting with decomposed lags, operators and exogenous signals"};
    app.require_subcommand(1);
    std::string config;
    std::string as_of;
    std::string out_dir;
    std::size_t jobs = 0;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "experiment config (JSON)")->required();
        sub->add_option("--out-dir", out_dir, "output directory (overrides config)");
        sub->add_option("--jobs", jobs, "worker threads (overrides config)")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "seed recorded in outputs (overrides config)");
    };
    auto* backtest = app.add_subcommand("backtest", "walk-forward backtest of every configured variant");
    add_common(backtest);
    auto* nowcast = app.add_subcommand("nowcast", "predict each horizon from data available at --as-of");
    add_common(nowcast);
    nowcast->add_option("--as-of", as_of, "prediction time, YYYY-MM-DD on the target grid")->required();
    auto* validate = app.add_subcommand("validate-data", "parse all sources and report missing rates");
    add_common(validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitParse;
    }

    Overrides o;
    if (!out_dir.empty()) o.out_dir = out_dir;
    if (jobs > 0) o.jobs = jobs;
    if (app.got_subcommand(backtest) ? backtest->count("--seed") : app.got_subcommand(nowcast) ? nowcast->count("--seed") : validate->count("--seed")) {
        o.seed = seed;
    }
    try {
        if (app.got_subcommand(backtest)) return cmd_backtest(config, o, out);
        if (app.got_subcommand(nowcast)) {
            const auto ts = TimeStamp::try_parse(as_of);
            if (!ts) throw Error(ErrorCode::ConfigError, "--as-of must be YYYY-MM-DD, got '" + as_of + "'");
            return cmd_nowcast(config, *ts, o, out);
        }
        return cmd_validate_data(config, o, out);
    } catch (const Error& e) {
        err << diagnostic_json(e) << '\n';
        return is_parse_error(e.code()) ? kExitParse : kExitRuntime;
    } catch (const std::exception& e) {
        err << nlohmann::json{{"error", "Internal"}, {"message", e.what()}}.dump() << '\n';
        return kExitRuntime;
    }
}

}  // namespace gprism::cli
