#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gprism/decomposition.hpp"
#include "gprism/error.hpp"
#include "gprism/lasso.hpp"
#include "gprism/metrics.hpp"
#include "gprism/model_config.hpp"
#include "gprism/operators.hpp"
#include "gprism/parallel.hpp"
#include "gprism/series.hpp"

namespace gprism {

/// Column labels in design-matrix order: z lags, gamma lags, target operators, exogenous.
[[nodiscard]] inline std::vector<std::string> feature_labels(const ModelConfig& cfg) {
    std::vector<std::string> labels;
    labels.reserve(cfg.feature_count());
    for (std::size_t j = 1; j <= cfg.lags_K; ++j) labels.push_back("z[t-" + std::to_string(j) + "]");
    for (std::size_t j = 1; j <= cfg.lags_K; ++j) labels.push_back("gamma[t-" + std::to_string(j) + "]");
    for (const auto& op : cfg.effective_operators()) labels.push_back("op:" + op.to_string() + "[t-1]");
    for (const auto& name : cfg.effective_exogenous()) labels.push_back("x:" + name + "[t]");
    return labels;
}

struct LabeledFeatures {
    std::vector<std::string> labels;
    std::vector<double> values;
};

namespace detail {

inline const TimeSeries& find_exogenous(const std::vector<TimeSeries>& exog, const std::string& name,
                                        Frequency freq) {
    for (const auto& s : exog) {
        if (s.name() != name) continue;
        if (s.freq() != freq) {
            throw Error(ErrorCode::MixedFrequency, "exogenous '" + name + "' is " +
                        std::string(to_string(s.freq())) + ", target is " + std::string(to_string(freq)));
        }
        return s;
    }
    throw Error(ErrorCode::MissingExogenous, "no exogenous series named '" + name + "'");
}

/// Feature values for prediction time t. Target information is read only up to t-1;
/// exogenous values are read at t.
inline std::vector<double> feature_values(TimeStamp t, const TimeSeries& target,
                                          const std::vector<const TimeSeries*>& exog,
                                          const std::vector<OperatorSpec>& ops, const ModelConfig& cfg) {
    std::vector<double> row;
    row.reserve(2 * cfg.lags_K + ops.size() + exog.size());

    const Decomposition d = decompose_series_window(target, t, cfg.window_M, cfg.period);
    const std::size_t M = cfg.window_M;
    for (std::size_t j = 1; j <= cfg.lags_K; ++j) row.push_back(d.z[M - j]);
    for (std::size_t j = 1; j <= cfg.lags_K; ++j) row.push_back(d.gamma[M - j]);

    for (const auto& op : ops) {
        const TimeSeries w = slice_window(target, t, op.window_k);
        const std::vector<double> x = dense_values(w);
        row.push_back(op.evaluate(x));
    }
    for (const TimeSeries* s : exog) {
        const Value v = s->at(t);
        if (!v) {
            throw Error(ErrorCode::MissingExogenous, "'" + s->name() + "' has no value at " + t.to_string());
        }
        row.push_back(*v);
    }
    return row;
}

inline std::vector<const TimeSeries*> resolve_exogenous(const std::vector<TimeSeries>& exog,
                                                        const ModelConfig& cfg, Frequency freq) {
    std::vector<const TimeSeries*> out;
    for (const auto& name : cfg.effective_exogenous()) out.push_back(&find_exogenous(exog, name, freq));
    return out;
}

}  // namespace detail

/// One feature row at prediction time t: z_{t-1..t-K,t}, gamma_{t-1..t-K,t} from the
/// window decomposition ending at t-1, then (MR/MRT) each target operator in its safe
/// form evaluated on the window ending at t-1, then (OriginalG/MRT) x_{i,t}.
[[nodiscard]] inline LabeledFeatures build_feature_row(TimeStamp t, const TimeSeries& target,
                                                       const std::vector<TimeSeries>& exog,
                                                       const ModelConfig& cfg) {
    cfg.validate();
    const auto ex = detail::resolve_exogenous(exog, cfg, target.freq());
    return {feature_labels(cfg), detail::feature_values(t, target, ex, cfg.effective_operators(), cfg)};
}

struct FeatureMatrix {
    DesignMatrix X;
    std::vector<TimeStamp> target_timestamps;  // prediction time t of each row
    std::vector<Value> y_target;               // y_{t+l}; always present for training rows
    std::size_t horizon = 0;

    [[nodiscard]] std::vector<double> dense_target() const {
        std::vector<double> y;
        y.reserve(y_target.size());
        for (const auto& v : y_target) {
            if (!v) throw Error(ErrorCode::MissingInWindow, "feature matrix row has no target value");
            y.push_back(*v);
        }
        return y;
    }
};

enum class RowMode { Training, Prediction };

/// Rows of horizon `l` for every prediction time in [t_start, t_end] whose features can be
/// built; Training mode also drops rows whose target y_{t+l} is unknown.
[[nodiscard]] inline FeatureMatrix build_feature_matrix(const TimeSeries& target, const std::vector<TimeSeries>& exog,
                                                        std::size_t l, const ModelConfig& cfg, TimeStamp t_start,
                                                        TimeStamp t_end, RowMode mode = RowMode::Training) {
    cfg.validate();
    const Frequency freq = target.freq();
    if (!on_grid(t_start, freq) || !on_grid(t_end, freq) || t_end < t_start) {
        throw Error(ErrorCode::InvalidArgument, "invalid feature range " + t_start.to_string() + ".." + t_end.to_string());
    }
    const auto ex = detail::resolve_exogenous(exog, cfg, freq);
    const auto ops = cfg.effective_operators();

    std::vector<std::vector<double>> rows;
    FeatureMatrix fm;
    fm.horizon = l;
    const std::int64_t count = steps_between(t_start, t_end, freq) + 1;
    for (std::int64_t s = 0; s < count; ++s) {
        const TimeStamp t = advance(t_start, freq, s);
        const Value y = target.at(advance(t, freq, static_cast<std::int64_t>(l)));
        if (mode == RowMode::Training && !y) continue;
        try {
            rows.push_back(detail::feature_values(t, target, ex, ops, cfg));
        } catch (const Error&) {
            continue;
        }
        fm.target_timestamps.push_back(t);
        fm.y_target.push_back(y);
    }
    if (rows.empty()) throw Error(ErrorCode::EmptyMatrix, "no feature rows survive in " + t_start.to_string() + ".." + t_end.to_string());
    fm.X = DesignMatrix::from_rows(rows, feature_labels(cfg));
    return fm;
}

/// Every buildable feature row from the earliest possible prediction time up to `last`.
/// Rows do not depend on the horizon, so one table serves all horizons.
class FeatureTable {
public:
    FeatureTable(const TimeSeries& target, const std::vector<TimeSeries>& exog, const ModelConfig& cfg,
                 TimeStamp last)
        : target_(target), cfg_(cfg), labels_(feature_labels(cfg)) {
        cfg.validate();
        if (target.empty()) throw Error(ErrorCode::InsufficientHistory, "target series is empty");
        const Frequency freq = target.freq();
        first_ = advance(target.start(), freq, static_cast<std::int64_t>(cfg.window_M));
        const auto ex = detail::resolve_exogenous(exog, cfg, freq);
        const auto ops = cfg.effective_operators();
        const std::int64_t count = steps_between(first_, last, freq) + 1;
        for (std::int64_t s = 0; s < count; ++s) {
            const TimeStamp t = advance(first_, freq, s);
            try {
                rows_.emplace_back(detail::feature_values(t, target, ex, ops, cfg));
            } catch (const Error&) {
                rows_.emplace_back(std::nullopt);
            }
        }
    }

    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] const TimeSeries& target() const noexcept { return target_; }
    [[nodiscard]] const ModelConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] TimeStamp first() const noexcept { return first_; }

    /// Feature row at prediction time t, if it could be built.
    [[nodiscard]] const std::optional<std::vector<double>>* row(TimeStamp t) const {
        const std::int64_t off = steps_between(first_, t, target_.freq());
        if (off < 0 || off >= static_cast<std::int64_t>(rows_.size())) return nullptr;
        return &rows_[static_cast<std::size_t>(off)];
    }

private:
    TimeSeries target_;
    ModelConfig cfg_;
    std::vector<std::string> labels_;
    TimeStamp first_;
    std::vector<std::optional<std::vector<double>>> rows_;
};

struct Forecast {
    TimeStamp feature_time;  // i
    TimeStamp target_time;   // i + l
    std::size_t horizon = 0;
    double y_pred = 0.0;
    double lambda = 0.0;
    std::size_t nonzero_count = 0;
    std::size_t n_train = 0;
};

/// Trains a fresh model for horizon l on rows whose label y_{t+l} is known by i-1
/// (t <= i-1-l), with lambda chosen by blocked CV, and predicts y_{i+l} from the row at i.
[[nodiscard]] inline Forecast forecast_at(const FeatureTable& table, TimeStamp i, std::size_t l) {
    const auto& cfg = table.config();
    const auto& target = table.target();
    const Frequency freq = target.freq();
    if (!on_grid(i, freq)) throw Error(ErrorCode::InvalidArgument, i.to_string() + " is off the target grid");

    const auto* test_row = table.row(i);
    if (!test_row || !*test_row) {
        throw Error(ErrorCode::InsufficientHistory, "no feature row can be built at " + i.to_string());
    }

    const TimeStamp last_train = advance(i, freq, -1 - static_cast<std::int64_t>(l));
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (TimeStamp t = table.first(); t <= last_train; t = advance(t, freq, 1)) {
        const auto* r = table.row(t);
        if (!r || !*r) continue;
        const Value label = target.at(advance(t, freq, static_cast<std::int64_t>(l)));
        if (!label) continue;
        rows.push_back(**r);
        y.push_back(*label);
    }
    if (cfg.sliding_window && rows.size() > *cfg.sliding_window) {
        const auto drop = static_cast<std::ptrdiff_t>(rows.size() - *cfg.sliding_window);
        rows.erase(rows.begin(), rows.begin() + drop);
        y.erase(y.begin(), y.begin() + drop);
    }
    if (rows.size() < 2 * cfg.lasso.folds) {
        throw Error(ErrorCode::InsufficientHistory, std::to_string(rows.size()) +
                    " training rows before " + i.to_string() + " (horizon " + std::to_string(l) + ")");
    }

    const DesignMatrix X = DesignMatrix::from_rows(rows, table.labels());
    const CvResult cv = select_lambda_cv(X, y, cfg.lasso.folds, cfg.lasso.n_lambdas, cfg.lasso.eps_ratio,
                                         cfg.lasso.options(), cfg.lasso.rule);
    Forecast fc;
    fc.feature_time = i;
    fc.target_time = advance(i, freq, static_cast<std::int64_t>(l));
    fc.horizon = l;
    fc.y_pred = cv.fit.predict(**test_row);
    fc.lambda = cv.lambda_star;
    fc.nonzero_count = cv.fit.nonzero_count();
    fc.n_train = rows.size();
    return fc;
}

struct PredictionRecord {
    TimeStamp timestamp;  // prediction time i
    double y_true = 0.0;  // y_{i+l}
    double y_pred = 0.0;
    double lambda = 0.0;
    std::size_t nonzero_count = 0;
};

struct HorizonReport {
    std::size_t horizon = 0;
    std::vector<PredictionRecord> records;
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t n_test = 0;
    std::size_t n_skipped = 0;
};

struct BacktestReport {
    Variant variant = Variant::Original;
    std::vector<HorizonReport> horizons;
};

using EvaluationSpan = DateRange;


/// Expanding-window walk-forward backtest: for each horizon and each test time i in the
/// span, retrain on information available at i-1 and predict y_{i+l}. Test times whose
/// row, actual value, or training set is unavailable are counted as skipped.
[[nodiscard]] inline BacktestReport walk_forward(const TimeSeries& target, const std::vector<TimeSeries>& exog,
                                                 const ModelConfig& cfg, EvaluationSpan span) {
    cfg.validate();
    const Frequency freq = target.freq();
    if (!on_grid(span.start, freq) || !on_grid(span.end, freq) || span.end < span.start) {
        throw Error(ErrorCode::InvalidArgument, "invalid evaluation span");
    }
    const FeatureTable table(target, exog, cfg, span.end);

    const auto n_times = static_cast<std::size_t>(steps_between(span.start, span.end, freq) + 1);
    const std::size_t n_tasks = n_times * cfg.horizons.size();
    std::vector<std::optional<PredictionRecord>> results(n_tasks);

    detail::run_parallel(n_tasks, cfg.jobs, [&](std::size_t k) {
        const std::size_t l = cfg.horizons[k / n_times];
        const TimeStamp i = advance(span.start, freq, static_cast<std::int64_t>(k % n_times));
        const Value actual = target.at(advance(i, freq, static_cast<std::int64_t>(l)));
        if (!actual) return;
        try {
            const Forecast fc = forecast_at(table, i, l);
            results[k] = PredictionRecord{i, *actual, fc.y_pred, fc.lambda, fc.nonzero_count};
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InsufficientHistory) throw;
        }
    });

    BacktestReport report;
    report.variant = cfg.variant;
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
        HorizonReport hr;
        hr.horizon = cfg.horizons[h];
        std::vector<double> pred, truth;
        for (std::size_t k = h * n_times; k < (h + 1) * n_times; ++k) {
            if (!results[k]) {
                ++hr.n_skipped;
                continue;
            }
            hr.records.push_back(*results[k]);
            pred.push_back(results[k]->y_pred);
            truth.push_back(results[k]->y_true);
        }
        if (hr.records.empty()) {
            throw Error(ErrorCode::InsufficientHistory, "horizon " + std::to_string(hr.horizon) +
                        " has no testable time in the evaluation span");
        }
        hr.n_test = hr.records.size();
        hr.rmse = rmse(pred, truth);
        hr.mae = mae(pred, truth);
        report.horizons.push_back(std::move(hr));
    }
    return report;
}

}  // namespace gprism
