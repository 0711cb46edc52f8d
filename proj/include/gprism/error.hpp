#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gprism {

enum class ErrorCode {
    InvalidArgument,
    MixedFrequency,
    EmptyIntersection,
    InsufficientHistory,
    SeriesTooShort,
    MissingInWindow,
    ZeroBaseline,
    WindowTooShort,
    NonFiniteInput,
    DimensionMismatch,
    TooFewRows,
    MissingExogenous,
    EmptyMatrix,
    LengthMismatch,
    InvalidOperatorSpec,
    MalformedCsv,
    NonMonotoneDates,
    UnknownLocation,
    ScoreOutOfRange,
    HttpError,
    DecodeError,
    RateLimited,
    ConfigError,
    ConfigSyntax,
    IoError,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::MixedFrequency: return "MixedFrequency";
        case ErrorCode::EmptyIntersection: return "EmptyIntersection";
        case ErrorCode::InsufficientHistory: return "InsufficientHistory";
        case ErrorCode::SeriesTooShort: return "SeriesTooShort";
        case ErrorCode::MissingInWindow: return "MissingInWindow";
        case ErrorCode::ZeroBaseline: return "ZeroBaseline";
        case ErrorCode::WindowTooShort: return "WindowTooShort";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::TooFewRows: return "TooFewRows";
        case ErrorCode::MissingExogenous: return "MissingExogenous";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::InvalidOperatorSpec: return "InvalidOperatorSpec";
        case ErrorCode::MalformedCsv: return "MalformedCsv";
        case ErrorCode::NonMonotoneDates: return "NonMonotoneDates";
        case ErrorCode::UnknownLocation: return "UnknownLocation";
        case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
        case ErrorCode::HttpError: return "HttpError";
        case ErrorCode::DecodeError: return "DecodeError";
        case ErrorCode::RateLimited: return "RateLimited";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::ConfigSyntax: return "ConfigSyntax";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Parse-class errors map to CLI exit code 2; everything else is a runtime/data error.
[[nodiscard]] constexpr bool is_parse_error(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedCsv:
        case ErrorCode::NonMonotoneDates:
        case ErrorCode::ScoreOutOfRange:
        case ErrorCode::DecodeError:
        case ErrorCode::InvalidOperatorSpec:
        case ErrorCode::ConfigSyntax:
            return true;
        default:
            return false;
    }
}

/// The single exception type thrown by the library. Carries a machine-readable code,
/// plus a line number for parse errors and an HTTP status for network errors.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::size_t> line = std::nullopt,
          std::optional<int> http_status = std::nullopt)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code), detail_(message), line_(line), http_status_(http_status) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }
    [[nodiscard]] std::optional<std::size_t> line() const noexcept { return line_; }
    [[nodiscard]] std::optional<int> http_status() const noexcept { return http_status_; }

private:
    ErrorCode code_;
    std::string detail_;
    std::optional<std::size_t> line_;
    std::optional<int> http_status_;
};

}  // namespace gprism
