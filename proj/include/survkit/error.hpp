#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace survkit {

enum class ErrorCode {
    // data
    NonPositiveTime,
    NonFiniteValue,
    LengthMismatch,
    EmptyDataset,
    MissingColumn,
    ParseError,
    IoError,
    CheckpointFormat,
    UnpairedInputs,
    BrierWithCoxModel,
    BadConfig,
    BadArchitecture,
    // numeric
    ShapeMismatch,
    DomainError,
    NonScalarOutput,
    NoEvents,
    NoCases,
    NoControls,
    NoComparablePairs,
    DegenerateCensoring,
    TooFewTimes,
    MissingVariance,
    ZeroVariance,
    // cli
    Usage,
};

std::string_view to_string(ErrorCode code);

// Process exit code for the command-line tool: 1 usage, 2 data, 3 numeric.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::optional<std::size_t> row = std::nullopt)
        : std::runtime_error(message), code_(code), row_(row) {}

    ErrorCode code() const { return code_; }
    std::optional<std::size_t> row() const { return row_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> row_;
};

}  // namespace survkit
