#include "survkit/error.hpp"

namespace survkit {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonPositiveTime: return "NonPositiveTime";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::CheckpointFormat: return "CheckpointFormat";
        case ErrorCode::UnpairedInputs: return "UnpairedInputs";
        case ErrorCode::BrierWithCoxModel: return "BrierWithCoxModel";
        case ErrorCode::BadConfig: return "BadConfig";
        case ErrorCode::BadArchitecture: return "BadArchitecture";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::NonScalarOutput: return "NonScalarOutput";
        case ErrorCode::NoEvents: return "NoEvents";
        case ErrorCode::NoCases: return "NoCases";
        case ErrorCode::NoControls: return "NoControls";
        case ErrorCode::NoComparablePairs: return "NoComparablePairs";
        case ErrorCode::DegenerateCensoring: return "DegenerateCensoring";
        case ErrorCode::TooFewTimes: return "TooFewTimes";
        case ErrorCode::MissingVariance: return "MissingVariance";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::Usage: return "Usage";
    }
    return "Unknown";
}

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::Usage:
            return 1;
        case ErrorCode::ShapeMismatch:
        case ErrorCode::DomainError:
        case ErrorCode::NonScalarOutput:
        case ErrorCode::NoEvents:
        case ErrorCode::NoCases:
        case ErrorCode::NoControls:
        case ErrorCode::NoComparablePairs:
        case ErrorCode::DegenerateCensoring:
        case ErrorCode::TooFewTimes:
        case ErrorCode::MissingVariance:
        case ErrorCode::ZeroVariance:
            return 3;
        default:
            return 2;
    }
}

}  // namespace survkit
