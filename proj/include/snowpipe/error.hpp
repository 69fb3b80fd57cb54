#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace snowpipe {

enum class ErrorCode {
    MissingFile,
    IoError,
    LengthMismatch,
    DimensionMismatch,
    BadAcquisitionCount,
    SchemaError,
    ValueOutOfRange,
    MaskNotValid,
    TooFewRows,
    ShapeMismatch,
    EmptyBatch,
    NonFiniteLoss,
    ZeroVariance,
    BadRange,
    DisjointnessViolation,
    TooSmall,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// CLI can map it to an exit status and tests can assert on the exact kind.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadAcquisitionCount: return "BadAcquisitionCount";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::MaskNotValid: return "MaskNotValid";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::DisjointnessViolation: return "DisjointnessViolation";
    case ErrorCode::TooSmall: return "TooSmall";
    }
    return "Unknown";
}

} // namespace snowpipe
