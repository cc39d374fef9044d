#include "nlsd/error.hpp"

namespace nlsd {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::MissingData: return "MissingData";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::GridError: return "GridError";
    case ErrorCode::NotExterior: return "NotExterior";
    case ErrorCode::EmptyValidation: return "EmptyValidation";
    case ErrorCode::BadBandwidth: return "BadBandwidth";
    case ErrorCode::BadAge: return "BadAge";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::ShortHistory: return "ShortHistory";
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::NotDiagonallyDominant: return "NotDiagonallyDominant";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::BoundUnavailable: return "BoundUnavailable";
    case ErrorCode::ShortHorizon: return "ShortHorizon";
    case ErrorCode::DegenerateStd: return "DegenerateStd";
    case ErrorCode::BadLevel: return "BadLevel";
    case ErrorCode::DivisionGuard: return "DivisionGuard";
    }
    return "Unknown";
}

bool is_input_error(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Io:
    case ErrorCode::BadConfig:
    case ErrorCode::MissingData:
    case ErrorCode::OutOfRange:
    case ErrorCode::GridError:
    case ErrorCode::EmptyValidation:
    case ErrorCode::BadBandwidth:
    case ErrorCode::BadLevel:
    case ErrorCode::InsufficientHistory:
    case ErrorCode::ShortHistory:
        return true;
    default:
        return false;
    }
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_{code} {}

} // namespace nlsd
