#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nlsd {

/// Failure categories raised by the library. The CLI maps input-side codes to
/// exit status 2 and everything else to exit status 1.
enum class ErrorCode {
    Io,
    BadConfig,
    MissingData,
    OutOfRange,
    GridError,
    NotExterior,
    EmptyValidation,
    BadBandwidth,
    BadAge,
    DegenerateFit,
    InsufficientHistory,
    ShortHistory,
    NumericalBlowup,
    NotDiagonallyDominant,
    SingularSystem,
    HypothesisViolated,
    BoundUnavailable,
    ShortHorizon,
    DegenerateStd,
    BadLevel,
    DivisionGuard,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for errors caused by bad user input (files, configuration, data grid).
bool is_input_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace nlsd
