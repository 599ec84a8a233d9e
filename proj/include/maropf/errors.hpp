#pragma once

#include <stdexcept>
#include <string>

namespace maropf {

enum class ErrorCode {
    CycleDetected,
    DisconnectedBus,
    InvalidIndex,
    NonPositiveBase,
    ParseError,
    SchemaVersionUnsupported,
    UnknownId,
    LengthMismatch,
    SingularSystem,
    ZeroPathImpedance,
    NoBreakFound,
    InconsistentActivation,
    InfeasibleBigM,
    UnknownPair,
    InvalidProgram,
    IterLimit,
    NumericalBreakdown,
    Diverged,
    NonPositiveVoltage,
    NotConverged,
    UnconvergedState,
    NoRealSolution,
    IterationCap,
    Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace maropf
