#include "maropf/errors.hpp"

namespace maropf {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::CycleDetected: return "CycleDetected";
        case ErrorCode::DisconnectedBus: return "DisconnectedBus";
        case ErrorCode::InvalidIndex: return "InvalidIndex";
        case ErrorCode::NonPositiveBase: return "NonPositiveBase";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::SchemaVersionUnsupported: return "SchemaVersionUnsupported";
        case ErrorCode::UnknownId: return "UnknownId";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::ZeroPathImpedance: return "ZeroPathImpedance";
        case ErrorCode::NoBreakFound: return "NoBreakFound";
        case ErrorCode::InconsistentActivation: return "InconsistentActivation";
        case ErrorCode::InfeasibleBigM: return "InfeasibleBigM";
        case ErrorCode::UnknownPair: return "UnknownPair";
        case ErrorCode::InvalidProgram: return "InvalidProgram";
        case ErrorCode::IterLimit: return "IterLimit";
        case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
        case ErrorCode::Diverged: return "Diverged";
        case ErrorCode::NonPositiveVoltage: return "NonPositiveVoltage";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::UnconvergedState: return "UnconvergedState";
        case ErrorCode::NoRealSolution: return "NoRealSolution";
        case ErrorCode::IterationCap: return "IterationCap";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace maropf
