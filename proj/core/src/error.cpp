#include "phasebal/error.hpp"

#include <cctype>

#include "phasebal/types.hpp"

namespace phasebal {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::CyclicTopology: return "CyclicTopology";
        case ErrorCode::DisconnectedNode: return "DisconnectedNode";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::DuplicateNode: return "DuplicateNode";
        case ErrorCode::NonPositiveLength: return "NonPositiveLength";
        case ErrorCode::InvalidImpedance: return "InvalidImpedance";
        case ErrorCode::SignConventionViolation: return "SignConventionViolation";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::VoltageCollapse: return "VoltageCollapse";
        case ErrorCode::UnconvergedSolution: return "UnconvergedSolution";
        case ErrorCode::ZeroPositiveSequence: return "ZeroPositiveSequence";
        case ErrorCode::UnknownNorm: return "UnknownNorm";
        case ErrorCode::SocUnderflow: return "SocUnderflow";
        case ErrorCode::SocOverflow: return "SocOverflow";
        case ErrorCode::RatingExceeded: return "RatingExceeded";
        case ErrorCode::UnsupportedNode: return "UnsupportedNode";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, std::string message, std::string subject)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      subject_(std::move(subject)) {}

SolverError::SolverError(ErrorCode code, std::string message, int iterations, double residual_pu)
    : Error(code, std::move(message)), iterations_(iterations), residual_pu_(residual_pu) {}

SolverError SolverError::at_timestep(int step) const {
    std::string msg = what();
    // strip the "Code: " prefix added by Error so it is not repeated
    const auto colon = msg.find(": ");
    if (colon != std::string::npos) msg = msg.substr(colon + 2);
    SolverError copy(code(), msg + " (timestep " + std::to_string(step) + ")", iterations_, residual_pu_);
    copy.timestep_ = step;
    return copy;
}

std::string_view to_string(Phase p) noexcept {
    switch (p) {
        case Phase::A: return "A";
        case Phase::B: return "B";
        case Phase::C: return "C";
    }
    return "?";
}

Phase parse_phase(std::string_view text) {
    if (text.size() == 1) {
        switch (std::toupper(static_cast<unsigned char>(text[0]))) {
            case 'A': return Phase::A;
            case 'B': return Phase::B;
            case 'C': return Phase::C;
            default: break;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown phase '" + std::string(text) + "'", std::string(text));
}

}  // namespace phasebal
