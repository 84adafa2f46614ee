#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace phasebal {

enum class ErrorCode {
    InvalidArgument,
    CyclicTopology,
    DisconnectedNode,
    UnknownNode,
    DuplicateNode,
    NonPositiveLength,
    InvalidImpedance,
    SignConventionViolation,
    NonConvergence,
    VoltageCollapse,
    UnconvergedSolution,
    ZeroPositiveSequence,
    UnknownNorm,
    SocUnderflow,
    SocOverflow,
    RatingExceeded,
    UnsupportedNode,
    ConfigInvalid,
    SchemaMismatch,
    NonMonotonicTimestamps,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. `subject()` names the offending
/// element (node, segment, field, battery) when there is one.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string subject = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& subject() const noexcept { return subject_; }

private:
    ErrorCode code_;
    std::string subject_;
};

/// Raised by the load-flow solvers. Carries the iteration state and, when
/// raised inside a time-stepped run, the timestep index.
class SolverError : public Error {
public:
    SolverError(ErrorCode code, std::string message, int iterations, double residual_pu);

    int iterations() const noexcept { return iterations_; }
    double residual_pu() const noexcept { return residual_pu_; }
    std::optional<int> timestep() const noexcept { return timestep_; }

    /// Copy of this error annotated with the failing timestep.
    SolverError at_timestep(int step) const;

private:
    int iterations_;
    double residual_pu_;
    std::optional<int> timestep_;
};

}  // namespace phasebal
