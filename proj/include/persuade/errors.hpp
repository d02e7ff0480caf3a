#pragma once

#include <stdexcept>
#include <string>

namespace persuade {

enum class Errc {
    ParseError,
    IoError,
    NonPositivePrincipalPayoff,
    DiscountOutOfRange,
    PriorOutOfRange,
    DuplicateAction,
    TargetActionMissing,
    InvalidCutoffs,
    LadderDiverged,
    NoIntersection,
    DegenerateLine,
    OutsideW,
    DegenerateSystem,
    EmptyQ1,
    InfeasibleState,
    MaxItersExceeded,
    PriorOutsideQ1,
    HorizonTooSmall,
    OutOfDomain,
};

const char* errc_name(Errc c);

// Process exit code the CLI maps this error class to:
// 1 = I/O or parse, 2 = validation or internal precondition failure.
// (Verification failures are reported as data and exit 3 without throwing.)
int errc_exit_code(Errc c);

class SolverError : public std::runtime_error {
public:
    SolverError(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const noexcept { return code_; }
    int exit_code() const noexcept { return errc_exit_code(code_); }

private:
    Errc code_;
};

}  // namespace persuade
