#include "persuade/errors.hpp"

namespace persuade {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::ParseError: return "ParseError";
        case Errc::IoError: return "IoError";
        case Errc::NonPositivePrincipalPayoff: return "NonPositivePrincipalPayoff";
        case Errc::DiscountOutOfRange: return "DiscountOutOfRange";
        case Errc::PriorOutOfRange: return "PriorOutOfRange";
        case Errc::DuplicateAction: return "DuplicateAction";
        case Errc::TargetActionMissing: return "TargetActionMissing";
        case Errc::InvalidCutoffs: return "InvalidCutoffs";
        case Errc::LadderDiverged: return "LadderDiverged";
        case Errc::NoIntersection: return "NoIntersection";
        case Errc::DegenerateLine: return "DegenerateLine";
        case Errc::OutsideW: return "OutsideW";
        case Errc::DegenerateSystem: return "DegenerateSystem";
        case Errc::EmptyQ1: return "EmptyQ1";
        case Errc::InfeasibleState: return "InfeasibleState";
        case Errc::MaxItersExceeded: return "MaxItersExceeded";
        case Errc::PriorOutsideQ1: return "PriorOutsideQ1";
        case Errc::HorizonTooSmall: return "HorizonTooSmall";
        case Errc::OutOfDomain: return "OutOfDomain";
    }
    return "UnknownError";
}

int errc_exit_code(Errc c) {
    switch (c) {
        case Errc::ParseError:
        case Errc::IoError:
            return 1;
        default:
            return 2;
    }
}

}  // namespace persuade
