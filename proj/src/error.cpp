#include "simarr/error.hpp"

namespace simarr {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::UnstableSystem: return "UnstableSystem";
        case ErrorCode::OrderingViolated: return "OrderingViolated";
        case ErrorCode::Degenerate: return "Degenerate";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::MethodUnstable: return "MethodUnstable";
        case ErrorCode::InsufficientCycles: return "InsufficientCycles";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
    }
    return "Error";
}

}  // namespace simarr
