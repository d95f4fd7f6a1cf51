#include "worldcore/error.hpp"

namespace worldcore {

std::string_view to_string(ErrorClass cls) noexcept {
    switch (cls) {
    case ErrorClass::ParseError: return "ParseError";
    case ErrorClass::SchemaError: return "SchemaError";
    case ErrorClass::TypeError: return "TypeError";
    case ErrorClass::ConstraintViolation: return "ConstraintViolation";
    case ErrorClass::EvalError: return "EvalError";
    case ErrorClass::UnknownAction: return "UnknownAction";
    case ErrorClass::ArgTypeError: return "ArgTypeError";
    case ErrorClass::GuardViolation: return "GuardViolation";
    case ErrorClass::CorruptLog: return "CorruptLog";
    case ErrorClass::ZeroSupport: return "ZeroSupport";
    case ErrorClass::UnknownFeature: return "UnknownFeature";
    case ErrorClass::TerminologyMismatch: return "TerminologyMismatch";
    case ErrorClass::DecayActive: return "DecayActive";
    case ErrorClass::UnknownAgent: return "UnknownAgent";
    case ErrorClass::UnknownRole: return "UnknownRole";
    case ErrorClass::Unauthorized: return "Unauthorized";
    case ErrorClass::ScenarioError: return "ScenarioError";
    case ErrorClass::IOFailure: return "IOFailure";
    }
    return "Unknown";
}

namespace {
std::string compose(ErrorClass cls, const std::string& location, const std::string& reason) {
    std::string msg(to_string(cls));
    if (!location.empty()) {
        msg += "(" + location + ")";
    }
    if (!reason.empty()) {
        msg += ": " + reason;
    }
    return msg;
}
}  // namespace

Error::Error(ErrorClass cls, std::string location, std::string reason)
    : std::runtime_error(compose(cls, location, reason)),
      cls_(cls),
      location_(std::move(location)),
      reason_(std::move(reason)) {}

}  // namespace worldcore
