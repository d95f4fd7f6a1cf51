#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace worldcore {

/// Every failure the engine can report. The gateway and the CLI map these
/// one-to-one onto HTTP statuses and exit codes.
enum class ErrorClass : std::uint8_t {
    ParseError,
    SchemaError,
    TypeError,
    ConstraintViolation,
    EvalError,
    UnknownAction,
    ArgTypeError,
    GuardViolation,
    CorruptLog,
    ZeroSupport,
    UnknownFeature,
    TerminologyMismatch,
    DecayActive,
    UnknownAgent,
    UnknownRole,
    Unauthorized,
    ScenarioError,
    IOFailure,
};

std::string_view to_string(ErrorClass cls) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, std::string location, std::string reason);

    ErrorClass error_class() const noexcept { return cls_; }
    /// Declaration or object the error is about ("actions.withdraw", "e3", a seq number...).
    const std::string& location() const noexcept { return location_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    ErrorClass cls_;
    std::string location_;
    std::string reason_;
};

[[noreturn]] inline void fail(ErrorClass cls, std::string location, std::string reason) {
    throw Error(cls, std::move(location), std::move(reason));
}

}  // namespace worldcore
