#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace worldcore {

/// Runtime value of an attribute, parameter or expression. Enum levels and
/// entity references are carried as strings; their Domain says which.
using Value = std::variant<bool, std::int64_t, double, std::string>;

enum class Kind : std::uint8_t { Integer, Real, Boolean, String, Enum, Ref };

/// Declared value domain of an attribute, parameter or relation role.
struct Domain {
    Kind kind = Kind::Boolean;
    std::vector<std::string> enum_values;  // Kind::Enum
    std::string ref_type;                  // Kind::Ref

    static Domain integer() { return {Kind::Integer, {}, {}}; }
    static Domain real() { return {Kind::Real, {}, {}}; }
    static Domain boolean() { return {Kind::Boolean, {}, {}}; }
    static Domain string() { return {Kind::String, {}, {}}; }
    static Domain enumeration(std::vector<std::string> values) { return {Kind::Enum, std::move(values), {}}; }
    static Domain ref(std::string type) { return {Kind::Ref, {}, std::move(type)}; }

    bool is_numeric() const noexcept { return kind == Kind::Integer || kind == Kind::Real; }
    bool is_textual() const noexcept { return kind == Kind::String || kind == Kind::Enum; }

    bool operator==(const Domain&) const = default;
};

/// "integer", "enum(a|b)", "ref(Account)" ...
std::string describe(const Domain& domain);

/// Human-readable rendering used in diagnostics and NL text.
std::string to_display(const Value& value);

/// True when `value` has the runtime shape of `domain` (refs are not checked for liveness).
bool value_fits(const Value& value, const Domain& domain);

/// Integers widen to reals; everything else passes through unchanged.
Value coerce_to(const Value& value, const Domain& domain);

}  // namespace worldcore
