#include "worldcore/value.hpp"

#include <algorithm>
#include <sstream>

namespace worldcore {

std::string describe(const Domain& domain) {
    switch (domain.kind) {
    case Kind::Integer: return "integer";
    case Kind::Real: return "real";
    case Kind::Boolean: return "boolean";
    case Kind::String: return "string";
    case Kind::Enum: {
        std::string out = "enum(";
        for (std::size_t i = 0; i < domain.enum_values.size(); ++i) {
            out += (i ? "|" : "") + domain.enum_values[i];
        }
        return out + ")";
    }
    case Kind::Ref: return "ref(" + domain.ref_type + ")";
    }
    return "?";
}

std::string to_display(const Value& value) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::string>) {
                return v;
            } else {
                std::ostringstream os;
                os << v;
                return os.str();
            }
        },
        value);
}

bool value_fits(const Value& value, const Domain& domain) {
    switch (domain.kind) {
    case Kind::Integer: return std::holds_alternative<std::int64_t>(value);
    case Kind::Real:
        return std::holds_alternative<double>(value) || std::holds_alternative<std::int64_t>(value);
    case Kind::Boolean: return std::holds_alternative<bool>(value);
    case Kind::String: return std::holds_alternative<std::string>(value);
    case Kind::Ref:
        return std::holds_alternative<std::string>(value) && !std::get<std::string>(value).empty();
    case Kind::Enum: {
        const auto* s = std::get_if<std::string>(&value);
        return s && std::find(domain.enum_values.begin(), domain.enum_values.end(), *s) !=
                        domain.enum_values.end();
    }
    }
    return false;
}

Value coerce_to(const Value& value, const Domain& domain) {
    if (domain.kind == Kind::Real) {
        if (const auto* i = std::get_if<std::int64_t>(&value)) {
            return static_cast<double>(*i);
        }
    }
    return value;
}

}  // namespace worldcore
