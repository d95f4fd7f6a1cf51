#pragma once

#include "worldcore/error.hpp"
#include "worldcore/expr.hpp"
#include "worldcore/schema.hpp"

#include <json.hpp>

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace worldcore {

struct Entity {
    std::string type;
    std::map<std::string, Value> attrs;

    bool operator==(const Entity&) const = default;
};

struct RelationTuple {
    std::string relation;
    std::vector<std::string> ids;

    auto operator<=>(const RelationTuple&) const = default;
};

/// One point of the state space. Treated as an immutable value once committed.
struct WorldState {
    std::uint64_t version = 0;
    std::uint64_t next_id = 1;  // engine-assigned ids are "e<next_id>"
    std::map<std::string, Entity> entities;
    std::set<RelationTuple> relations;

    bool operator==(const WorldState&) const = default;
};

/// A primitive edit as actually applied, with concrete values.
struct Edit {
    EditKind kind = EditKind::SetAttribute;
    std::string id;                      // create, delete, set
    std::string type;                    // create
    std::map<std::string, Value> attrs;  // create
    std::string attribute;               // set
    Value value{};                       // set
    std::string relation;                // add/remove tuple
    std::vector<std::string> ids;        // add/remove tuple

    bool operator==(const Edit&) const = default;
};

struct Transaction {
    std::uint64_t seq = 0;
    std::string action;
    Bindings args;
    std::vector<Edit> delta;
    std::uint64_t timestamp = 0;  // logical clock; equals seq

    bool operator==(const Transaction&) const = default;
};

/// Builds the version-0 state from the "init" section: {"entities": [{"id", "type", "attrs"}],
/// "relations": [{"relation", "args": [ids]}]}. Throws TypeError or ConstraintViolation.
WorldState init_state(const Schema& schema, const nlohmann::json& init);

struct AppliedAction {
    WorldState state;
    Transaction txn;
};

/// Guard on the pre-state, effects in order, then the full constraint set on the candidate.
/// Any failure throws (UnknownAction, ArgTypeError, GuardViolation, ConstraintViolation,
/// EvalError) and the caller's state is untouched.
AppliedAction apply_action(const WorldState& state, const Schema& schema, const std::string& action,
                           const Bindings& args);

/// Applies one recorded edit. Throws Error(CorruptLog) when it does not fit the state.
void apply_edit(WorldState& state, const Schema& schema, const Edit& edit);

/// Re-applies deltas (not guards) in order. Throws CorruptLog(seq) on a gap or a bad delta.
WorldState replay(const Schema& schema, const nlohmann::json& init, const std::vector<Transaction>& log);

/// Domains, referential integrity and every declared constraint.
void check_state(const Schema& schema, const WorldState& state);

/// Sorted-key, whitespace-free JSON of the state.
std::string canonical_json(const WorldState& state);

/// Lowercase hex SHA-256 of canonical_json.
std::string state_hash(const WorldState& state);

nlohmann::json value_to_json(const Value& value);
/// Typed decode; throws Error(cls) at `location` when `doc` does not fit `domain`.
Value value_from_json(const nlohmann::json& doc, const Domain& domain, const std::string& location,
                      ErrorClass cls = ErrorClass::TypeError);
/// Shape-only decode (JSON integers become integers, other numbers reals); nullopt for
/// anything that is not a scalar.
std::optional<Value> scalar_from_json(const nlohmann::json& doc);

nlohmann::json bindings_to_json(const Bindings& bindings);

nlohmann::json edit_to_json(const Edit& edit);
/// Throws Error(CorruptLog) at `location` on malformed input.
Edit edit_from_json(const nlohmann::json& doc, const std::string& location);
nlohmann::json transaction_to_json(const Transaction& txn);
Transaction transaction_from_json(const nlohmann::json& doc);

}  // namespace worldcore
