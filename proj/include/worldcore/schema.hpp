#pragma once

#include "worldcore/expr.hpp"
#include "worldcore/value.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace worldcore {

struct EntityType {
    std::string name;
    std::map<std::string, Domain> attributes;
};

struct RoleSlot {
    std::string name;
    std::string entity_type;
};

struct RelationType {
    std::string name;
    std::vector<RoleSlot> roles;
};

/// The five primitive state edits. Effects declare them, transaction deltas record them.
enum class EditKind : std::uint8_t { CreateEntity, DeleteEntity, SetAttribute, AddRelationTuple, RemoveRelationTuple };

std::string_view to_string(EditKind kind) noexcept;

struct EffectDecl {
    EditKind kind = EditKind::SetAttribute;
    std::string type_name;                                  // create
    std::string bind_as;                                    // create: name the new id for later effects
    std::vector<std::pair<std::string, Expression>> attrs;  // create
    Expression target;                                      // delete, set: evaluates to an entity ref
    std::string attribute;                                  // set
    Expression value;                                       // set
    std::string relation;                                   // add/remove tuple
    std::vector<Expression> args;                           // add/remove tuple
};

struct Param {
    std::string name;
    Domain domain;
};

struct ActionDecl {
    std::string name;
    std::vector<Param> params;
    Expression guard;
    std::vector<EffectDecl> effects;
};

struct Constraint {
    std::string name;
    Expression expr;
};

/// The explicit ontology: entity types, relation types, guarded actions, state invariants.
struct Schema {
    std::string name = "world";
    std::map<std::string, EntityType> entity_types;
    std::map<std::string, RelationType> relation_types;
    std::map<std::string, ActionDecl> actions;
    std::vector<Constraint> constraints;
    int max_quantifier_depth = 3;

    const EntityType* find_entity_type(const std::string& type) const;
    const ActionDecl* find_action(const std::string& action) const;
    const RelationType* find_relation(const std::string& relation) const;
    /// Domain of type.attr, or nullptr.
    const Domain* find_attribute(const std::string& type, const std::string& attr) const;
};

/// Parses and validates the "schema" section of a scenario file.
/// Throws Error(SchemaError) naming the offending declaration.
Schema define_schema(const nlohmann::json& doc);

/// Validates an already-built Schema (used by define_schema and programmatic construction).
void validate_schema(const Schema& schema);

Domain domain_from_json(const nlohmann::json& doc, const std::string& location);
nlohmann::json domain_to_json(const Domain& domain);

}  // namespace worldcore
