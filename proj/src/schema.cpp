#include "worldcore/schema.hpp"

#include "worldcore/error.hpp"

#include <algorithm>
#include <set>

namespace worldcore {

using nlohmann::json;

std::string_view to_string(EditKind kind) noexcept {
    switch (kind) {
    case EditKind::CreateEntity: return "createEntity";
    case EditKind::DeleteEntity: return "deleteEntity";
    case EditKind::SetAttribute: return "setAttribute";
    case EditKind::AddRelationTuple: return "addRelationTuple";
    case EditKind::RemoveRelationTuple: return "removeRelationTuple";
    }
    return "?";
}

const EntityType* Schema::find_entity_type(const std::string& type) const {
    auto it = entity_types.find(type);
    return it == entity_types.end() ? nullptr : &it->second;
}

const ActionDecl* Schema::find_action(const std::string& action) const {
    auto it = actions.find(action);
    return it == actions.end() ? nullptr : &it->second;
}

const RelationType* Schema::find_relation(const std::string& relation) const {
    auto it = relation_types.find(relation);
    return it == relation_types.end() ? nullptr : &it->second;
}

const Domain* Schema::find_attribute(const std::string& type, const std::string& attr) const {
    const EntityType* et = find_entity_type(type);
    if (!et) {
        return nullptr;
    }
    auto it = et->attributes.find(attr);
    return it == et->attributes.end() ? nullptr : &it->second;
}

namespace {

[[noreturn]] void schema_fail(const std::string& location, const std::string& reason) {
    fail(ErrorClass::SchemaError, location, reason);
}

const json& require(const json& doc, const char* key, const std::string& location) {
    if (!doc.is_object() || !doc.contains(key)) {
        schema_fail(location, std::string("missing key '") + key + "'");
    }
    return doc.at(key);
}

std::string require_string(const json& doc, const char* key, const std::string& location) {
    const json& v = require(doc, key, location);
    if (!v.is_string()) {
        schema_fail(location, std::string("'") + key + "' must be a string");
    }
    return v.get<std::string>();
}

Expression parse_expr(const json& doc, const std::string& location) {
    if (!doc.is_string()) {
        schema_fail(location, "expression must be a string");
    }
    try {
        return Expression::parse(doc.get<std::string>());
    } catch (const Error& e) {
        schema_fail(location, std::string(e.what()));
    }
}

bool is_identifier(const std::string& name) {
    if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) {
        return false;
    }
    return std::all_of(name.begin(), name.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

void check_identifier(const std::string& name, const std::string& location) {
    static const std::set<std::string> kReserved = {"and", "or", "not", "exists", "forall",
                                                    "true", "false", "cond", "chance"};
    if (!is_identifier(name) || kReserved.count(name)) {
        schema_fail(location, "'" + name + "' is not a usable identifier");
    }
}

EffectDecl effect_from_json(const json& doc, const std::string& location) {
    const std::string op = require_string(doc, "op", location);
    EffectDecl eff;
    if (op == "create" || op == "createEntity") {
        eff.kind = EditKind::CreateEntity;
        eff.type_name = require_string(doc, "type", location);
        if (doc.contains("as")) {
            eff.bind_as = require_string(doc, "as", location);
        }
        const json& attrs = doc.value("attrs", json::object());
        if (!attrs.is_object()) {
            schema_fail(location, "'attrs' must be an object");
        }
        for (const auto& [name, expr] : attrs.items()) {
            eff.attrs.emplace_back(name, parse_expr(expr, location + ".attrs." + name));
        }
    } else if (op == "delete" || op == "deleteEntity") {
        eff.kind = EditKind::DeleteEntity;
        eff.target = parse_expr(require(doc, "target", location), location + ".target");
    } else if (op == "set" || op == "setAttribute") {
        eff.kind = EditKind::SetAttribute;
        eff.target = parse_expr(require(doc, "target", location), location + ".target");
        eff.attribute = require_string(doc, "attr", location);
        eff.value = parse_expr(require(doc, "value", location), location + ".value");
    } else if (op == "link" || op == "addRelationTuple" || op == "unlink" || op == "removeRelationTuple") {
        eff.kind = (op == "link" || op == "addRelationTuple") ? EditKind::AddRelationTuple
                                                              : EditKind::RemoveRelationTuple;
        eff.relation = require_string(doc, "relation", location);
        const json& args = require(doc, "args", location);
        if (!args.is_array()) {
            schema_fail(location, "'args' must be a list of expressions");
        }
        for (std::size_t i = 0; i < args.size(); ++i) {
            eff.args.push_back(parse_expr(args[i], location + ".args[" + std::to_string(i) + "]"));
        }
    } else {
        schema_fail(location, "unknown effect op '" + op + "'");
    }
    return eff;
}

/// Runs the typechecker and re-labels its failure as a schema diagnostic at `location`.
template <class F>
auto at_location(const std::string& location, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.error_class() == ErrorClass::SchemaError) {
            throw;
        }
        schema_fail(location, e.reason().empty() ? e.what() : e.reason());
    }
}

void validate_effects(const Schema& schema, const ActionDecl& action, TypeScope scope, const TypeOptions& opt) {
    const std::string base = "actions." + action.name + ".effects";
    for (std::size_t i = 0; i < action.effects.size(); ++i) {
        const EffectDecl& eff = action.effects[i];
        const std::string loc = base + "[" + std::to_string(i) + "]";
        auto entity_target = [&](const Expression& target) {
            Domain d = at_location(loc + ".target", [&] { return typecheck(target, schema, scope, opt); });
            if (d.kind != Kind::Ref) {
                schema_fail(loc + ".target", "effect target must be an entity reference, got " + describe(d));
            }
            return d.ref_type;
        };
        switch (eff.kind) {
        case EditKind::CreateEntity: {
            const EntityType* et = schema.find_entity_type(eff.type_name);
            if (!et) {
                schema_fail(loc, "create of undeclared entity type '" + eff.type_name + "'");
            }
            std::set<std::string> given;
            for (const auto& [attr, expr] : eff.attrs) {
                auto decl = et->attributes.find(attr);
                if (decl == et->attributes.end()) {
                    schema_fail(loc + ".attrs." + attr, "entity type '" + eff.type_name + "' has no attribute '" +
                                                            attr + "'");
                }
                Domain d = at_location(loc + ".attrs." + attr, [&] { return typecheck(expr, schema, scope, opt); });
                if (!assignable(d, decl->second)) {
                    schema_fail(loc + ".attrs." + attr,
                                "cannot assign " + describe(d) + " to " + describe(decl->second));
                }
                given.insert(attr);
            }
            for (const auto& [attr, domain] : et->attributes) {
                if (!given.count(attr)) {
                    schema_fail(loc, "create of '" + eff.type_name + "' leaves attribute '" + attr + "' unset");
                }
            }
            if (!eff.bind_as.empty()) {
                check_identifier(eff.bind_as, loc + ".as");
                for (const auto& [name, d] : scope) {
                    if (name == eff.bind_as) {
                        schema_fail(loc + ".as", "duplicate name '" + eff.bind_as + "'");
                    }
                }
                scope.emplace_back(eff.bind_as, Domain::ref(eff.type_name));
            }
            break;
        }
        case EditKind::DeleteEntity: entity_target(eff.target); break;
        case EditKind::SetAttribute: {
            const std::string type = entity_target(eff.target);
            const Domain* decl = schema.find_attribute(type, eff.attribute);
            if (!decl) {
                schema_fail(loc, "entity type '" + type + "' has no attribute '" + eff.attribute + "'");
            }
            Domain d = at_location(loc + ".value", [&] { return typecheck(eff.value, schema, scope, opt); });
            if (!assignable(d, *decl)) {
                schema_fail(loc + ".value", "cannot assign " + describe(d) + " to " + type + "." + eff.attribute +
                                                " of type " + describe(*decl));
            }
            break;
        }
        case EditKind::AddRelationTuple:
        case EditKind::RemoveRelationTuple: {
            const RelationType* rel = schema.find_relation(eff.relation);
            if (!rel) {
                schema_fail(loc, "undeclared relation '" + eff.relation + "'");
            }
            if (rel->roles.size() != eff.args.size()) {
                schema_fail(loc, "relation '" + eff.relation + "' has arity " + std::to_string(rel->roles.size()));
            }
            for (std::size_t k = 0; k < eff.args.size(); ++k) {
                const std::string aloc = loc + ".args[" + std::to_string(k) + "]";
                Domain d = at_location(aloc, [&] { return typecheck(eff.args[k], schema, scope, opt); });
                if (d.kind != Kind::Ref || d.ref_type != rel->roles[k].entity_type) {
                    schema_fail(aloc, "expected ref(" + rel->roles[k].entity_type + "), got " + describe(d));
                }
            }
            break;
        }
        }
    }
}

}  // namespace

Domain domain_from_json(const json& doc, const std::string& location) {
    if (doc.is_string()) {
        const auto s = doc.get<std::string>();
        if (s == "integer" || s == "int") return Domain::integer();
        if (s == "real" || s == "float") return Domain::real();
        if (s == "boolean" || s == "bool") return Domain::boolean();
        if (s == "string") return Domain::string();
        schema_fail(location, "unknown value domain '" + s + "'");
    }
    if (doc.is_object() && doc.contains("enum")) {
        const json& levels = doc.at("enum");
        if (!levels.is_array()) {
            schema_fail(location, "enum levels must be a list");
        }
        std::vector<std::string> values;
        for (const auto& l : levels) {
            if (!l.is_string()) {
                schema_fail(location, "enum levels must be strings");
            }
            values.push_back(l.get<std::string>());
        }
        return Domain::enumeration(std::move(values));
    }
    if (doc.is_object() && doc.contains("ref")) {
        return Domain::ref(require_string(doc, "ref", location));
    }
    schema_fail(location, "malformed value domain");
}

json domain_to_json(const Domain& domain) {
    switch (domain.kind) {
    case Kind::Integer: return "integer";
    case Kind::Real: return "real";
    case Kind::Boolean: return "boolean";
    case Kind::String: return "string";
    case Kind::Enum: return json{{"enum", domain.enum_values}};
    case Kind::Ref: return json{{"ref", domain.ref_type}};
    }
    return nullptr;
}

void validate_schema(const Schema& schema) {
    const TypeOptions opt{schema.max_quantifier_depth, false};
    if (schema.max_quantifier_depth < 0) {
        schema_fail("maxQuantifierDepth", "must be non-negative");
    }

    for (const auto& [name, et] : schema.entity_types) {
        const std::string loc = "entityTypes." + name;
        check_identifier(name, loc);
        for (const auto& [attr, domain] : et.attributes) {
            check_identifier(attr, loc + "." + attr);
            if (domain.kind == Kind::Enum) {
                if (domain.enum_values.empty()) {
                    schema_fail(loc + "." + attr, "enum domain has no levels");
                }
                std::set<std::string> seen(domain.enum_values.begin(), domain.enum_values.end());
                if (seen.size() != domain.enum_values.size()) {
                    schema_fail(loc + "." + attr, "enum domain repeats a level");
                }
            }
            if (domain.kind == Kind::Ref && !schema.find_entity_type(domain.ref_type)) {
                schema_fail(loc + "." + attr, "reference to undeclared entity type '" + domain.ref_type + "'");
            }
        }
    }

    for (const auto& [name, rel] : schema.relation_types) {
        const std::string loc = "relationTypes." + name;
        check_identifier(name, loc);
        if (rel.roles.empty()) {
            schema_fail(loc, "relation needs at least one role");
        }
        std::set<std::string> roles;
        for (const auto& slot : rel.roles) {
            if (!roles.insert(slot.name).second) {
                schema_fail(loc, "duplicate role '" + slot.name + "'");
            }
            if (!schema.find_entity_type(slot.entity_type)) {
                schema_fail(loc + "." + slot.name, "role targets undeclared entity type '" + slot.entity_type + "'");
            }
        }
    }

    for (const auto& [name, action] : schema.actions) {
        const std::string loc = "actions." + name;
        check_identifier(name, loc);
        TypeScope scope;
        for (const auto& p : action.params) {
            check_identifier(p.name, loc + ".params." + p.name);
            for (const auto& [seen, d] : scope) {
                if (seen == p.name) {
                    schema_fail(loc + ".params", "duplicate parameter '" + p.name + "'");
                }
            }
            if (p.domain.kind == Kind::Ref && !schema.find_entity_type(p.domain.ref_type)) {
                schema_fail(loc + ".params." + p.name, "reference to undeclared entity type '" + p.domain.ref_type + "'");
            }
            if (p.domain.kind == Kind::Enum && p.domain.enum_values.empty()) {
                schema_fail(loc + ".params." + p.name, "enum domain has no levels");
            }
            scope.emplace_back(p.name, p.domain);
        }
        at_location(loc + ".guard", [&] {
            typecheck_predicate(action.guard, schema, scope, opt);
            return 0;
        });
        validate_effects(schema, action, scope, opt);
    }

    std::set<std::string> constraint_names;
    for (const auto& c : schema.constraints) {
        const std::string loc = "constraints." + c.name;
        if (c.name.empty() || !constraint_names.insert(c.name).second) {
            schema_fail(loc, "constraint names must be non-empty and unique");
        }
        at_location(loc, [&] {
            typecheck_predicate(c.expr, schema, {}, opt);
            return 0;
        });
    }
}

Schema define_schema(const json& doc) {
    if (!doc.is_object()) {
        schema_fail("schema", "schema section must be an object");
    }
    Schema schema;
    schema.name = doc.value("name", std::string("world"));
    schema.max_quantifier_depth = doc.value("maxQuantifierDepth", 3);

    const json& types = doc.value("entityTypes", json::object());
    for (const auto& [name, attrs] : types.items()) {
        const std::string loc = "entityTypes." + name;
        if (!attrs.is_object()) {
            schema_fail(loc, "attribute declarations must be an object");
        }
        EntityType et{name, {}};
        for (const auto& [attr, domain] : attrs.items()) {
            et.attributes.emplace(attr, domain_from_json(domain, loc + "." + attr));
        }
        schema.entity_types.emplace(name, std::move(et));
    }

    const json& rels = doc.value("relationTypes", json::object());
    for (const auto& [name, roles] : rels.items()) {
        const std::string loc = "relationTypes." + name;
        if (!roles.is_array()) {
            schema_fail(loc, "relation roles must be a list of {role, type}");
        }
        RelationType rel{name, {}};
        for (const auto& slot : roles) {
            rel.roles.push_back({require_string(slot, "role", loc), require_string(slot, "type", loc)});
        }
        schema.relation_types.emplace(name, std::move(rel));
    }

    const json& actions = doc.value("actions", json::object());
    for (const auto& [name, decl] : actions.items()) {
        const std::string loc = "actions." + name;
        ActionDecl action;
        action.name = name;
        for (const auto& p : decl.value("params", json::array())) {
            const std::string pname = require_string(p, "name", loc + ".params");
            action.params.push_back({pname, domain_from_json(require(p, "type", loc + ".params." + pname),
                                                              loc + ".params." + pname)});
        }
        if (decl.contains("guard")) {
            action.guard = parse_expr(decl.at("guard"), loc + ".guard");
        }
        const json& effects = decl.value("effects", json::array());
        for (std::size_t i = 0; i < effects.size(); ++i) {
            action.effects.push_back(effect_from_json(effects[i], loc + ".effects[" + std::to_string(i) + "]"));
        }
        schema.actions.emplace(name, std::move(action));
    }

    const json& constraints = doc.value("constraints", json::array());
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        const std::string loc = "constraints[" + std::to_string(i) + "]";
        const std::string cname = require_string(constraints[i], "name", loc);
        schema.constraints.push_back({cname, parse_expr(require(constraints[i], "expr", loc), "constraints." + cname)});
    }

    validate_schema(schema);
    return schema;
}

}  // namespace worldcore
