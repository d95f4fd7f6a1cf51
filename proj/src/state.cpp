#include "worldcore/state.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>

namespace worldcore {

using nlohmann::json;

namespace {

/// Numeric suffix of an engine-style id "e<n>", or 0.
std::uint64_t engine_id_number(const std::string& id) {
    if (id.size() < 2 || id[0] != 'e' || id.size() > 20) {
        return 0;
    }
    std::uint64_t n = 0;
    for (std::size_t i = 1; i < id.size(); ++i) {
        if (id[i] < '0' || id[i] > '9') {
            return 0;
        }
        n = n * 10 + static_cast<std::uint64_t>(id[i] - '0');
    }
    return n;
}

std::string allocate_id(WorldState& state) {
    std::string id;
    do {
        id = "e" + std::to_string(state.next_id++);
    } while (state.entities.count(id));
    return id;
}

bool finite_value(const Value& v) {
    const auto* d = std::get_if<double>(&v);
    return !d || std::isfinite(*d);
}

/// Domains, attribute completeness, referential integrity. Reports through `cls`.
void check_integrity(const Schema& schema, const WorldState& state, ErrorClass cls) {
    auto live_of_type = [&](const std::string& id, const std::string& type) {
        auto it = state.entities.find(id);
        return it != state.entities.end() && it->second.type == type;
    };
    for (const auto& [id, ent] : state.entities) {
        const EntityType* et = schema.find_entity_type(ent.type);
        if (!et) {
            fail(cls, id, "undeclared entity type '" + ent.type + "'");
        }
        if (ent.attrs.size() != et->attributes.size()) {
            fail(cls, id, "attribute set does not match entity type '" + ent.type + "'");
        }
        for (const auto& [attr, domain] : et->attributes) {
            auto v = ent.attrs.find(attr);
            if (v == ent.attrs.end()) {
                fail(cls, id + "." + attr, "missing attribute");
            }
            if (!value_fits(v->second, domain) || !finite_value(v->second) ||
                (domain.kind == Kind::Real && !std::holds_alternative<double>(v->second))) {
                fail(cls, id + "." + attr, "value " + to_display(v->second) + " outside " + describe(domain));
            }
            if (domain.kind == Kind::Ref && !live_of_type(std::get<std::string>(v->second), domain.ref_type)) {
                fail(cls, id + "." + attr,
                     "reference '" + std::get<std::string>(v->second) + "' is not a live " + domain.ref_type);
            }
        }
    }
    for (const auto& tuple : state.relations) {
        const RelationType* rel = schema.find_relation(tuple.relation);
        std::string where = tuple.relation + "(";
        for (std::size_t i = 0; i < tuple.ids.size(); ++i) {
            where += (i ? "," : "") + tuple.ids[i];
        }
        where += ")";
        if (!rel || rel->roles.size() != tuple.ids.size()) {
            fail(cls, where, "tuple does not match a declared relation");
        }
        for (std::size_t i = 0; i < tuple.ids.size(); ++i) {
            if (!live_of_type(tuple.ids[i], rel->roles[i].entity_type)) {
                fail(cls, where, "role '" + rel->roles[i].name + "' is not a live " + rel->roles[i].entity_type);
            }
        }
    }
}

void check_constraints(const Schema& schema, const WorldState& state) {
    for (const auto& c : schema.constraints) {
        if (!eval_predicate(state, c.expr)) {
            fail(ErrorClass::ConstraintViolation, c.name, c.expr.text());
        }
    }
}

std::string expect_entity_ref(const Value& v, const WorldState& state, const std::string& what) {
    const auto* id = std::get_if<std::string>(&v);
    if (!id || !state.entities.count(*id)) {
        fail(ErrorClass::EvalError, what, "effect target is not a live entity");
    }
    return *id;
}

}  // namespace

json value_to_json(const Value& value) {
    return std::visit([](const auto& v) { return json(v); }, value);
}

std::optional<Value> scalar_from_json(const json& doc) {
    if (doc.is_boolean()) {
        return Value(doc.get<bool>());
    }
    if (doc.is_number_integer()) {
        if (doc.is_number_unsigned() && doc.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
            return std::nullopt;
        }
        return Value(doc.get<std::int64_t>());
    }
    if (doc.is_number_float()) {
        return Value(doc.get<double>());
    }
    if (doc.is_string()) {
        return Value(doc.get<std::string>());
    }
    return std::nullopt;
}

Value value_from_json(const json& doc, const Domain& domain, const std::string& location, ErrorClass cls) {
    auto v = scalar_from_json(doc);
    if (!v || !value_fits(*v, domain)) {
        fail(cls, location, "value " + doc.dump() + " does not fit " + describe(domain));
    }
    return coerce_to(*v, domain);
}

json bindings_to_json(const Bindings& bindings) {
    json out = json::object();
    for (const auto& [name, v] : bindings) {
        out[name] = value_to_json(v);
    }
    return out;
}

WorldState init_state(const Schema& schema, const json& init) {
    WorldState state;
    if (init.is_null()) {
        return state;
    }
    if (!init.is_object()) {
        fail(ErrorClass::TypeError, "init", "init section must be an object");
    }
    for (const auto& doc : init.value("entities", json::array())) {
        if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_string() || !doc.contains("type") ||
            !doc["type"].is_string()) {
            fail(ErrorClass::TypeError, "init.entities", "each entity needs string 'id' and 'type'");
        }
        const std::string id = doc["id"].get<std::string>();
        const std::string type = doc["type"].get<std::string>();
        if (id.empty() || state.entities.count(id)) {
            fail(ErrorClass::TypeError, id, "entity ids must be unique and non-empty");
        }
        const EntityType* et = schema.find_entity_type(type);
        if (!et) {
            fail(ErrorClass::TypeError, id, "undeclared entity type '" + type + "'");
        }
        Entity ent{type, {}};
        const json& attrs = doc.value("attrs", json::object());
        for (const auto& [attr, value] : attrs.items()) {
            auto decl = et->attributes.find(attr);
            if (decl == et->attributes.end()) {
                fail(ErrorClass::TypeError, id + "." + attr, "undeclared attribute of '" + type + "'");
            }
            ent.attrs.emplace(attr, value_from_json(value, decl->second, id + "." + attr));
        }
        for (const auto& [attr, domain] : et->attributes) {
            if (!ent.attrs.count(attr)) {
                fail(ErrorClass::TypeError, id + "." + attr, "missing attribute");
            }
        }
        state.next_id = std::max(state.next_id, engine_id_number(id) + 1);
        state.entities.emplace(id, std::move(ent));
    }
    for (const auto& doc : init.value("relations", json::array())) {
        if (!doc.is_object() || !doc.contains("relation") || !doc.contains("args") || !doc["args"].is_array()) {
            fail(ErrorClass::TypeError, "init.relations", "each tuple needs 'relation' and 'args'");
        }
        RelationTuple tuple{doc["relation"].get<std::string>(), {}};
        for (const auto& a : doc["args"]) {
            if (!a.is_string()) {
                fail(ErrorClass::TypeError, tuple.relation, "tuple members must be entity ids");
            }
            tuple.ids.push_back(a.get<std::string>());
        }
        state.relations.insert(std::move(tuple));
    }
    check_integrity(schema, state, ErrorClass::TypeError);
    check_constraints(schema, state);
    return state;
}

void check_state(const Schema& schema, const WorldState& state) {
    check_integrity(schema, state, ErrorClass::ConstraintViolation);
    check_constraints(schema, state);
}

AppliedAction apply_action(const WorldState& state, const Schema& schema, const std::string& action,
                           const Bindings& args) {
    const ActionDecl* decl = schema.find_action(action);
    if (!decl) {
        fail(ErrorClass::UnknownAction, action, "no such action");
    }

    Bindings env;
    for (const auto& p : decl->params) {
        auto it = args.find(p.name);
        const std::string where = action + "." + p.name;
        if (it == args.end()) {
            fail(ErrorClass::ArgTypeError, where, "missing argument");
        }
        if (!value_fits(it->second, p.domain)) {
            fail(ErrorClass::ArgTypeError, where, to_display(it->second) + " does not fit " + describe(p.domain));
        }
        if (p.domain.kind == Kind::Ref) {
            auto ent = state.entities.find(std::get<std::string>(it->second));
            if (ent == state.entities.end() || ent->second.type != p.domain.ref_type) {
                fail(ErrorClass::ArgTypeError, where, "'" + to_display(it->second) + "' is not a live " + p.domain.ref_type);
            }
        }
        env.emplace(p.name, coerce_to(it->second, p.domain));
    }
    for (const auto& [name, v] : args) {
        if (!env.count(name)) {
            fail(ErrorClass::ArgTypeError, action + "." + name, "unexpected argument");
        }
    }

    if (!eval_predicate(state, decl->guard, env)) {
        fail(ErrorClass::GuardViolation, action, decl->guard.text());
    }

    AppliedAction out{state, {}};
    WorldState& next = out.state;
    Transaction& txn = out.txn;
    txn.seq = state.version + 1;
    txn.timestamp = txn.seq;
    txn.action = action;
    txn.args = env;

    for (const auto& eff : decl->effects) {
        Edit edit;
        edit.kind = eff.kind;
        switch (eff.kind) {
        case EditKind::CreateEntity: {
            const EntityType& et = *schema.find_entity_type(eff.type_name);
            for (const auto& [attr, expr] : eff.attrs) {
                edit.attrs.emplace(attr, coerce_to(evaluate(expr, next, env), et.attributes.at(attr)));
            }
            edit.id = allocate_id(next);
            edit.type = eff.type_name;
            next.entities.emplace(edit.id, Entity{edit.type, edit.attrs});
            if (!eff.bind_as.empty()) {
                env[eff.bind_as] = edit.id;
            }
            break;
        }
        case EditKind::DeleteEntity:
            edit.id = expect_entity_ref(evaluate(eff.target, next, env), next, action);
            next.entities.erase(edit.id);
            break;
        case EditKind::SetAttribute: {
            edit.id = expect_entity_ref(evaluate(eff.target, next, env), next, action);
            Entity& ent = next.entities.at(edit.id);
            edit.attribute = eff.attribute;
            edit.value = coerce_to(evaluate(eff.value, next, env), *schema.find_attribute(ent.type, eff.attribute));
            ent.attrs[edit.attribute] = edit.value;
            break;
        }
        case EditKind::AddRelationTuple:
        case EditKind::RemoveRelationTuple: {
            RelationTuple tuple{eff.relation, {}};
            for (const auto& a : eff.args) {
                Value v = evaluate(a, next, env);
                const auto* id = std::get_if<std::string>(&v);
                if (!id) {
                    fail(ErrorClass::EvalError, action, "relation member is not an entity");
                }
                tuple.ids.push_back(*id);
            }
            const bool changed = eff.kind == EditKind::AddRelationTuple ? next.relations.insert(tuple).second
                                                                        : next.relations.erase(tuple) > 0;
            if (!changed) {
                continue;  // nothing applied, nothing recorded
            }
            edit.relation = tuple.relation;
            edit.ids = std::move(tuple.ids);
            break;
        }
        }
        txn.delta.push_back(std::move(edit));
    }

    next.version = state.version + 1;
    check_state(schema, next);
    return out;
}

void apply_edit(WorldState& state, const Schema& schema, const Edit& edit) {
    auto corrupt = [](const std::string& reason) -> void { fail(ErrorClass::CorruptLog, "", reason); };
    switch (edit.kind) {
    case EditKind::CreateEntity: {
        const EntityType* et = schema.find_entity_type(edit.type);
        if (!et || edit.id.empty() || state.entities.count(edit.id)) {
            corrupt("createEntity '" + edit.id + "' does not fit the state");
        }
        Entity ent{edit.type, {}};
        for (const auto& [attr, v] : edit.attrs) {
            auto decl = et->attributes.find(attr);
            if (decl == et->attributes.end() || !value_fits(v, decl->second)) {
                corrupt("createEntity '" + edit.id + "' has a bad attribute '" + attr + "'");
            }
            ent.attrs.emplace(attr, coerce_to(v, decl->second));
        }
        state.next_id = std::max(state.next_id, engine_id_number(edit.id) + 1);
        state.entities.emplace(edit.id, std::move(ent));
        break;
    }
    case EditKind::DeleteEntity:
        if (!state.entities.erase(edit.id)) {
            corrupt("deleteEntity of missing '" + edit.id + "'");
        }
        break;
    case EditKind::SetAttribute: {
        auto it = state.entities.find(edit.id);
        if (it == state.entities.end()) {
            corrupt("setAttribute on missing '" + edit.id + "'");
        }
        const Domain* d = schema.find_attribute(it->second.type, edit.attribute);
        if (!d || !value_fits(edit.value, *d)) {
            corrupt("setAttribute '" + edit.id + "." + edit.attribute + "' does not fit the schema");
        }
        it->second.attrs[edit.attribute] = coerce_to(edit.value, *d);
        break;
    }
    case EditKind::AddRelationTuple:
        if (!schema.find_relation(edit.relation) || !state.relations.insert({edit.relation, edit.ids}).second) {
            corrupt("addRelationTuple on '" + edit.relation + "' does not fit the state");
        }
        break;
    case EditKind::RemoveRelationTuple:
        if (!state.relations.erase({edit.relation, edit.ids})) {
            corrupt("removeRelationTuple of a missing '" + edit.relation + "' tuple");
        }
        break;
    }
}

WorldState replay(const Schema& schema, const json& init, const std::vector<Transaction>& log) {
    WorldState state = init_state(schema, init);
    std::uint64_t expected = 1;
    for (const auto& txn : log) {
        const std::string where = std::to_string(txn.seq);
        if (txn.seq != expected) {
            fail(ErrorClass::CorruptLog, std::to_string(txn.seq),
                 "expected seq " + std::to_string(expected));
        }
        try {
            for (const auto& edit : txn.delta) {
                apply_edit(state, schema, edit);
            }
            state.version = txn.seq;
            check_state(schema, state);
        } catch (const Error& e) {
            fail(ErrorClass::CorruptLog, where, e.what());
        }
        ++expected;
    }
    return state;
}

std::string canonical_json(const WorldState& state) {
    json entities = json::object();
    for (const auto& [id, ent] : state.entities) {
        json attrs = json::object();
        for (const auto& [name, v] : ent.attrs) {
            attrs[name] = value_to_json(v);
        }
        entities[id] = {{"attrs", std::move(attrs)}, {"type", ent.type}};
    }
    json relations = json::array();
    for (const auto& tuple : state.relations) {
        json row = json::array({tuple.relation});
        for (const auto& id : tuple.ids) {
            row.push_back(id);
        }
        relations.push_back(std::move(row));
    }
    json doc = {{"entities", std::move(entities)},
                {"nextId", state.next_id},
                {"relations", std::move(relations)},
                {"version", state.version}};
    return doc.dump();
}

std::string state_hash(const WorldState& state) {
    const std::string text = canonical_json(state);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
    std::string hex;
    hex.reserve(len * 2);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

json edit_to_json(const Edit& edit) {
    json doc = {{"op", std::string(to_string(edit.kind))}};
    switch (edit.kind) {
    case EditKind::CreateEntity:
        doc["id"] = edit.id;
        doc["type"] = edit.type;
        doc["attrs"] = bindings_to_json(edit.attrs);
        break;
    case EditKind::DeleteEntity: doc["id"] = edit.id; break;
    case EditKind::SetAttribute:
        doc["id"] = edit.id;
        doc["attr"] = edit.attribute;
        doc["value"] = value_to_json(edit.value);
        break;
    case EditKind::AddRelationTuple:
    case EditKind::RemoveRelationTuple:
        doc["relation"] = edit.relation;
        doc["ids"] = edit.ids;
        break;
    }
    return doc;
}

Edit edit_from_json(const json& doc, const std::string& location) {
    auto corrupt = [&](const std::string& reason) { fail(ErrorClass::CorruptLog, location, reason); };
    auto str = [&](const char* key) {
        if (!doc.contains(key) || !doc[key].is_string()) {
            corrupt(std::string("edit lacks string '") + key + "'");
        }
        return doc[key].get<std::string>();
    };
    if (!doc.is_object()) {
        corrupt("edit must be an object");
    }
    Edit edit;
    const std::string op = str("op");
    if (op == "createEntity") {
        edit.kind = EditKind::CreateEntity;
        edit.id = str("id");
        edit.type = str("type");
        if (!doc.contains("attrs") || !doc["attrs"].is_object()) {
            corrupt("createEntity lacks 'attrs'");
        }
        for (const auto& [name, v] : doc["attrs"].items()) {
            auto value = scalar_from_json(v);
            if (!value) {
                corrupt("non-scalar attribute value");
            }
            edit.attrs.emplace(name, *value);
        }
    } else if (op == "deleteEntity") {
        edit.kind = EditKind::DeleteEntity;
        edit.id = str("id");
    } else if (op == "setAttribute") {
        edit.kind = EditKind::SetAttribute;
        edit.id = str("id");
        edit.attribute = str("attr");
        auto value = doc.contains("value") ? scalar_from_json(doc["value"]) : std::nullopt;
        if (!value) {
            corrupt("setAttribute lacks a scalar 'value'");
        }
        edit.value = *value;
    } else if (op == "addRelationTuple" || op == "removeRelationTuple") {
        edit.kind = op == "addRelationTuple" ? EditKind::AddRelationTuple : EditKind::RemoveRelationTuple;
        edit.relation = str("relation");
        if (!doc.contains("ids") || !doc["ids"].is_array()) {
            corrupt("tuple edit lacks 'ids'");
        }
        for (const auto& id : doc["ids"]) {
            if (!id.is_string()) {
                corrupt("tuple ids must be strings");
            }
            edit.ids.push_back(id.get<std::string>());
        }
    } else {
        corrupt("unknown edit op '" + op + "'");
    }
    return edit;
}

json transaction_to_json(const Transaction& txn) {
    json delta = json::array();
    for (const auto& e : txn.delta) {
        delta.push_back(edit_to_json(e));
    }
    return {{"seq", txn.seq},
            {"action", txn.action},
            {"args", bindings_to_json(txn.args)},
            {"delta", std::move(delta)},
            {"timestamp", txn.timestamp}};
}

Transaction transaction_from_json(const json& doc) {
    std::string where = "?";
    if (doc.is_object() && doc.contains("seq") && doc["seq"].is_number_unsigned()) {
        where = std::to_string(doc["seq"].get<std::uint64_t>());
    }
    auto corrupt = [&](const std::string& reason) { fail(ErrorClass::CorruptLog, where, reason); };
    if (where == "?") {
        corrupt("log record lacks a sequence number");
    }
    Transaction txn;
    txn.seq = doc["seq"].get<std::uint64_t>();
    txn.timestamp = doc.value("timestamp", txn.seq);
    if (!doc.contains("action") || !doc["action"].is_string()) {
        corrupt("log record lacks 'action'");
    }
    txn.action = doc["action"].get<std::string>();
    if (doc.contains("args")) {
        if (!doc["args"].is_object()) {
            corrupt("'args' must be an object");
        }
        for (const auto& [name, v] : doc["args"].items()) {
            auto value = scalar_from_json(v);
            if (!value) {
                corrupt("non-scalar argument '" + name + "'");
            }
            txn.args.emplace(name, *value);
        }
    }
    if (!doc.contains("delta") || !doc["delta"].is_array()) {
        corrupt("log record lacks 'delta'");
    }
    for (const auto& e : doc["delta"]) {
        txn.delta.push_back(edit_from_json(e, where));
    }
    return txn;
}

}  // namespace worldcore
