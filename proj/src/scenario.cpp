#include "worldcore/scenario.hpp"

#include "worldcore/error.hpp"

#include <fstream>
#include <sstream>

namespace worldcore {

using nlohmann::json;

const Role* Scenario::find_role(const std::string& name) const {
    auto it = roles.find(name);
    return it == roles.end() ? nullptr : &it->second;
}

const AgentSpec* Scenario::find_agent(const std::string& id) const {
    for (const auto& a : agents) {
        if (a.id == id) {
            return &a;
        }
    }
    return nullptr;
}

namespace {

[[noreturn]] void scenario_fail(const std::string& location, const std::string& reason) {
    fail(ErrorClass::ScenarioError, location, reason);
}

std::vector<std::string> string_list(const json& doc, const std::string& location) {
    std::vector<std::string> out;
    if (doc.is_string()) {
        out.push_back(doc.get<std::string>());
        return out;
    }
    if (!doc.is_array()) {
        scenario_fail(location, "expected a list of names");
    }
    for (const auto& item : doc) {
        if (!item.is_string()) {
            scenario_fail(location, "expected a list of names");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}


void check_vocabulary(const VocabularyUse& use, const Role& role, const std::string& location) {
    for (const auto& type : use.entity_types) {
        if (!role.visible_entity_types.count(type)) {
            scenario_fail(location, "uses entity type '" + type + "' invisible to role '" + role.name + "'");
        }
    }
    for (const auto& attr : use.attributes) {
        if (!role.visible_attributes.count(attr)) {
            scenario_fail(location, "uses attribute '" + attr.first + "." + attr.second + "' invisible to role '" +
                                        role.name + "'");
        }
    }
    for (const auto& rel : use.relations) {
        if (!role.visible_relation_types.count(rel)) {
            scenario_fail(location, "uses relation '" + rel + "' invisible to role '" + role.name + "'");
        }
    }
}

template <class F>
auto relabel(const std::string& location, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.error_class() == ErrorClass::ScenarioError) {
            throw;
        }
        scenario_fail(location, e.reason().empty() ? e.what() : e.reason());
    }
}

AgentSpec agent_from_json(const json& doc, const Scenario& sc, std::size_t index) {
    const std::string loc = "agents[" + std::to_string(index) + "]";
    if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_string() || !doc.contains("role") ||
        !doc["role"].is_string()) {
        scenario_fail(loc, "agent needs string 'id' and 'role'");
    }
    AgentSpec agent;
    agent.id = doc["id"].get<std::string>();
    agent.role = doc["role"].get<std::string>();
    const std::string aloc = "agents." + agent.id;
    const Role* role = sc.find_role(agent.role);
    if (!role) {
        scenario_fail(aloc, "unknown role '" + agent.role + "'");
    }
    const TypeOptions opt{sc.schema.max_quantifier_depth, true};
    const json& policy = doc.value("policy", json::array());
    if (!policy.is_array()) {
        scenario_fail(aloc + ".policy", "policy must be a list");
    }
    for (std::size_t i = 0; i < policy.size(); ++i) {
        const std::string ploc = aloc + ".policy[" + std::to_string(i) + "]";
        const json& row = policy[i];
        if (!row.is_object() || !row.contains("do") || !row["do"].is_string()) {
            scenario_fail(ploc, "policy rule needs a tool in 'do'");
        }
        PolicyRule rule;
        rule.tool = row["do"].get<std::string>();
        if (row.contains("when")) {
            if (!row["when"].is_string()) {
                scenario_fail(ploc + ".when", "must be predicate text");
            }
            rule.when = relabel(ploc + ".when", [&] { return Expression::parse(row["when"].get<std::string>()); });
        }
        if (!role->authorized_tools.count(rule.tool)) {
            scenario_fail(ploc, "agent '" + agent.id + "' uses tool '" + rule.tool + "' not authorized for role '" +
                                    role->name + "'");
        }
        const ActionDecl& action = *sc.schema.find_action(rule.tool);

        VocabularyUse use;
        relabel(ploc + ".when", [&] {
            typecheck_predicate(rule.when, sc.schema, {}, opt, &use);
            return 0;
        });
        const TypeScope witnesses = witness_scope(rule.when);

        const json& args = row.value("args", json::object());
        if (!args.is_object()) {
            scenario_fail(ploc + ".args", "args must map parameter names to expressions");
        }
        for (const auto& p : action.params) {
            if (!args.contains(p.name) || !args[p.name].is_string()) {
                scenario_fail(ploc + ".args", "missing expression for parameter '" + p.name + "' of '" + rule.tool + "'");
            }
            const std::string xloc = ploc + ".args." + p.name;
            Expression expr = relabel(xloc, [&] { return Expression::parse(args[p.name].get<std::string>()); });
            Domain d = relabel(xloc, [&] { return typecheck(expr, sc.schema, witnesses, opt, &use); });
            if (!assignable(d, p.domain)) {
                scenario_fail(xloc, "cannot pass " + describe(d) + " as " + describe(p.domain));
            }
            rule.args.emplace_back(p.name, std::move(expr));
        }
        for (const auto& [name, expr] : args.items()) {
            if (std::none_of(action.params.begin(), action.params.end(), [&](const Param& p) { return p.name == name; })) {
                scenario_fail(ploc + ".args." + name, "'" + rule.tool + "' has no parameter '" + name + "'");
            }
        }
        check_vocabulary(use, *role, ploc);
        agent.policy.push_back(std::move(rule));
    }
    return agent;
}

std::string line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

Role role_from_json(const json& doc, const Schema& schema, const Terminology& terminology) {
    if (!doc.is_object() || !doc.contains("name") || !doc["name"].is_string()) {
        scenario_fail("roles", "role needs a string 'name'");
    }
    Role role;
    role.name = doc["name"].get<std::string>();
    const std::string loc = "roles." + role.name;

    const auto types = string_list(doc.value("visibleEntityTypes", json::array()), loc + ".visibleEntityTypes");
    for (const auto& t : types) {
        if (t == "*") {
            for (const auto& [name, et] : schema.entity_types) {
                role.visible_entity_types.insert(name);
            }
        } else if (!schema.find_entity_type(t)) {
            scenario_fail(loc + ".visibleEntityTypes", "undeclared entity type '" + t + "'");
        } else {
            role.visible_entity_types.insert(t);
        }
    }

    const auto attrs = string_list(doc.value("visibleAttributes", json::array()), loc + ".visibleAttributes");
    for (const auto& a : attrs) {
        if (a == "*") {
            for (const auto& t : role.visible_entity_types) {
                for (const auto& [attr, d] : schema.entity_types.at(t).attributes) {
                    role.visible_attributes.emplace(t, attr);
                }
            }
            continue;
        }
        const auto dot = a.find('.');
        if (dot == std::string::npos) {
            scenario_fail(loc + ".visibleAttributes", "'" + a + "' must be written Type.attribute");
        }
        const std::string type = a.substr(0, dot);
        const std::string attr = a.substr(dot + 1);
        if (!role.visible_entity_types.count(type)) {
            scenario_fail(loc + ".visibleAttributes", "'" + a + "' belongs to an entity type the role cannot see");
        }
        if (attr == "*") {
            for (const auto& [name, d] : schema.entity_types.at(type).attributes) {
                role.visible_attributes.emplace(type, name);
            }
        } else if (!schema.find_attribute(type, attr)) {
            scenario_fail(loc + ".visibleAttributes", "undeclared attribute '" + a + "'");
        } else {
            role.visible_attributes.emplace(type, attr);
        }
    }

    const auto rels = string_list(doc.value("visibleRelationTypes", json::array()), loc + ".visibleRelationTypes");
    for (const auto& r : rels) {
        if (r == "*") {
            for (const auto& [name, rel] : schema.relation_types) {
                role.visible_relation_types.insert(name);
            }
        } else if (!schema.find_relation(r)) {
            scenario_fail(loc + ".visibleRelationTypes", "undeclared relation '" + r + "'");
        } else {
            role.visible_relation_types.insert(r);
        }
    }

    const auto feats = string_list(doc.value("visibleFeatures", json::array()), loc + ".visibleFeatures");
    for (const auto& f : feats) {
        if (f == "*") {
            for (const auto& feature : terminology.features()) {
                role.visible_features.insert(feature.id);
            }
        } else if (auto id = terminology.find(f)) {
            role.visible_features.insert(*id);
        } else {
            scenario_fail(loc + ".visibleFeatures", "unknown feature '" + f + "'");
        }
    }

    const auto tools = string_list(doc.value("tools", json::array()), loc + ".tools");
    for (const auto& t : tools) {
        if (t == "*") {
            for (const auto& [name, action] : schema.actions) {
                role.authorized_tools.insert(name);
            }
        } else if (!schema.find_action(t)) {
            scenario_fail(loc + ".tools", "undeclared action '" + t + "'");
        } else {
            role.authorized_tools.insert(t);
        }
    }
    return role;
}

json role_to_json(const Role& role, const Terminology& terminology) {
    json attrs = json::array();
    for (const auto& [type, attr] : role.visible_attributes) {
        attrs.push_back(type + "." + attr);
    }
    json feats = json::array();
    for (int id : role.visible_features) {
        feats.push_back(terminology.at(id).name);
    }
    return {{"name", role.name},
            {"visibleEntityTypes", role.visible_entity_types},
            {"visibleAttributes", std::move(attrs)},
            {"visibleRelationTypes", role.visible_relation_types},
            {"visibleFeatures", std::move(feats)},
            {"tools", role.authorized_tools}};
}

Scenario load_scenario(const json& doc) {
    if (!doc.is_object()) {
        scenario_fail("", "scenario must be a JSON object");
    }
    static const std::set<std::string> kKeys = {"schema", "init", "terminology", "roles", "agents", "learner", "run"};
    for (const auto& [key, value] : doc.items()) {
        if (!kKeys.count(key)) {
            scenario_fail(key, "unknown top-level key");
        }
    }
    if (!doc.contains("schema")) {
        scenario_fail("schema", "missing schema section");
    }
    Scenario sc;
    sc.schema = define_schema(doc["schema"]);
    sc.init = doc.value("init", json::object());
    sc.initial = init_state(sc.schema, sc.init);
    sc.terminology = define_terminology(doc.value("terminology", json::array()), sc.schema);
    sc.learner = learner_from_json(doc.value("learner", json::object()));

    const json& roles = doc.value("roles", json::array());
    if (!roles.is_array()) {
        scenario_fail("roles", "roles must be a list");
    }
    for (const auto& r : roles) {
        Role role = role_from_json(r, sc.schema, sc.terminology);
        const std::string name = role.name;
        if (!sc.roles.emplace(name, std::move(role)).second) {
            scenario_fail("roles." + name, "duplicate role");
        }
    }

    const json& agents = doc.value("agents", json::array());
    if (!agents.is_array()) {
        scenario_fail("agents", "agents must be a list");
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
        AgentSpec agent = agent_from_json(agents[i], sc, i);
        if (sc.find_agent(agent.id)) {
            scenario_fail("agents." + agent.id, "duplicate agent id");
        }
        sc.agents.push_back(std::move(agent));
    }

    const json& run = doc.value("run", json::object());
    try {
        sc.run.steps = run.value("steps", sc.run.steps);
        sc.run.seed = run.value("seed", sc.run.seed);
    } catch (const json::exception& e) {
        scenario_fail("run", e.what());
    }
    if (sc.run.steps < 0) {
        scenario_fail("run.steps", "must be non-negative");
    }
    return sc;
}

json parse_json_text(const std::string& text) {
    std::vector<std::set<std::string>> keys;
    std::string duplicate;
    json::parser_callback_t track = [&](int, json::parse_event_t event, json& parsed) {
        switch (event) {
        case json::parse_event_t::object_start: keys.emplace_back(); break;
        case json::parse_event_t::object_end: keys.pop_back(); break;
        case json::parse_event_t::key:
            if (!keys.back().insert(parsed.get<std::string>()).second && duplicate.empty()) {
                duplicate = parsed.get<std::string>();
            }
            break;
        default: break;
        }
        return true;
    };
    json doc;
    try {
        doc = json::parse(text, track);
    } catch (const json::parse_error& e) {
        fail(ErrorClass::ParseError, line_column(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
    }
    if (!duplicate.empty()) {
        fail(ErrorClass::ParseError, "key '" + duplicate + "'", "duplicate object key");
    }
    return doc;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorClass::IOFailure, path.string(), "cannot open file");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str());
}

Scenario load_scenario_file(const std::filesystem::path& path) { return load_scenario(read_json_file(path)); }

}  // namespace worldcore
