#pragma once

#include "worldcore/causal.hpp"
#include "worldcore/expr.hpp"
#include "worldcore/schema.hpp"
#include "worldcore/state.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace worldcore {

/// Access level: what part of the world and of the learned knowledge an agent sees,
/// and which tools it may call.
struct Role {
    std::string name;
    std::set<std::string> visible_entity_types;
    std::set<std::pair<std::string, std::string>> visible_attributes;  // (entity type, attribute)
    std::set<std::string> visible_relation_types;
    std::set<int> visible_features;
    std::set<std::string> authorized_tools;
};

/// One row of a condition -> action table. Variables bound by the top-level existentials of
/// `when` are available to the argument expressions.
struct PolicyRule {
    Expression when;
    std::string tool;
    std::vector<std::pair<std::string, Expression>> args;
};

struct AgentSpec {
    std::string id;
    std::string role;
    std::vector<PolicyRule> policy;
};

struct RunDefaults {
    int steps = 100;
    std::uint64_t seed = 0;
};

/// A fully validated scenario file.
struct Scenario {
    Schema schema;
    nlohmann::json init;
    WorldState initial;
    Terminology terminology;
    LearnerConfig learner;
    std::map<std::string, Role> roles;
    std::vector<AgentSpec> agents;
    RunDefaults run;

    const Role* find_role(const std::string& name) const;
    const AgentSpec* find_agent(const std::string& id) const;
};

/// Validates every section: schema, init, terminology, learner, roles, agents (policies
/// typecheck against the role's visible vocabulary and authorized tools), run.
Scenario load_scenario(const nlohmann::json& doc);

/// Parses JSON (rejecting duplicate keys) and reports malformed input as
/// Error(ParseError, "line L, column C", ...). Unreadable files raise Error(IOFailure).
nlohmann::json read_json_file(const std::filesystem::path& path);
nlohmann::json parse_json_text(const std::string& text);

Scenario load_scenario_file(const std::filesystem::path& path);

Role role_from_json(const nlohmann::json& doc, const Schema& schema, const Terminology& terminology);
nlohmann::json role_to_json(const Role& role, const Terminology& terminology);

}  // namespace worldcore
