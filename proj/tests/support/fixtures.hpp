#pragma once

#include "worldcore/agents.hpp"
#include "worldcore/error.hpp"
#include "worldcore/scenario.hpp"
#include "worldcore/schema.hpp"
#include "worldcore/state.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

using nlohmann::json;

inline std::filesystem::path scenario_dir() { return WORLDCORE_SCENARIO_DIR; }

inline json bank_schema_doc() {
    return json::parse(R"J({
      "name": "bank",
      "entityTypes": {"Account": {"owner": "string", "balance": "integer", "secret": "string"}},
      "relationTypes": {"joint": [{"role": "first", "type": "Account"}, {"role": "second", "type": "Account"}]},
      "actions": {
        "deposit": {
          "params": [{"name": "a", "type": {"ref": "Account"}}, {"name": "amount", "type": "integer"}],
          "guard": "amount > 0",
          "effects": [{"op": "set", "target": "a", "attr": "balance", "value": "a.balance + amount"}]
        },
        "withdraw": {
          "params": [{"name": "a", "type": {"ref": "Account"}}, {"name": "amount", "type": "integer"}],
          "guard": "amount <= a.balance",
          "effects": [{"op": "set", "target": "a", "attr": "balance", "value": "a.balance - amount"}]
        },
        "forceDebit": {
          "params": [{"name": "a", "type": {"ref": "Account"}}, {"name": "amount", "type": "integer"}],
          "effects": [{"op": "set", "target": "a", "attr": "balance", "value": "a.balance - amount"}]
        },
        "open": {
          "params": [{"name": "owner", "type": "string"}],
          "effects": [{"op": "create", "type": "Account", "as": "acc",
                       "attrs": {"owner": "owner", "balance": "0", "secret": "'pin'"}}]
        },
        "close": {
          "params": [{"name": "a", "type": {"ref": "Account"}}],
          "guard": "a.balance = 0 and not (exists b:Account. joint(a, b) or joint(b, a))",
          "effects": [{"op": "delete", "target": "a"}]
        },
        "link": {
          "params": [{"name": "a", "type": {"ref": "Account"}}, {"name": "b", "type": {"ref": "Account"}}],
          "guard": "a != b",
          "effects": [{"op": "link", "relation": "joint", "args": ["a", "b"]}]
        },
        "unlink": {
          "params": [{"name": "a", "type": {"ref": "Account"}}, {"name": "b", "type": {"ref": "Account"}}],
          "effects": [{"op": "unlink", "relation": "joint", "args": ["a", "b"]}]
        }
      },
      "constraints": [{"name": "nonNegative", "expr": "forall a:Account. a.balance >= 0"}]
    })J");
}

inline json bank_init_doc() {
    return json::parse(R"J({
      "entities": [
        {"id": "alice", "type": "Account", "attrs": {"owner": "Alice", "balance": 5, "secret": "a1"}},
        {"id": "bob", "type": "Account", "attrs": {"owner": "Bob", "balance": 0, "secret": "b2"}}
      ]
    })J");
}

/// A full bank scenario built around bank_schema_doc(), with roles of nested visibility.
inline json bank_scenario_doc() {
    json doc;
    doc["schema"] = bank_schema_doc();
    doc["init"] = bank_init_doc();
    doc["terminology"] = json::parse(R"J([
      {"name": "act:deposit", "phase": "act", "action": "deposit"},
      {"name": "act:withdraw", "phase": "act", "action": "withdraw"},
      {"name": "bigWithdraw", "phase": "act", "action": "withdraw", "when": "amount >= 3"},
      {"name": "someoneEmpty", "phase": "pre", "expr": "exists a:Account. a.balance = 0"},
      {"name": "someoneEmptyAfter", "phase": "post", "expr": "exists a:Account. a.balance = 0"},
      {"name": "rich", "phase": "post", "expr": "exists a:Account. a.balance >= 10"}
    ])J");
    doc["roles"] = json::parse(R"J([
      {"name": "admin", "visibleEntityTypes": ["*"], "visibleAttributes": ["*"], "visibleRelationTypes": ["*"],
       "visibleFeatures": ["*"], "tools": ["*"]},
      {"name": "teller", "visibleEntityTypes": ["Account"], "visibleAttributes": ["Account.owner", "Account.balance"],
       "visibleRelationTypes": ["joint"], "visibleFeatures": ["act:deposit", "act:withdraw", "someoneEmpty", "rich"],
       "tools": ["deposit", "withdraw"]},
      {"name": "clerk", "visibleEntityTypes": ["Account"], "visibleAttributes": ["Account.balance"],
       "visibleFeatures": ["rich"], "tools": ["deposit"]},
      {"name": "blind", "tools": []}
    ])J");
    doc["agents"] = json::parse(R"J([
      {"id": "root", "role": "admin"},
      {"id": "t1", "role": "teller", "policy": [
        {"when": "exists a:Account. a.balance >= 4", "do": "withdraw", "args": {"a": "a", "amount": "cond(chance(0.5), 1, 4)"}},
        {"when": "exists a:Account. a.balance < 4", "do": "deposit", "args": {"a": "a", "amount": "3"}}
      ]},
      {"id": "c1", "role": "clerk", "policy": [
        {"when": "exists a:Account. a.balance < 2 and chance(0.3)", "do": "deposit", "args": {"a": "a", "amount": "2"}}
      ]},
      {"id": "ghost", "role": "blind"}
    ])J");
    doc["learner"] = {{"theta", 0.6}, {"minSupport", 1}, {"Lmax", 2}};
    doc["run"] = {{"steps", 50}, {"seed", 3}};
    return doc;
}

inline worldcore::Scenario bank_scenario() { return worldcore::load_scenario(bank_scenario_doc()); }

inline worldcore::Scenario clinic_scenario() {
    return worldcore::load_scenario_file(scenario_dir() / "mini_clinic.json");
}

/// Runs `f`, returning the error class it throws; fails the caller's expectation otherwise.
template <class F>
std::optional<worldcore::ErrorClass> error_of(F&& f) {
    try {
        f();
    } catch (const worldcore::Error& e) {
        return e.error_class();
    }
    return std::nullopt;
}

template <class F>
std::string location_of(F&& f) {
    try {
        f();
    } catch (const worldcore::Error& e) {
        return e.location();
    }
    return "<no error>";
}

/// Small deterministic generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : engine_(seed) {}
    std::int64_t range(std::int64_t lo, std::int64_t hi) {  // inclusive
        return lo + static_cast<std::int64_t>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    bool coin(double p = 0.5) { return static_cast<double>(engine_() >> 11) * 0x1.0p-53 < p; }
    template <class T>
    const T& pick(const std::vector<T>& items) {
        return items[static_cast<std::size_t>(range(0, static_cast<std::int64_t>(items.size()) - 1))];
    }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace fixtures
