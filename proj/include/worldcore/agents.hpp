#pragma once

#include "worldcore/causal.hpp"
#include "worldcore/scenario.hpp"
#include "worldcore/sml.hpp"
#include "worldcore/state.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <optional>
#include <string>
#include <vector>

namespace worldcore {

/// One event-log line: the transaction, who issued it, and the true features of its case.
struct LogRecord {
    Transaction txn;
    std::string agent;
    std::vector<std::string> case_features;

    bool operator==(const LogRecord&) const = default;
};

nlohmann::json log_record_to_json(const LogRecord& record);
LogRecord log_record_from_json(const nlohmann::json& doc);
/// JSONL serialization, one record per line, trailing newline.
std::string log_to_jsonl(const std::vector<LogRecord>& log);
/// Throws Error(CorruptLog) naming the first sequence number that cannot be read.
std::vector<LogRecord> log_from_jsonl(const std::string& text);

/// Re-executes every logged action on the replayed pre-state and requires the recorded
/// delta and case features to match. Returns the final state; throws Error(CorruptLog)
/// naming the first inconsistent sequence number.
WorldState audit_log(const Scenario& scenario, const std::vector<LogRecord>& log);

/// Role-filtered projection of the world at one version.
struct Snapshot {
    std::uint64_t version = 0;
    WorldState view;  // only visible entities, attributes and tuples
};

Snapshot project(const WorldState& state, const Role& role);
nlohmann::json snapshot_to_json(const Snapshot& snapshot);

struct TransactionResult {
    Transaction txn;
    std::uint64_t version = 0;
    std::vector<RuleKey> changed_rules;
};

/// The shared world: schema, current state, rule store and event log. All writes go through
/// one queue (a mutex); readers take immutable shared snapshots and never block writers for
/// longer than a pointer copy.
class Kernel {
public:
    explicit Kernel(Scenario scenario);

    const Scenario& scenario() const noexcept { return *scenario_; }
    std::shared_ptr<const WorldState> state() const;
    std::shared_ptr<const RuleStore> knowledge() const;
    std::uint64_t version() const;
    std::vector<LogRecord> log() const;

    /// Applies the action, ingests its case and appends to the log, atomically with respect
    /// to other commits. No authorization check: see agents::act.
    TransactionResult commit(const std::string& agent, const std::string& tool, const Bindings& args);

private:
    std::shared_ptr<const Scenario> scenario_;
    mutable std::mutex write_mutex_;
    mutable std::mutex read_mutex_;
    std::shared_ptr<const WorldState> state_;
    std::shared_ptr<const RuleStore> kb_;
    std::vector<LogRecord> log_;
};

/// Throws Error(UnknownAgent).
Snapshot perceive(const Kernel& kernel, const std::string& agent);

/// Knowledge view restricted to the features the agent's role may see.
std::vector<Rule> query_knowledge(const Kernel& kernel, const std::string& agent);

/// Authorization first (Error(Unauthorized) before any guard is evaluated), then the
/// kernel commit; every apply_action error passes through unchanged.
TransactionResult act(Kernel& kernel, const std::string& agent, const std::string& tool, const Bindings& args);

struct AgentStats {
    std::uint64_t committed = 0;
    std::uint64_t noops = 0;
    std::map<std::string, std::uint64_t> rejected;  // by error class
};

struct RunReport {
    int steps = 0;
    std::uint64_t seed = 0;
    std::map<std::string, AgentStats> agents;
    std::uint64_t committed = 0;
    std::vector<Rule> rules_discovered;
    std::string initial_hash;
    std::string final_hash;
    std::uint64_t final_version = 0;
    std::string event_log_path;
};

nlohmann::json run_report_to_json(const RunReport& report, const Terminology& terminology);

/// mt19937_64 with explicit bounded/uniform draws: the distribution classes are
/// implementation-defined, the engine's output sequence is not.
class SeededRandom {
public:
    explicit SeededRandom(std::uint64_t seed);
    std::uint64_t below(std::uint64_t bound);
    double uniform();
    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// `steps` rounds; each round visits agents in a seeded permutation; each agent perceives,
/// takes the first policy row whose condition holds on its snapshot, and acts (or noops).
RunReport run_loop(Kernel& kernel, int steps, std::uint64_t seed);

}  // namespace worldcore
