#include "worldcore/agents.hpp"

#include "worldcore/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

namespace worldcore {

using nlohmann::json;

json log_record_to_json(const LogRecord& record) {
    json doc = transaction_to_json(record.txn);
    doc["agent"] = record.agent;
    doc["caseFeatures"] = record.case_features;
    return doc;
}

LogRecord log_record_from_json(const json& doc) {
    LogRecord record;
    record.txn = transaction_from_json(doc);
    record.agent = doc.value("agent", std::string());
    if (doc.contains("caseFeatures")) {
        const json& names = doc["caseFeatures"];
        if (!names.is_array()) {
            fail(ErrorClass::CorruptLog, std::to_string(record.txn.seq), "'caseFeatures' must be a list");
        }
        for (const auto& n : names) {
            if (!n.is_string()) {
                fail(ErrorClass::CorruptLog, std::to_string(record.txn.seq), "feature names must be strings");
            }
            record.case_features.push_back(n.get<std::string>());
        }
    }
    return record;
}

std::string log_to_jsonl(const std::vector<LogRecord>& log) {
    std::string out;
    for (const auto& record : log) {
        out += log_record_to_json(record).dump();
        out += '\n';
    }
    return out;
}

std::vector<LogRecord> log_from_jsonl(const std::string& text) {
    std::vector<LogRecord> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string expected = std::to_string(out.empty() ? 1 : out.back().txn.seq + 1);
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(ErrorClass::CorruptLog, expected, std::string("unreadable log line: ") + e.what());
        }
        out.push_back(log_record_from_json(doc));
    }
    return out;
}

WorldState audit_log(const Scenario& scenario, const std::vector<LogRecord>& log) {
    WorldState state = scenario.initial;
    for (const auto& record : log) {
        const std::string where = std::to_string(record.txn.seq);
        if (record.txn.seq != state.version + 1) {
            fail(ErrorClass::CorruptLog, std::to_string(state.version + 1), "sequence gap");
        }
        AppliedAction applied;
        try {
            applied = apply_action(state, scenario.schema, record.txn.action, record.txn.args);
        } catch (const Error& e) {
            fail(ErrorClass::CorruptLog, where, std::string("recorded action does not re-execute: ") + e.what());
        }
        if (applied.txn.delta != record.txn.delta) {
            fail(ErrorClass::CorruptLog, where, "recorded delta differs from re-execution");
        }
        const Case c = build_case(state, applied.txn, applied.state, scenario.terminology);
        if (c.true_names(scenario.terminology) != record.case_features) {
            fail(ErrorClass::CorruptLog, where, "recorded case features differ from re-execution");
        }
        state = std::move(applied.state);
    }
    return state;
}

Snapshot project(const WorldState& state, const Role& role) {
    Snapshot snap;
    snap.version = state.version;
    snap.view.version = state.version;
    snap.view.next_id = state.next_id;
    for (const auto& [id, ent] : state.entities) {
        if (!role.visible_entity_types.count(ent.type)) {
            continue;
        }
        Entity visible{ent.type, {}};
        for (const auto& [attr, value] : ent.attrs) {
            if (role.visible_attributes.count({ent.type, attr})) {
                visible.attrs.emplace(attr, value);
            }
        }
        snap.view.entities.emplace(id, std::move(visible));
    }
    for (const auto& tuple : state.relations) {
        if (!role.visible_relation_types.count(tuple.relation)) {
            continue;
        }
        const bool members_visible = std::all_of(tuple.ids.begin(), tuple.ids.end(),
                                                 [&](const std::string& id) { return snap.view.entities.count(id) > 0; });
        if (members_visible) {
            snap.view.relations.insert(tuple);
        }
    }
    return snap;
}

json snapshot_to_json(const Snapshot& snapshot) {
    json entities = json::object();
    for (const auto& [id, ent] : snapshot.view.entities) {
        entities[id] = {{"type", ent.type}, {"attrs", bindings_to_json(ent.attrs)}};
    }
    json relations = json::array();
    for (const auto& tuple : snapshot.view.relations) {
        relations.push_back({{"relation", tuple.relation}, {"ids", tuple.ids}});
    }
    return {{"version", snapshot.version}, {"entities", std::move(entities)}, {"relations", std::move(relations)}};
}

Kernel::Kernel(Scenario scenario)
    : scenario_(std::make_shared<const Scenario>(std::move(scenario))),
      state_(std::make_shared<const WorldState>(scenario_->initial)),
      kb_(std::make_shared<const RuleStore>(scenario_->terminology)) {}

std::shared_ptr<const WorldState> Kernel::state() const {
    std::lock_guard lock(read_mutex_);
    return state_;
}

std::shared_ptr<const RuleStore> Kernel::knowledge() const {
    std::lock_guard lock(read_mutex_);
    return kb_;
}

std::uint64_t Kernel::version() const { return state()->version; }

std::vector<LogRecord> Kernel::log() const {
    std::lock_guard lock(write_mutex_);
    return log_;
}

TransactionResult Kernel::commit(const std::string& agent, const std::string& tool, const Bindings& args) {
    std::lock_guard lock(write_mutex_);
    const auto pre = state();
    AppliedAction applied = apply_action(*pre, scenario_->schema, tool, args);

    const Case c = build_case(*pre, applied.txn, applied.state, scenario_->terminology);
    auto kb = std::make_shared<RuleStore>(*knowledge());
    IngestResult ingest = ingest_case(*kb, c, scenario_->learner);

    log_.push_back({applied.txn, agent, c.true_names(scenario_->terminology)});
    TransactionResult result{applied.txn, applied.state.version, std::move(ingest.changed)};
    auto next = std::make_shared<const WorldState>(std::move(applied.state));
    {
        std::lock_guard swap(read_mutex_);
        state_ = std::move(next);
        kb_ = std::move(kb);
    }
    return result;
}

namespace {

const Role& role_of(const Kernel& kernel, const std::string& agent) {
    const AgentSpec* spec = kernel.scenario().find_agent(agent);
    if (!spec) {
        fail(ErrorClass::UnknownAgent, agent, "no such agent");
    }
    return *kernel.scenario().find_role(spec->role);
}

}  // namespace

Snapshot perceive(const Kernel& kernel, const std::string& agent) {
    const Role& role = role_of(kernel, agent);
    return project(*kernel.state(), role);
}

std::vector<Rule> query_knowledge(const Kernel& kernel, const std::string& agent) {
    const Role& role = role_of(kernel, agent);
    return knowledge_view(*kernel.knowledge(), kernel.scenario().learner, role.visible_features);
}

TransactionResult act(Kernel& kernel, const std::string& agent, const std::string& tool, const Bindings& args) {
    const Role& role = role_of(kernel, agent);
    if (!role.authorized_tools.count(tool)) {
        fail(ErrorClass::Unauthorized, tool, "role '" + role.name + "' may not call this tool");
    }
    return kernel.commit(agent, tool, args);
}

json run_report_to_json(const RunReport& report, const Terminology& terminology) {
    json agents = json::object();
    for (const auto& [id, stats] : report.agents) {
        agents[id] = {{"committed", stats.committed}, {"noops", stats.noops}, {"rejected", stats.rejected}};
    }
    json rules = rules_to_json(report.rules_discovered, terminology);
    return {{"steps", report.steps},
            {"seed", report.seed},
            {"agents", std::move(agents)},
            {"committed", report.committed},
            {"rulesDiscovered", std::move(rules)},
            {"initialHash", report.initial_hash},
            {"finalHash", report.final_hash},
            {"finalVersion", report.final_version},
            {"eventLog", report.event_log_path}};
}

SeededRandom::SeededRandom(std::uint64_t seed) : engine_(seed) {}

std::uint64_t SeededRandom::below(std::uint64_t bound) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = 0;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

double SeededRandom::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

RunReport run_loop(Kernel& kernel, int steps, std::uint64_t seed) {
    if (steps < 0) {
        fail(ErrorClass::ScenarioError, "steps", "must be non-negative");
    }
    const Scenario& sc = kernel.scenario();
    RunReport report;
    report.steps = steps;
    report.seed = seed;
    report.initial_hash = state_hash(*kernel.state());
    for (const auto& agent : sc.agents) {
        report.agents[agent.id];
    }

    SeededRandom rng(seed);
    const ChanceSource chance = [&rng] { return rng.uniform(); };
    std::vector<std::size_t> order(sc.agents.size());

    for (int step = 0; step < steps; ++step) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        for (std::size_t idx : order) {
            const AgentSpec& agent = sc.agents[idx];
            AgentStats& stats = report.agents[agent.id];
            const Snapshot snap = perceive(kernel, agent.id);
            bool fired = false;
            try {
                for (const auto& rule : agent.policy) {
                    auto bound = solve(rule.when, snap.view, {}, &chance);
                    if (!bound) {
                        continue;
                    }
                    fired = true;
                    Bindings args;
                    for (const auto& [name, expr] : rule.args) {
                        args[name] = evaluate(expr, snap.view, *bound, &chance);
                    }
                    act(kernel, agent.id, rule.tool, args);
                    ++stats.committed;
                    ++report.committed;
                    break;
                }
            } catch (const Error& e) {
                ++stats.rejected[std::string(to_string(e.error_class()))];
            }
            if (!fired) {
                ++stats.noops;
            }
        }
    }

    const auto final_state = kernel.state();
    report.final_hash = state_hash(*final_state);
    report.final_version = final_state->version;
    report.rules_discovered = knowledge_view(*kernel.knowledge(), sc.learner);
    return report;
}

}  // namespace worldcore
