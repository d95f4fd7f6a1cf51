// Operator entry point: validate | run | replay | assess | explain | serve.
// Exit codes: 0 success, 1 validation or semantic failure, 2 I/O failure.

#include "worldcore/agents.hpp"
#include "worldcore/error.hpp"
#include "worldcore/gateway.hpp"
#include "worldcore/scenario.hpp"
#include "worldcore/state.hpp"
#include "worldcore/worldscope.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace worldcore;

namespace {

constexpr int kOk = 0;
constexpr int kSemantic = 1;
constexpr int kIO = 2;

int exit_code(const Error& e) { return e.error_class() == ErrorClass::IOFailure ? kIO : kSemantic; }

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorClass::IOFailure, path.string(), "cannot open file");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text) || !out.flush()) {
        fail(ErrorClass::IOFailure, path.string(), "cannot write file");
    }
}

int cmd_validate(const std::string& path) {
    const Scenario sc = load_scenario_file(path);
    std::cout << path << ": ok (" << sc.schema.entity_types.size() << " entity types, " << sc.schema.actions.size()
              << " actions, " << sc.terminology.size() << " features, " << sc.roles.size() << " roles, "
              << sc.agents.size() << " agents)\n";
    return kOk;
}

int cmd_run(const std::string& path, std::optional<int> steps, std::optional<std::uint64_t> seed, const fs::path& out) {
    Scenario sc = load_scenario_file(path);
    const int n = steps.value_or(sc.run.steps);
    const std::uint64_t s = seed.value_or(sc.run.seed);

    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        fail(ErrorClass::IOFailure, out.string(), ec.message());
    }

    Kernel kernel(std::move(sc));
    RunReport report = run_loop(kernel, n, s);
    report.event_log_path = "events.jsonl";

    const Scenario& scenario = kernel.scenario();
    LearnerConfig all = scenario.learner;
    all.theta = 0.0;
    const auto exported = knowledge_view(*kernel.knowledge(), all);

    std::string rendered;
    for (const auto& rule : report.rules_discovered) {
        rendered += render_rule(rule, scenario.terminology) + "\n";
    }
    json knowledge = {{"learner", learner_to_json(scenario.learner)},
                      {"rules", rules_to_json(exported, scenario.terminology)}};

    write_text(out / "events.jsonl", log_to_jsonl(kernel.log()));
    write_text(out / "knowledge.json", knowledge.dump(2) + "\n");
    write_text(out / "knowledge.txt", rendered);
    write_text(out / "report.json", run_report_to_json(report, scenario.terminology).dump(2) + "\n");

    std::uint64_t noops = 0;
    for (const auto& [id, stats] : report.agents) {
        noops += stats.noops;
    }
    std::cout << "steps " << n << ", seed " << s << ": " << report.committed << " committed, " << noops
              << " noops, " << report.rules_discovered.size() << " rules in view\n"
              << "final version " << report.final_version << ", stateHash " << report.final_hash << "\n"
              << rendered;
    return kOk;
}

int cmd_replay(const std::string& scenario_path, const fs::path& log_path, std::optional<fs::path> report_path) {
    const Scenario sc = load_scenario_file(scenario_path);
    const auto records = log_from_jsonl(read_text(log_path));

    const fs::path rp = report_path.value_or(log_path.parent_path() / "report.json");
    std::optional<json> report;
    if (fs::exists(rp)) {
        report = read_json_file(rp);
    }

    std::vector<Transaction> txns;
    txns.reserve(records.size());
    for (const auto& r : records) {
        txns.push_back(r.txn);
    }
    if (report && report->contains("finalVersion")) {
        const auto expected = (*report)["finalVersion"].get<std::uint64_t>();
        const std::uint64_t last = txns.empty() ? 0 : txns.back().seq;
        if (last < expected) {
            fail(ErrorClass::CorruptLog, std::to_string(last + 1), "log ends before the reported final version");
        }
    }
    const WorldState final_state = replay(sc.schema, sc.init, txns);
    const std::string hash = state_hash(final_state);
    std::cout << hash << "\n";
    audit_log(sc, records);

    if (report) {
        const std::string expected = report->value("finalHash", std::string());
        if (expected != hash) {
            std::cerr << "hash mismatch: report has " << expected << "\n";
            return kSemantic;
        }
        std::cerr << "matches " << rp.string() << "\n";
    }
    return kOk;
}

int cmd_explain(const fs::path& path, double theta) {
    const json doc = read_json_file(path);
    const json& rules = doc.is_object() ? doc.value("rules", json::array()) : doc;
    if (!rules.is_array()) {
        fail(ErrorClass::ParseError, path.string(), "expected a knowledge export");
    }
    for (const auto& r : rules) {
        if (r.at("p").get<double>() >= theta) {
            std::cout << r.at("text").get<std::string>() << "\n";
        }
    }
    return kOk;
}

int cmd_assess(const fs::path& path) {
    const auto profile = worldscope::profile_from_json(read_json_file(path));
    const auto report = worldscope::assess_applicability(profile);
    std::cout << worldscope::report_to_json(report).dump(2) << "\n" << worldscope::report_to_text(report) << "\n";
    return kOk;
}

int cmd_serve(const std::string& path, const std::string& host, int port) {
    Kernel kernel(load_scenario_file(path));
    auto server = gateway::serve(kernel, host, port);
    std::cout << "serving " << kernel.scenario().schema.name << " on http://" << host << ":" << server->port()
              << std::endl;
    server->wait();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"worldcore: world-centered multi-agent kernel"};
    app.require_subcommand(1);

    std::string scenario;
    std::string log;
    std::string report;
    std::string out = "out";
    std::string knowledge;
    std::string profile;
    std::string host = "127.0.0.1";
    std::optional<int> steps;
    std::optional<std::uint64_t> seed;
    double theta = 0.0;
    int port = 8080;

    auto* validate = app.add_subcommand("validate", "Check a scenario file");
    validate->add_option("scenario", scenario, "Scenario JSON")->required();

    auto* run = app.add_subcommand("run", "Run a seeded simulation and write its artifacts");
    run->add_option("scenario", scenario, "Scenario JSON")->required();
    run->add_option("--steps", steps, "Rounds to run (default: scenario run.steps)");
    run->add_option("--seed", seed, "Random seed (default: scenario run.seed)");
    run->add_option("--out", out, "Output directory")->capture_default_str();

    auto* rep = app.add_subcommand("replay", "Rebuild the final state from an event log");
    rep->add_option("scenario", scenario, "Scenario JSON")->required();
    rep->add_option("log", log, "Event log (JSONL)")->required();
    rep->add_option("--report", report, "Run report to compare against (default: report.json next to the log)");

    auto* explain = app.add_subcommand("explain", "Print learned rules above a threshold");
    explain->add_option("knowledge", knowledge, "Knowledge export (knowledge.json)")->required();
    explain->add_option("--theta", theta, "Minimum rule probability")->capture_default_str();

    auto* assess = app.add_subcommand("assess", "Assess whether a world profile suits a world-centered design");
    assess->add_option("profile", profile, "World profile JSON")->required();

    auto* serve = app.add_subcommand("serve", "Expose the kernel over HTTP");
    serve->add_option("scenario", scenario, "Scenario JSON")->required();
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kSemantic;
    }

    try {
        if (*validate) return cmd_validate(scenario);
        if (*run) return cmd_run(scenario, steps, seed, out);
        if (*rep) return cmd_replay(scenario, log, report.empty() ? std::nullopt : std::optional<fs::path>(report));
        if (*explain) return cmd_explain(knowledge, theta);
        if (*assess) return cmd_assess(profile);
        if (*serve) return cmd_serve(scenario, host, port);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kSemantic;
    }
    return kOk;
}
