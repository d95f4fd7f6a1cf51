#include "fixtures.hpp"

#include "worldcore/gateway.hpp"

#include <doctest.h>
#include <httplib.h>

using namespace worldcore;
using nlohmann::json;

namespace {

struct Reply {
    int status = 0;
    json body;
};

Reply get(httplib::Client& client, const std::string& path) {
    auto res = client.Get(path);
    REQUIRE(res);
    return {res->status, json::parse(res->body)};
}

Reply post(httplib::Client& client, const std::string& body) {
    auto res = client.Post("/act", body, "application/json");
    REQUIRE(res);
    return {res->status, json::parse(res->body)};
}

}  // namespace

TEST_SUITE("manifest") {
    TEST_CASE("manifest lists exactly the authorized tools, alphabetically") {
        const Scenario sc = fixtures::bank_scenario();
        const json blind = gateway::export_tool_manifest(sc, "blind");
        CHECK(blind["tools"].empty());
        CHECK(blind["world"] == "bank");
        CHECK(blind["role"] == "blind");

        const json teller = gateway::export_tool_manifest(sc, "teller");
        REQUIRE(teller["tools"].size() == 2);
        CHECK(teller["tools"][0]["name"] == "deposit");
        CHECK(teller["tools"][1]["name"] == "withdraw");
        CHECK(teller["tools"][1]["guardText"] == "amount <= a.balance");

        for (const auto& [name, role] : sc.roles) {
            const json m = gateway::export_tool_manifest(sc.schema, role);
            std::vector<std::string> names;
            for (const auto& tool : m["tools"]) {
                names.push_back(tool["name"].get<std::string>());
                const ActionDecl& decl = *sc.schema.find_action(names.back());
                REQUIRE(tool["params"].size() == decl.params.size());
                for (std::size_t i = 0; i < decl.params.size(); ++i) {
                    CHECK(tool["params"][i]["name"] == decl.params[i].name);
                    CHECK(domain_from_json(tool["params"][i]["type"], "t") == decl.params[i].domain);
                }
            }
            CHECK(std::is_sorted(names.begin(), names.end()));
            CHECK(std::set<std::string>(names.begin(), names.end()) == role.authorized_tools);
        }
        CHECK(fixtures::error_of([&] { gateway::export_tool_manifest(sc, "nobody"); }) == ErrorClass::UnknownRole);
    }

    TEST_CASE("status mapping") {
        CHECK(gateway::http_status(ErrorClass::ParseError) == 400);
        CHECK(gateway::http_status(ErrorClass::ArgTypeError) == 400);
        CHECK(gateway::http_status(ErrorClass::UnknownAction) == 400);
        CHECK(gateway::http_status(ErrorClass::Unauthorized) == 403);
        CHECK(gateway::http_status(ErrorClass::UnknownAgent) == 404);
        CHECK(gateway::http_status(ErrorClass::UnknownRole) == 404);
        CHECK(gateway::http_status(ErrorClass::GuardViolation) == 409);
        CHECK(gateway::http_status(ErrorClass::ConstraintViolation) == 409);
    }
}

TEST_SUITE("http") {
    TEST_CASE("endpoints over a live socket") {
        Kernel kernel(fixtures::bank_scenario());
        auto server = gateway::serve(kernel, "127.0.0.1", 0);
        REQUIRE(server->port() > 0);
        httplib::Client client("127.0.0.1", server->port());

        Reply snap = get(client, "/snapshot?agent=t1");
        CHECK(snap.status == 200);
        CHECK(snap.body["version"] == 0);
        CHECK(snap.body["entities"]["alice"]["attrs"].contains("balance"));
        CHECK_FALSE(snap.body["entities"]["alice"]["attrs"].contains("secret"));

        Reply denied = post(client, R"({"agent": "c1", "tool": "withdraw", "args": {"a": "alice", "amount": 1}})");
        CHECK(denied.status == 403);
        CHECK(denied.body["committed"] == false);
        CHECK(denied.body["error"]["class"] == "Unauthorized");
        CHECK(get(client, "/snapshot?agent=t1").body["version"] == 0);

        Reply ok = post(client, R"({"agent": "t1", "tool": "deposit", "args": {"a": "bob", "amount": 3}})");
        CHECK(ok.status == 200);
        CHECK(ok.body["committed"] == true);
        CHECK(ok.body["version"] == 1);
        CHECK(ok.body["seq"] == 1);
        snap = get(client, "/snapshot?agent=t1");
        CHECK(snap.body["version"] == 1);
        CHECK(snap.body["entities"]["bob"]["attrs"]["balance"] == 3);

        Reply guard = post(client, R"({"agent": "t1", "tool": "withdraw", "args": {"a": "bob", "amount": 50}})");
        CHECK(guard.status == 409);
        CHECK(guard.body["error"]["class"] == "GuardViolation");
        CHECK(guard.body["version"] == 1);

        Reply constraint = post(client, R"({"agent": "root", "tool": "forceDebit", "args": {"a": "bob", "amount": 50}})");
        CHECK(constraint.status == 409);
        CHECK(constraint.body["error"]["class"] == "ConstraintViolation");

        Reply argtype = post(client, R"({"agent": "t1", "tool": "deposit", "args": {"a": "bob", "amount": "x"}})");
        CHECK(argtype.status == 400);
        CHECK(argtype.body["error"]["class"] == "ArgTypeError");

        Reply malformed = post(client, "{nope");
        CHECK(malformed.status == 400);
        CHECK(malformed.body["version"] == 1);
        CHECK(post(client, R"({"agent": "t1"})").status == 400);
        CHECK(post(client, R"({"agent": "t1", "tool": "deposit", "args": {"a": ["bob"]}})").status == 400);

        Reply unknown = post(client, R"({"agent": "zed", "tool": "deposit", "args": {}})");
        CHECK(unknown.status == 404);
        CHECK(unknown.body["error"]["class"] == "UnknownAgent");
        CHECK(get(client, "/snapshot?agent=zed").status == 404);
        CHECK(get(client, "/rules?agent=zed").status == 404);
        CHECK(get(client, "/snapshot").status == 400);

        Reply manifest = get(client, "/manifest?role=teller");
        CHECK(manifest.status == 200);
        CHECK(manifest.body["tools"].size() == 2);
        CHECK(manifest.body["version"] == 1);
        Reply no_role = get(client, "/manifest?role=ghost");
        CHECK(no_role.status == 404);
        CHECK(no_role.body["error"]["class"] == "UnknownRole");

        Reply rules = get(client, "/rules?agent=root");
        CHECK(rules.status == 200);
        CHECK(rules.body["version"] == 1);
        REQUIRE(rules.body["rules"].is_array());
        for (const auto& r : rules.body["rules"]) {
            CHECK(r.contains("text"));
            CHECK(r.contains("p"));
        }
        CHECK(kernel.version() == 1);
        server->stop();
    }

    TEST_CASE("gateway and in-process acts produce identical worlds") {
        const std::vector<std::string> script = {
            R"({"agent": "t1", "tool": "deposit", "args": {"a": "bob", "amount": 3}})",
            R"({"agent": "t1", "tool": "withdraw", "args": {"a": "alice", "amount": 4}})",
            R"({"agent": "c1", "tool": "withdraw", "args": {"a": "alice", "amount": 1}})",
            R"({"agent": "t1", "tool": "withdraw", "args": {"a": "alice", "amount": 9}})",
            R"({"agent": "root", "tool": "open", "args": {"owner": "Carol"}})",
            R"({"agent": "root", "tool": "link", "args": {"a": "alice", "b": "e1"}})",
            R"({"agent": "root", "tool": "close", "args": {"a": "e1"}})",
            R"({"agent": "root", "tool": "unlink", "args": {"a": "alice", "b": "e1"}})",
            R"({"agent": "root", "tool": "close", "args": {"a": "e1"}})",
            R"({"agent": "c1", "tool": "deposit", "args": {"a": "alice", "amount": 2}})",
            R"({"agent": "root", "tool": "forceDebit", "args": {"a": "bob", "amount": 5}})",
        };
        Kernel remote(fixtures::bank_scenario());
        Kernel local(fixtures::bank_scenario());
        auto server = gateway::serve(remote, "127.0.0.1", 0);
        httplib::Client client("127.0.0.1", server->port());
        for (const auto& body : script) {
            const Reply r = post(client, body);
            const json doc = json::parse(body);
            Bindings args;
            for (const auto& [k, v] : doc["args"].items()) {
                args.emplace(k, *scalar_from_json(v));
            }
            std::string local_class;
            try {
                act(local, doc["agent"], doc["tool"], args);
            } catch (const Error& e) {
                local_class = std::string(to_string(e.error_class()));
            }
            if (local_class.empty()) {
                CHECK(r.status == 200);
            } else {
                CHECK(r.body["error"]["class"] == local_class);
                CHECK(r.status == gateway::http_status(fixtures::error_of([&] { act(local, doc["agent"], doc["tool"], args); }).value()));
            }
            CHECK(r.body["version"] == local.version());
        }
        server->stop();
        CHECK(log_to_jsonl(remote.log()) == log_to_jsonl(local.log()));
        CHECK(state_hash(*remote.state()) == state_hash(*local.state()));
        CHECK(remote.version() == 7);
    }
}
