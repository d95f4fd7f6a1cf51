#include "worldcore/gateway.hpp"

#include <httplib.h>

#include <thread>

namespace worldcore::gateway {

using nlohmann::json;

json export_tool_manifest(const Schema& schema, const Role& role) {
    json tools = json::array();
    for (const auto& name : role.authorized_tools) {  // std::set: alphabetical
        const ActionDecl* action = schema.find_action(name);
        if (!action) {
            continue;
        }
        json params = json::array();
        for (const auto& p : action->params) {
            params.push_back({{"name", p.name}, {"type", domain_to_json(p.domain)}});
        }
        tools.push_back({{"name", name}, {"params", std::move(params)}, {"guardText", action->guard.text()}});
    }
    return {{"world", schema.name}, {"role", role.name}, {"tools", std::move(tools)}};
}

json export_tool_manifest(const Scenario& scenario, const std::string& role) {
    const Role* r = scenario.find_role(role);
    if (!r) {
        fail(ErrorClass::UnknownRole, role, "no such role");
    }
    return export_tool_manifest(scenario.schema, *r);
}

int http_status(ErrorClass cls) noexcept {
    switch (cls) {
    case ErrorClass::ParseError:
    case ErrorClass::UnknownAction:
    case ErrorClass::ArgTypeError: return 400;
    case ErrorClass::Unauthorized: return 403;
    case ErrorClass::UnknownAgent:
    case ErrorClass::UnknownRole: return 404;
    case ErrorClass::GuardViolation:
    case ErrorClass::ConstraintViolation:
    case ErrorClass::EvalError: return 409;
    default: return 500;
    }
}

namespace {

const std::string* param(const std::map<std::string, std::string>& query, const char* key) {
    auto it = query.find(key);
    return it == query.end() ? nullptr : &it->second;
}

}  // namespace

Response Service::error(ErrorClass cls, const std::string& detail) const {
    return {http_status(cls),
            {{"committed", false},
             {"version", kernel_.version()},
             {"error", {{"class", std::string(to_string(cls))}, {"detail", detail}}}}};
}

Response Service::snapshot(const std::map<std::string, std::string>& query) const {
    const std::string* agent = param(query, "agent");
    if (!agent) {
        return error(ErrorClass::ParseError, "missing query parameter 'agent'");
    }
    try {
        return {200, snapshot_to_json(perceive(kernel_, *agent))};
    } catch (const Error& e) {
        return error(e.error_class(), e.what());
    }
}

Response Service::rules(const std::map<std::string, std::string>& query) const {
    const std::string* agent = param(query, "agent");
    if (!agent) {
        return error(ErrorClass::ParseError, "missing query parameter 'agent'");
    }
    try {
        const auto version = kernel_.version();
        auto rules = query_knowledge(kernel_, *agent);
        return {200, {{"version", version}, {"rules", rules_to_json(rules, kernel_.scenario().terminology)}}};
    } catch (const Error& e) {
        return error(e.error_class(), e.what());
    }
}

Response Service::manifest(const std::map<std::string, std::string>& query) const {
    const std::string* role = param(query, "role");
    if (!role) {
        return error(ErrorClass::ParseError, "missing query parameter 'role'");
    }
    try {
        json doc = export_tool_manifest(kernel_.scenario(), *role);
        doc["version"] = kernel_.version();
        return {200, std::move(doc)};
    } catch (const Error& e) {
        return error(e.error_class(), e.what());
    }
}

Response Service::act(const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        return error(ErrorClass::ParseError, e.what());
    }
    if (!doc.is_object() || !doc.contains("agent") || !doc["agent"].is_string() || !doc.contains("tool") ||
        !doc["tool"].is_string()) {
        return error(ErrorClass::ParseError, "body must be {agent, tool, args}");
    }
    Bindings args;
    const json& raw = doc.value("args", json::object());
    if (!raw.is_object()) {
        return error(ErrorClass::ParseError, "'args' must be an object");
    }
    for (const auto& [name, v] : raw.items()) {
        auto value = scalar_from_json(v);
        if (!value) {
            return error(ErrorClass::ParseError, "argument '" + name + "' is not a scalar");
        }
        args.emplace(name, *value);
    }
    try {
        TransactionResult r = worldcore::act(kernel_, doc["agent"].get<std::string>(), doc["tool"].get<std::string>(), args);
        return {200, {{"committed", true}, {"version", r.version}, {"seq", r.txn.seq}}};
    } catch (const Error& e) {
        return error(e.error_class(), e.what());
    }
}

struct ServerHandle::Impl {
    explicit Impl(Kernel& kernel) : service(kernel) {}
    Service service;
    httplib::Server server;
    std::thread thread;
    int port = 0;
};

namespace {

std::map<std::string, std::string> query_of(const httplib::Request& req) {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : req.params) {
        out.emplace(k, v);
    }
    return out;
}

void reply(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

}  // namespace

ServerHandle::ServerHandle(Kernel& kernel, const std::string& host, int port) : impl_(std::make_unique<Impl>(kernel)) {
    auto& srv = impl_->server;
    Service& svc = impl_->service;
    srv.Get("/snapshot", [&svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.snapshot(query_of(req)));
    });
    srv.Get("/rules", [&svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.rules(query_of(req)));
    });
    srv.Get("/manifest", [&svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.manifest(query_of(req)));
    });
    srv.Post("/act", [&svc](const httplib::Request& req, httplib::Response& res) { reply(res, svc.act(req.body)); });

    impl_->port = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
    if (impl_->port <= 0) {
        fail(ErrorClass::IOFailure, host + ":" + std::to_string(port), "cannot bind");
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

ServerHandle::~ServerHandle() { stop(); }

int ServerHandle::port() const noexcept { return impl_->port; }

void ServerHandle::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
}

void ServerHandle::wait() {
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
}

std::unique_ptr<ServerHandle> serve(Kernel& kernel, const std::string& host, int port) {
    return std::make_unique<ServerHandle>(kernel, host, port);
}

}  // namespace worldcore::gateway
