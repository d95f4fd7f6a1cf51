#pragma once

#include "worldcore/agents.hpp"
#include "worldcore/error.hpp"
#include "worldcore/scenario.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <string>

namespace worldcore::gateway {

/// {"world", "role", "tools": [{"name", "params": [{"name", "type"}], "guardText"}]}, tools by name.
nlohmann::json export_tool_manifest(const Schema& schema, const Role& role);
/// Throws Error(UnknownRole).
nlohmann::json export_tool_manifest(const Scenario& scenario, const std::string& role);

/// 400 malformed / not fitting the tool, 403 unauthorized, 404 unknown agent or role,
/// 409 rejected by the world (guard, constraint, evaluation), 500 otherwise.
int http_status(ErrorClass cls) noexcept;

struct Response {
    int status = 200;
    nlohmann::json body;
};

/// Request handling, independent of any socket. Every body carries the current world version.
class Service {
public:
    explicit Service(Kernel& kernel) : kernel_(kernel) {}

    Response snapshot(const std::map<std::string, std::string>& query) const;
    Response rules(const std::map<std::string, std::string>& query) const;
    Response manifest(const std::map<std::string, std::string>& query) const;
    Response act(const std::string& body);

private:
    Response error(ErrorClass cls, const std::string& detail) const;
    Kernel& kernel_;
};

/// A running HTTP/1.1 server; stops and joins on destruction.
class ServerHandle {
public:
    ServerHandle(Kernel& kernel, const std::string& host, int port);
    ~ServerHandle();
    ServerHandle(const ServerHandle&) = delete;
    ServerHandle& operator=(const ServerHandle&) = delete;

    int port() const noexcept;
    void stop();
    /// Blocks until stop() is called from elsewhere.
    void wait();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Binds `host:port` (port 0 picks a free one) and serves in a background thread.
/// Throws Error(IOFailure) when the address cannot be bound.
std::unique_ptr<ServerHandle> serve(Kernel& kernel, const std::string& host, int port);

}  // namespace worldcore::gateway
