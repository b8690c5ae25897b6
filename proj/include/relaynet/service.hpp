#pragma once

// Live deployment assistant: sessions that apply a loaded policy to the
// powers an operative measures while walking the line.
//
// Every method takes and returns JSON shaped like the HTTP API:
//   POST /sessions                   {"policy_id"}
//   POST /sessions/{id}/step         {"measurements": [...], "unit": "mW" | "dBm"}
//   POST /sessions/{id}/end          same body as step
//   GET  /sessions/{id}
//   GET  /policies
//   GET  /policies/{id}/thresholds
// A measurement is a number (taken in the order of "pending") or an object
// {"node": k, "value": x[, "unit": "dBm"]} naming the earlier node k it was
// measured to. Powers are in mW unless flagged as dBm; they are quantized to
// the policy's levels here.

#include "relaynet/errors.hpp"
#include "relaynet/policy.hpp"
#include "relaynet/walk.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

namespace httplib {
class Server;
}

namespace relaynet {

/// Request error carrying the HTTP status it maps to.
class ServiceError : public Error {
public:
    ServiceError(int status, const std::string& what) : Error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

class AssistantService {
public:
    AssistantService();
    ~AssistantService();
    AssistantService(const AssistantService&) = delete;
    AssistantService& operator=(const AssistantService&) = delete;

    /// Registers a policy; returns its id (the first 12 hex digits of its
    /// fingerprint). Adding the same policy twice returns the same id.
    std::string add_policy(Policy policy);

    nlohmann::json list_policies() const;
    nlohmann::json thresholds(const std::string& policy_id) const;

    nlohmann::json create_session(const nlohmann::json& body);
    nlohmann::json step(const std::string& session_id, const nlohmann::json& body);
    nlohmann::json end(const std::string& session_id, const nlohmann::json& body);
    nlohmann::json session(const std::string& session_id) const;

    /// Writes the session descriptor, log included, atomically to `path`.
    void snapshot(const std::string& session_id, const std::filesystem::path& path) const;

private:
    struct PolicyEntry;
    struct Session;

    std::shared_ptr<const PolicyEntry> policy_entry(const std::string& id) const;
    std::shared_ptr<Session> find(const std::string& id) const;

    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const PolicyEntry>> policies_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_session_ = 1;
};

/// Installs the HTTP routes, with permissive CORS headers for a browser
/// frontend served from elsewhere.
void bind_routes(httplib::Server& server, AssistantService& service);

} // namespace relaynet
