#include "relaynet/service.hpp"

#include "relaynet/errors.hpp"
#include "relaynet/store.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>

namespace relaynet {

using nlohmann::json;

struct AssistantService::PolicyEntry {
    std::string id;
    std::string fingerprint;
    Policy policy;
};

struct AssistantService::Session {
    Session(std::string id_, std::shared_ptr<const PolicyEntry> entry)
        : id(std::move(id_)), policy(std::move(entry)), walker(policy->policy) {}

    std::mutex mutex;
    std::string id;
    std::shared_ptr<const PolicyEntry> policy;
    Walker walker;
    json log = json::array();
    json report;  // null while walking
};

namespace {

json dbm_or_null(double mw) {
    return mw > 0.0 ? json(mw_to_dbm(mw)) : json(nullptr);
}

// Ordinal of the node at `position`: 0 for the sink, k for the k-th relay.
int node_index(const Walker& w, int position) {
    if (position == 0) return 0;
    const auto& p = w.placements();
    const auto it = std::find(p.begin(), p.end(), position);
    return static_cast<int>(it - p.begin()) + 1;
}

json pending_json(const Walker& w) {
    json out = json::array();
    if (w.ended()) return out;
    for (int d : w.pending_distances()) {
        const int pos = w.position() + 1 - d;
        out.push_back({{"node", node_index(w, pos)}, {"position", pos}, {"distance", d}});
    }
    return out;
}

double to_mw(const json& value, const std::string& unit) {
    if (!value.is_number()) throw ServiceError(400, "measurement values must be numbers");
    const double x = value.get<double>();
    if (!std::isfinite(x)) throw ServiceError(400, "measurement values must be finite");
    if (unit == "dBm") return dbm_to_mw(x);
    if (unit == "mW") {
        if (x < 0.0) throw ServiceError(400, "powers in mW must be nonnegative");
        return x;
    }
    throw ServiceError(400, "unit must be \"mW\" or \"dBm\"");
}

// Required powers in the walker's pending order.
std::vector<double> parse_measurements(const json& body, const Walker& w) {
    if (!body.is_object() || !body.contains("measurements") || !body["measurements"].is_array()) {
        throw ServiceError(400, "body needs a \"measurements\" array");
    }
    const std::string unit = body.value("unit", "mW");
    const auto& items = body["measurements"];
    const auto pending = pending_json(w);
    if (items.size() != pending.size()) {
        throw ServiceError(400, "expected " + std::to_string(pending.size()) + " measurements, got " +
                                    std::to_string(items.size()));
    }
    std::vector<double> out(pending.size());
    std::vector<bool> seen(pending.size(), false);
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& m = items[i];
        if (!m.is_object()) {
            out[i] = to_mw(m, unit);
            seen[i] = true;
            continue;
        }
        if (!m.contains("node") || !m["node"].is_number_integer() || !m.contains("value")) {
            throw ServiceError(400, "measurement objects need integer \"node\" and \"value\"");
        }
        const int node = m["node"].get<int>();
        std::size_t k = 0;
        while (k < pending.size() && pending[k]["node"].get<int>() != node) ++k;
        if (k == pending.size()) throw ServiceError(400, "node " + std::to_string(node) + " is not reachable");
        if (seen[k]) throw ServiceError(400, "node " + std::to_string(node) + " measured twice");
        out[k] = to_mw(m["value"], m.value("unit", unit));
        seen[k] = true;
    }
    return out;
}

json links_json(const Walker& w) {
    json out = json::array();
    for (const auto& l : w.links()) {
        out.push_back({{"from", l.from}, {"to", l.to}, {"required_mw", l.required_mw}, {"level_mw", l.level_mw}});
    }
    return out;
}

json failures_json(const Walker& w) {
    json out = json::array();
    for (const auto& f : w.failures()) {
        out.push_back({{"position", f.position}, {"kind", std::string(to_string(f.kind))}});
    }
    return out;
}

std::string status_of(const Walker& w) {
    if (!w.ended()) return "walking";
    return w.failures().empty() ? "ended" : "failed";
}

json policy_summary(const std::string& id, const std::string& fp, const Policy& p) {
    const auto& cfg = policy_config(p);
    return {{"id", id},
            {"fingerprint", fp},
            {"variant", std::string(policy_variant(p))},
            {"objective", std::string(to_string(cfg.objective))},
            {"xi", cfg.xi},
            {"theta", cfg.theta},
            {"memory_n", cfg.memory_n},
            {"r_max_steps", cfg.r_max_steps},
            {"j0", policy_j0(p)},
            {"levels_mw", policy_levels(p).values()}};
}

} // namespace

AssistantService::AssistantService() = default;
AssistantService::~AssistantService() = default;

std::string AssistantService::add_policy(Policy policy) {
    const auto fp = fingerprint(Artifact{policy});
    const auto id = fp.substr(0, 12);
    std::unique_lock lock(mutex_);
    if (!policies_.count(id)) {
        policies_[id] = std::make_shared<const PolicyEntry>(PolicyEntry{id, fp, std::move(policy)});
    }
    return id;
}

std::shared_ptr<const AssistantService::PolicyEntry> AssistantService::policy_entry(const std::string& id) const {
    std::shared_lock lock(mutex_);
    const auto it = policies_.find(id);
    if (it == policies_.end()) throw ServiceError(404, "unknown policy '" + id + "'");
    return it->second;
}

std::shared_ptr<AssistantService::Session> AssistantService::find(const std::string& id) const {
    std::shared_lock lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + id + "'");
    return it->second;
}

json AssistantService::list_policies() const {
    std::shared_lock lock(mutex_);
    json out = json::array();
    for (const auto& [id, e] : policies_) out.push_back(policy_summary(id, e->fingerprint, e->policy));
    return {{"policies", out}};
}

json AssistantService::thresholds(const std::string& policy_id) const {
    const auto entry = policy_entry(policy_id);
    json out = policy_summary(entry->id, entry->fingerprint, entry->policy);
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            const int rmax = p.config.r_max_steps;
            std::vector<int> r(static_cast<std::size_t>(rmax));
            for (int i = 0; i < rmax; ++i) r[static_cast<std::size_t>(i)] = i + 1;
            out["r_steps"] = r;
            if constexpr (std::is_same_v<T, SumAdjacentPolicy>) {
                json mw = json::array(), dbm = json::array();
                for (int k = 1; k <= rmax; ++k) {
                    mw.push_back(p.gamma_th_at(k));
                    dbm.push_back(dbm_or_null(p.gamma_th_at(k)));
                }
                out["gamma_th_mw"] = mw;
                out["gamma_th_dbm"] = dbm;
            } else if constexpr (std::is_same_v<T, MaxAdjacentPolicy>) {
                json gmax = json::array(), table = json::array();
                for (std::size_t j = 0; j < p.grid_size(); ++j) {
                    gmax.push_back(p.grid_value(j));
                    json row = json::array();
                    for (int k = 1; k <= rmax; ++k) row.push_back(p.gamma_th_at(k, j));
                    table.push_back(row);
                }
                out["gamma_max_mw"] = gmax;
                out["r_th_steps"] = p.r_th;
                out["gamma_th_mw"] = table;  // [gamma_max index][r - 1]
            } else {
                // slice at a single reachable node: c(y_1, P_1)
                out["p_mw"] = p.grid.values();
                json table = json::array();
                for (int k = 1; k <= rmax; ++k) {
                    json row = json::array();
                    for (double pv : p.grid.values()) {
                        const int y[] = {k};
                        const double P[] = {pv};
                        row.push_back(p.threshold_mw(y, P));
                    }
                    table.push_back(row);
                }
                out["c_mw"] = table;  // [y_1 - 1][P index]
            }
        },
        entry->policy);
    return out;
}

json AssistantService::create_session(const json& body) {
    if (!body.is_object() || !body.contains("policy_id") || !body["policy_id"].is_string()) {
        throw ServiceError(400, "body needs a \"policy_id\" string");
    }
    auto entry = policy_entry(body["policy_id"].get<std::string>());
    std::shared_ptr<Session> s;
    {
        std::unique_lock lock(mutex_);
        const auto id = "s" + std::to_string(next_session_++);
        s = std::make_shared<Session>(id, std::move(entry));
        sessions_[id] = s;
    }
    return session(s->id);
}

json AssistantService::session(const std::string& session_id) const {
    const auto s = find(session_id);
    std::lock_guard lock(s->mutex);
    const auto& w = s->walker;
    const auto window = w.ended() ? MemoryState{} : w.pending_window();
    const auto& cfg = policy_config(s->policy->policy);
    return {{"id", s->id},
            {"policy_id", s->policy->id},
            {"fingerprint", s->policy->fingerprint},
            {"objective", std::string(to_string(cfg.objective))},
            {"xi", cfg.xi},
            {"memory_n", cfg.memory_n},
            {"r_max_steps", cfg.r_max_steps},
            {"status", status_of(w)},
            {"step", w.position()},
            {"relays", w.relays()},
            {"placements", w.placements()},
            {"path_lengths_mw", w.path_lengths()},
            {"links", links_json(w)},
            {"failures", failures_json(w)},
            {"pending", pending_json(w)},
            {"window", {{"y_steps", window.y}, {"P_mw", window.P}}},
            {"log", s->log},
            {"report", s->report}};
}

json AssistantService::step(const std::string& session_id, const json& body) {
    const auto s = find(session_id);
    json out;
    {
        std::lock_guard lock(s->mutex);
        auto& w = s->walker;
        if (w.ended()) throw ServiceError(409, "session " + session_id + " is not walking");
        const auto required = parse_measurements(body, w);
        StepOutcome r;
        try {
            r = w.step(required);
        } catch (const DomainError& e) {
            throw ServiceError(400, e.what());
        }
        out = {{"position", r.position},
               {"decision", std::string(to_string(r.decision))},
               {"distances", r.distances},
               {"required_mw", required},
               {"levels_mw", r.levels_mw},
               {"failed", r.failed},
               {"warnings", r.warnings}};
        if (places(r.decision)) out["path_mw"] = r.path_mw;
        s->log.push_back(out);
    }
    out["session"] = session(session_id);
    return out;
}

json AssistantService::end(const std::string& session_id, const json& body) {
    const auto s = find(session_id);
    {
        std::lock_guard lock(s->mutex);
        auto& w = s->walker;
        if (w.ended()) throw ServiceError(409, "session " + session_id + " has already ended");
        const auto required = parse_measurements(body, w);
        EndOutcome r;
        try {
            r = w.end(required);
        } catch (const DomainError& e) {
            throw ServiceError(400, e.what());
        }
        const double xi = policy_config(s->policy->policy).xi;
        std::vector<int> relays(w.placements().begin(), w.placements().end() - 1);
        s->report = {{"relays", r.relays},
                     {"relay_positions", relays},
                     {"source_position", r.position},
                     {"path_cost_mw", r.path_cost},
                     {"relay_cost_mw", xi * r.relays},
                     {"total_cost_mw", r.path_cost + xi * r.relays},
                     {"failed", r.failed},
                     {"failures", failures_json(w)}};
        s->log.push_back({{"position", r.position}, {"decision", "source"}, {"required_mw", required}});
    }
    json out = session(session_id);
    return {{"report", out["report"]}, {"session", out}};
}

void AssistantService::snapshot(const std::string& session_id, const std::filesystem::path& path) const {
    write_file_atomic(path, session(session_id).dump(1) + "\n");
}

// ---- HTTP --------------------------------------------------------------------

namespace {

template <class F>
void respond(httplib::Response& res, int ok_status, F&& f) {
    try {
        res.set_content(f().dump(), "application/json");
        res.status = ok_status;
    } catch (const ServiceError& e) {
        res.status = e.status();
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const json::exception& e) {
        res.status = 400;
        res.set_content(json{{"error", std::string("bad JSON: ") + e.what()}}.dump(), "application/json");
    } catch (const DomainError& e) {
        res.status = 400;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    return json::parse(req.body);
}

} // namespace

void bind_routes(httplib::Server& server, AssistantService& service) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/policies", [&](const httplib::Request&, httplib::Response& res) {
        respond(res, 200, [&] { return service.list_policies(); });
    });
    server.Get(R"(/policies/([^/]+)/thresholds)", [&](const httplib::Request& req, httplib::Response& res) {
        respond(res, 200, [&] { return service.thresholds(req.matches[1]); });
    });
    server.Post("/sessions", [&](const httplib::Request& req, httplib::Response& res) {
        respond(res, 201, [&] { return service.create_session(parse_body(req)); });
    });
    server.Get(R"(/sessions/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
        respond(res, 200, [&] { return service.session(req.matches[1]); });
    });
    server.Post(R"(/sessions/([^/]+)/step)", [&](const httplib::Request& req, httplib::Response& res) {
        respond(res, 200, [&] { return service.step(req.matches[1], parse_body(req)); });
    });
    server.Post(R"(/sessions/([^/]+)/end)", [&](const httplib::Request& req, httplib::Response& res) {
        respond(res, 200, [&] { return service.end(req.matches[1], parse_body(req)); });
    });
}

} // namespace relaynet
