#include "relaynet/store.hpp"

#include "relaynet/errors.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

namespace relaynet {

using nlohmann::json;

namespace {

// JSON has no infinities; they are written as strings.
json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

double get_num(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw FormatError("expected a number, got " + j.dump());
}

json nums(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

const json& field(const json& j, const char* key) {
    if (!j.is_object()) throw FormatError("expected an object");
    const auto it = j.find(key);
    if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
    return *it;
}

double get_double(const json& j, const char* key) {
    return get_num(field(j, key));
}

template <class T>
T get_int(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_integer()) throw FormatError(std::string("field '") + key + "' must be an integer");
    return v.get<T>();
}

std::string get_string(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_string()) throw FormatError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> get_doubles(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_array()) throw FormatError(std::string("field '") + key + "' must be an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(get_num(x));
    return out;
}

template <class T>
std::vector<T> get_ints(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_array()) throw FormatError(std::string("field '") + key + "' must be an array");
    std::vector<T> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number_integer()) throw FormatError(std::string("field '") + key + "' must hold integers");
        out.push_back(x.get<T>());
    }
    return out;
}

json to_json(const Estimate& e) {
    return {{"mean", num(e.mean)}, {"half_width", num(e.half_width)}};
}

Estimate estimate_from_json(const json& j) {
    return {get_double(j, "mean"), get_double(j, "half_width")};
}

PowerLevelSet levels_from_json(const json& j, const char* key) {
    try {
        return PowerLevelSet(get_doubles(j, key));
    } catch (const DomainError& e) {
        throw FormatError(std::string("bad power levels: ") + e.what());
    }
}

Objective objective_from_json(const json& j) {
    try {
        return parse_objective(get_string(j, "objective"));
    } catch (const DomainError& e) {
        throw FormatError(e.what());
    }
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string fmt_dbm(double mw) {
    return mw > 0.0 ? fmt(mw_to_dbm(mw)) : "-inf";
}

} // namespace

// ---- JSON conversions --------------------------------------------------------

json to_json(const DeploymentConfig& cfg) {
    return {{"theta", num(cfg.theta)},
            {"xi", num(cfg.xi)},
            {"r_max_steps", cfg.r_max_steps},
            {"objective", std::string(to_string(cfg.objective))},
            {"memory_n", cfg.memory_n}};
}

DeploymentConfig config_from_json(const json& j) {
    DeploymentConfig cfg;
    cfg.theta = get_double(j, "theta");
    cfg.xi = get_double(j, "xi");
    cfg.r_max_steps = get_int<int>(j, "r_max_steps");
    cfg.objective = objective_from_json(j);
    cfg.memory_n = get_int<int>(j, "memory_n");
    try {
        cfg.validate();
    } catch (const DomainError& e) {
        throw FormatError(std::string("bad deployment config: ") + e.what());
    }
    return cfg;
}

json to_json(const ChannelSpec& spec) {
    const auto& p = spec.params;
    return {{"eta", num(p.eta)},
            {"sigma_db", num(p.sigma_db)},
            {"alpha_gain", num(p.alpha_gain)},
            {"psi_mw", num(p.psi_mw)},
            {"p_rcv_min_mw", num(p.p_rcv_min_mw)},
            {"step_m", num(p.step_m)},
            {"levels_mw", nums(spec.levels.values())},
            {"r_max_steps", spec.r_max_steps},
            {"theta", num(spec.theta)}};
}

ChannelSpec channel_from_json(const json& j) {
    ChannelSpec spec;
    spec.params.eta = get_double(j, "eta");
    spec.params.sigma_db = get_double(j, "sigma_db");
    spec.params.alpha_gain = get_double(j, "alpha_gain");
    spec.params.psi_mw = get_double(j, "psi_mw");
    spec.params.p_rcv_min_mw = get_double(j, "p_rcv_min_mw");
    spec.params.step_m = get_double(j, "step_m");
    spec.levels = levels_from_json(j, "levels_mw");
    spec.r_max_steps = get_int<int>(j, "r_max_steps");
    spec.theta = get_double(j, "theta");
    try {
        spec.params.validate();
    } catch (const DomainError& e) {
        throw FormatError(std::string("bad channel parameters: ") + e.what());
    }
    return spec;
}

json to_json(const Policy& policy) {
    json j{{"variant", std::string(policy_variant(policy))},
           {"config", to_json(policy_config(policy))},
           {"levels_mw", nums(policy_levels(policy).values())},
           {"j0", num(policy_j0(policy))}};
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            j["residual"] = num(p.residual);
            j["iterations"] = p.iterations;
            j["value"] = nums(p.value);
            if constexpr (std::is_same_v<T, SumAdjacentPolicy>) {
                j["threshold_raw"] = nums(p.threshold_raw);
                j["gamma_th"] = nums(p.gamma_th);
            } else if constexpr (std::is_same_v<T, MaxAdjacentPolicy>) {
                j["r_th"] = p.r_th;
                j["gamma_th"] = nums(p.gamma_th);
            } else {
                j["threshold"] = p.threshold;
            }
        },
        policy);
    return j;
}

Policy policy_from_json(const json& j) {
    const auto variant = get_string(j, "variant");
    const auto cfg = config_from_json(field(j, "config"));
    auto levels = levels_from_json(j, "levels_mw");
    auto fill = [&](auto& p) {
        p.config = cfg;
        p.levels = levels;
        p.j0 = get_double(j, "j0");
        p.residual = get_double(j, "residual");
        p.iterations = get_int<std::size_t>(j, "iterations");
        p.value = get_doubles(j, "value");
    };
    const auto rmax = static_cast<std::size_t>(cfg.r_max_steps);
    if (variant == "sum_adjacent") {
        SumAdjacentPolicy p;
        fill(p);
        p.threshold_raw = get_doubles(j, "threshold_raw");
        p.gamma_th = get_doubles(j, "gamma_th");
        if (p.value.size() != rmax || p.threshold_raw.size() != rmax || p.gamma_th.size() != rmax) {
            throw FormatError("sum policy tables do not match r_max");
        }
        return p;
    }
    if (variant == "max_adjacent") {
        MaxAdjacentPolicy p;
        fill(p);
        p.r_th = get_ints<int>(j, "r_th");
        p.gamma_th = get_doubles(j, "gamma_th");
        const std::size_t cells = rmax * p.grid_size();
        if (p.value.size() != cells || p.gamma_th.size() != cells || p.r_th.size() != p.grid_size()) {
            throw FormatError("max policy tables do not match r_max and the levels");
        }
        return p;
    }
    if (variant == "memory") {
        MemoryPolicy p;
        try {
            p = memory_layout(cfg, levels);
        } catch (const DomainError& e) {
            throw FormatError(std::string("bad memory policy: ") + e.what());
        }
        fill(p);
        p.threshold = get_ints<std::uint16_t>(j, "threshold");
        const std::size_t states = p.state_size.size();
        if (p.value.size() != states || p.threshold.size() != states) {
            throw FormatError("memory policy tables do not match the state layout");
        }
        for (auto c : p.threshold) {
            if (c >= p.grid.size()) throw FormatError("memory threshold outside the path grid");
        }
        return p;
    }
    throw FormatError("unknown policy variant '" + variant + "'");
}

json to_json(const SimReport& r) {
    return {{"runs", r.runs},
            {"seed", r.seed},
            {"xi", num(r.xi)},
            {"mean_n", to_json(r.mean_n)},
            {"relay_cost", to_json(r.relay_cost)},
            {"power_cost", to_json(r.power_cost)},
            {"total", to_json(r.total)},
            {"failure_prob", to_json(r.failure_prob)},
            {"failures", r.failures},
            {"failure_low", num(r.failure_low)},
            {"failure_high", num(r.failure_high)},
            {"mean_line_length", to_json(r.mean_line_length)}};
}

namespace {

SimReport sim_report_from_json(const json& j) {
    SimReport r;
    r.runs = get_int<std::uint64_t>(j, "runs");
    r.seed = get_int<std::uint64_t>(j, "seed");
    r.xi = get_double(j, "xi");
    r.mean_n = estimate_from_json(field(j, "mean_n"));
    r.relay_cost = estimate_from_json(field(j, "relay_cost"));
    r.power_cost = estimate_from_json(field(j, "power_cost"));
    r.total = estimate_from_json(field(j, "total"));
    r.failure_prob = estimate_from_json(field(j, "failure_prob"));
    r.failures = get_int<std::uint64_t>(j, "failures");
    r.failure_low = get_double(j, "failure_low");
    r.failure_high = get_double(j, "failure_high");
    r.mean_line_length = estimate_from_json(field(j, "mean_line_length"));
    return r;
}

} // namespace

json to_json(const ReportArtifact& r) {
    return {{"config", to_json(r.config)},
            {"policy_fingerprint", r.policy_fingerprint},
            {"j0", num(r.j0)},
            {"report", to_json(r.report)}};
}

ReportArtifact report_from_json(const json& j) {
    ReportArtifact r;
    r.config = config_from_json(field(j, "config"));
    r.policy_fingerprint = get_string(j, "policy_fingerprint");
    r.j0 = get_double(j, "j0");
    r.report = sim_report_from_json(field(j, "report"));
    return r;
}

std::string_view artifact_kind(const Artifact& artifact) {
    switch (artifact.index()) {
    case 0: return "channel";
    case 1: return "policy";
    default: return "report";
    }
}

json payload_of(const Artifact& artifact) {
    return std::visit([](const auto& a) { return to_json(a); }, artifact);
}

// ---- fingerprints and files --------------------------------------------------

std::string fingerprint(const json& payload) {
    const std::string text = payload.dump();
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string fingerprint(const Artifact& artifact) {
    return fingerprint(payload_of(artifact));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
    static std::atomic<unsigned long> counter{0};
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename onto " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string save(const Artifact& artifact, const std::filesystem::path& path) {
    const json payload = payload_of(artifact);
    const auto fp = fingerprint(payload);
    const json env{{"schema_version", kSchemaVersion},
                   {"kind", std::string(artifact_kind(artifact))},
                   {"fingerprint", fp},
                   {"created_at", utc_now()},
                   {"payload", payload}};
    write_file_atomic(path, env.dump(1) + "\n");
    return fp;
}

Envelope load_envelope(const std::filesystem::path& path) {
    const auto text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": not JSON: " + e.what());
    }
    Envelope env;
    env.schema_version = get_int<int>(j, "schema_version");
    if (env.schema_version != kSchemaVersion) {
        throw VersionError(path.string() + ": schema version " + std::to_string(env.schema_version) +
                           ", expected " + std::to_string(kSchemaVersion));
    }
    env.kind = get_string(j, "kind");
    if (env.kind != "channel" && env.kind != "policy" && env.kind != "report") {
        throw FormatError(path.string() + ": unknown artifact kind '" + env.kind + "'");
    }
    env.fingerprint = get_string(j, "fingerprint");
    env.created_at = get_string(j, "created_at");
    env.payload = field(j, "payload");
    if (fingerprint(env.payload) != env.fingerprint) {
        throw HashError(path.string() + ": payload does not match its fingerprint");
    }
    return env;
}

Artifact load(const std::filesystem::path& path) {
    const auto env = load_envelope(path);
    if (env.kind == "channel") return channel_from_json(env.payload);
    if (env.kind == "policy") return policy_from_json(env.payload);
    return report_from_json(env.payload);
}

ChannelSpec channel_from_config(const json& j) {
    if (!j.is_object()) throw FormatError("channel config must be an object");
    ChannelSpec spec = reference_channel_dbm();
    auto& p = spec.params;
    auto opt = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = get_double(j, key);
    };
    auto opt_db = [&](const char* db_key, const char* lin_key, double& dst) {
        if (j.contains(db_key) && j.contains(lin_key)) {
            throw FormatError(std::string("give only one of '") + db_key + "' and '" + lin_key + "'");
        }
        if (j.contains(db_key)) dst = dbm_to_mw(get_double(j, db_key));
        if (j.contains(lin_key)) dst = get_double(j, lin_key);
    };
    opt("eta", p.eta);
    opt("sigma_dB", p.sigma_db);
    opt_db("alpha_gain_dB", "alpha_gain", p.alpha_gain);
    opt_db("psi_dBm", "psi_mw", p.psi_mw);
    opt_db("p_rcv_min_dBm", "p_rcv_min_mw", p.p_rcv_min_mw);
    opt("step_m", p.step_m);
    opt("theta", spec.theta);
    if (j.contains("r_max_steps")) spec.r_max_steps = get_int<int>(j, "r_max_steps");
    if (j.contains("levels_dBm") && j.contains("levels_mW")) throw FormatError("give only one of levels_dBm and levels_mW");
    try {
        if (j.contains("levels_dBm")) spec.levels = PowerLevelSet::from_dbm(get_doubles(j, "levels_dBm"));
        if (j.contains("levels_mW")) spec.levels = PowerLevelSet(get_doubles(j, "levels_mW"));
        p.validate();
        spec.deployment(Objective::sum, 0.0).validate();
    } catch (const DomainError& e) {
        throw FormatError(std::string("bad channel config: ") + e.what());
    }
    return spec;
}

ChannelSpec load_channel(const std::filesystem::path& path) {
    const auto text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": not JSON: " + e.what());
    }
    if (j.is_object() && j.contains("schema_version")) {
        const auto env = load_envelope(path);
        if (env.kind != "channel") throw FormatError(path.string() + ": not a channel artifact");
        return channel_from_json(env.payload);
    }
    return channel_from_config(j);
}

// ---- CSV exports -------------------------------------------------------------

const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"fig2",   "fig4",   "fig5", "table1",
                                              "table2", "table3", "pmf",  "memory_slice"};
    return ids;
}

namespace {

template <class T>
std::vector<const T*> policies_of(const ExportBundle& b, std::string_view figure) {
    std::vector<const T*> out;
    for (const auto& p : b.policies) {
        if (const auto* q = std::get_if<T>(&p)) out.push_back(q);
    }
    if (out.empty()) throw DomainError(std::string(figure) + " needs at least one matching policy");
    return out;
}

std::string table_csv(const ExportBundle& b, Objective objective, std::string_view figure) {
    std::string out =
        "xi,j0,mean_N,mean_N_half_width,relay_cost,power_cost,total,total_half_width,"
        "failure_prob,failure_low,failure_high,runs,seed\n";
    bool any = false;
    for (const auto& row : b.rows) {
        if (row.config.objective != objective) continue;
        any = true;
        const auto& r = row.report;
        out += fmt(row.config.xi) + "," + fmt(row.j0) + "," + fmt(r.mean_n.mean) + "," + fmt(r.mean_n.half_width) +
               "," + fmt(r.relay_cost.mean) + "," + fmt(r.power_cost.mean) + "," + fmt(r.total.mean) + "," +
               fmt(r.total.half_width) + "," + fmt(r.failure_prob.mean) + "," + fmt(r.failure_low) + "," +
               fmt(r.failure_high) + "," + std::to_string(r.runs) + "," + std::to_string(r.seed) + "\n";
    }
    if (!any) throw DomainError(std::string(figure) + " needs simulation rows for the " +
                                std::string(to_string(objective)) + " objective");
    return out;
}

} // namespace

std::string export_csv(std::string_view figure, const ExportBundle& b) {
    if (figure == "fig2") {
        std::string out = "r_m,xi,gamma_th_dBm\n";
        for (const auto* p : policies_of<SumAdjacentPolicy>(b, figure)) {
            for (int r = 1; r <= p->config.r_max_steps; ++r) {
                out += fmt(r * b.step_m) + "," + fmt(p->config.xi) + "," + fmt_dbm(p->gamma_th_at(r)) + "\n";
            }
        }
        return out;
    }
    if (figure == "fig4") {
        std::string out = "gamma_max_dBm,xi,r_th_steps\n";
        for (const auto* p : policies_of<MaxAdjacentPolicy>(b, figure)) {
            for (std::size_t j = 1; j < p->grid_size(); ++j) {
                out += fmt_dbm(p->grid_value(j)) + "," + fmt(p->config.xi) + "," + std::to_string(p->r_th[j]) + "\n";
            }
        }
        return out;
    }
    if (figure == "fig5") {
        std::string out = "r_steps,xi,gamma_max_dBm,gamma_th_dBm\n";
        for (const auto* p : policies_of<MaxAdjacentPolicy>(b, figure)) {
            const std::size_t j = p->grid_index(p->levels[p->levels.index_of(dbm_to_mw(b.gamma_max_dbm))]);
            for (int r = 1; r <= p->config.r_max_steps; ++r) {
                out += std::to_string(r) + "," + fmt(p->config.xi) + "," + fmt(b.gamma_max_dbm) + "," +
                       fmt_dbm(p->gamma_th_at(r, j)) + "\n";
            }
        }
        return out;
    }
    if (figure == "table1") return table_csv(b, Objective::sum, figure);
    if (figure == "table2") return table_csv(b, Objective::max, figure);
    if (figure == "table3") {
        if (b.comparison.empty()) throw DomainError("table3 needs comparison rows");
        std::string out = "objective,xi,memory_n,j0,simulated_total,simulated_half_width\n";
        for (const auto& r : b.comparison) {
            out += std::string(to_string(r.objective)) + "," + fmt(r.xi) + "," + std::to_string(r.memory_n) + "," +
                   fmt(r.j0) + "," + fmt(r.simulated_total) + "," + fmt(r.simulated_half_width) + "\n";
        }
        return out;
    }
    if (figure == "pmf") {
        if (!b.model) throw DomainError("pmf needs a link power model");
        const auto& m = *b.model;
        std::string out = "r_steps,r_m,level_dBm,level_mW,pmf,cdf,fail_prob\n";
        for (int r = 1; r <= m.max_steps(); ++r) {
            for (std::size_t i = 0; i < m.levels().size(); ++i) {
                out += std::to_string(r) + "," + fmt(r * m.params().step_m) + "," + fmt_dbm(m.levels()[i]) + "," +
                       fmt(m.levels()[i]) + "," + fmt(m.pmf(r, i)) + "," + fmt(m.cdf(r, i)) + "," +
                       fmt(m.fail_prob(r)) + "\n";
            }
        }
        return out;
    }
    if (figure == "memory_slice") {
        std::string out = "xi,state,window,y_steps,P_mW,c_mW,value\n";
        for (const auto* p : policies_of<MemoryPolicy>(b, figure)) {
            for (std::size_t s = 0; s < p->states(); ++s) {
                const auto y = p->y_of(s);
                const auto P = p->p_of(s);
                std::string ys, ps;
                for (std::size_t k = 0; k < y.size(); ++k) {
                    if (k) ys += ' ', ps += ' ';
                    ys += std::to_string(y[k]);
                    ps += fmt(p->grid.value(P[k]));
                }
                out += fmt(p->config.xi) + "," + std::to_string(s) + "," + std::to_string(y.size()) + "," + ys + "," +
                       ps + "," + fmt(p->grid.value(p->threshold[s])) + "," + fmt(p->value[s]) + "\n";
            }
        }
        return out;
    }
    throw DomainError("unsupported figure '" + std::string(figure) + "'");
}

} // namespace relaynet
