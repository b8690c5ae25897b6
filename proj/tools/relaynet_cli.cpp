// relaynet: batch front end for channel models, policies, simulations,
// exports, the oracle cross-check and the assistant service.

#include "relaynet/errors.hpp"
#include "relaynet/presets.hpp"
#include "relaynet/service.hpp"
#include "relaynet/simulator.hpp"
#include "relaynet/store.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <cmath>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>

using namespace relaynet;
using nlohmann::json;

namespace {

enum Exit { ok = 0, other = 1, usage = 2, io = 3, convergence = 4, artifact = 5, deviation = 6 };

class UsageError : public Error {
public:
    using Error::Error;
};

struct Options {
    std::string config;
    std::string objective = "sum";
    int n = 1;
    std::vector<double> xi;
    std::uint64_t runs = 200000;
    std::uint64_t seed = 7;
    std::string out;
    std::string figure;
    int port = 8080;
    std::string host = "127.0.0.1";
    std::vector<std::string> policy_files;
    std::string trace;
    unsigned threads = 0;
    double theta = -1.0;
    int cap = 10;
    double tolerance = 1e-9;
    double tol = 1e-10;
    std::size_t max_iters = 100000;
};

ChannelSpec channel(const Options& o) {
    auto spec = o.config.empty() ? reference_channel_dbm() : load_channel(o.config);
    if (o.theta > 0.0) spec.theta = o.theta;
    return spec;
}

Objective objective(const Options& o) {
    try {
        return parse_objective(o.objective);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
}

std::vector<double> xis(const Options& o, std::vector<double> fallback) {
    return o.xi.empty() ? fallback : o.xi;
}

double single_xi(const Options& o) {
    if (o.xi.size() != 1) throw UsageError("give exactly one --xi");
    return o.xi[0];
}

SolveOptions solve_options(const Options& o) {
    SolveOptions s;
    s.tol = o.tol;
    s.max_iters = o.max_iters;
    return s;
}

void emit(const Options& o, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text;
    } else {
        write_file_atomic(o.out, text);
    }
}

json policy_summary(const Policy& p) {
    const auto& cfg = policy_config(p);
    return {{"variant", std::string(policy_variant(p))},
            {"objective", std::string(to_string(cfg.objective))},
            {"xi", cfg.xi},
            {"memory_n", cfg.memory_n},
            {"j0", policy_j0(p)},
            {"fingerprint", fingerprint(Artifact{p})}};
}

Policy load_policy(const std::string& path) {
    auto a = load(path);
    if (!std::holds_alternative<Policy>(a)) throw FormatError(path + ": not a policy artifact");
    return std::get<Policy>(std::move(a));
}

// ---- verbs -------------------------------------------------------------------

int cmd_channel(const Options& o) {
    const auto spec = channel(o);
    const auto model = spec.model();
    if (!o.figure.empty()) {
        if (o.figure != "pmf") throw UsageError("channel exports only --figure pmf");
        ExportBundle b;
        b.model = model;
        emit(o, export_csv("pmf", b));
        return ok;
    }
    json rows = json::array();
    for (int r = 1; r <= model.max_steps(); ++r) {
        rows.push_back({{"r_steps", r},
                        {"r_m", r * spec.params.step_m},
                        {"fail_prob", model.fail_prob(r)},
                        {"mean_level_mw", model.mean_level_power(r)},
                        {"pmf", std::vector<double>(model.pmf(r).begin(), model.pmf(r).end())}});
    }
    json summary{{"fingerprint", fingerprint(Artifact{spec})},
                 {"outage_probability", outage_probability(spec.params.psi_mw, spec.params.p_rcv_min_mw)},
                 {"levels_mw", spec.levels.values()},
                 {"links", rows}};
    if (!o.out.empty()) {
        save(spec, o.out);
        summary["saved"] = o.out;
    }
    std::cout << summary.dump(2) << "\n";
    return ok;
}

int cmd_solve(const Options& o) {
    const auto spec = channel(o);
    const auto cfg = spec.deployment(objective(o), single_xi(o), o.n);
    const auto policy = solve_policy(spec.model(o.n), cfg, solve_options(o));
    auto summary = policy_summary(policy);
    if (!o.out.empty()) {
        save(policy, o.out);
        summary["saved"] = o.out;
    }
    std::cout << summary.dump(2) << "\n";
    return ok;
}

int cmd_simulate(const Options& o) {
    const auto spec = channel(o);
    Policy policy;
    if (!o.policy_files.empty()) {
        if (o.policy_files.size() != 1) throw UsageError("simulate takes one --policy");
        policy = load_policy(o.policy_files[0]);
    } else {
        policy = solve_policy(spec.model(o.n), spec.deployment(objective(o), single_xi(o), o.n), solve_options(o));
    }
    const auto& cfg = policy_config(policy);
    const auto model = spec.model(cfg.memory_n);
    std::vector<RunSummary> per_run;
    const auto rep = simulate(policy, model, o.runs, o.seed, o.threads, o.trace.empty() ? nullptr : &per_run);
    if (!o.trace.empty()) {
        std::string text = "run,line_length,relays,path_cost,failed\n";
        for (std::size_t i = 0; i < per_run.size(); ++i) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "%zu,%d,%d,%.17g,%d\n", i, per_run[i].line_length, per_run[i].relays,
                          per_run[i].path_cost, per_run[i].failed ? 1 : 0);
            text += buf;
        }
        write_file_atomic(o.trace, text);
    }
    const ReportArtifact art{cfg, fingerprint(Artifact{policy}), policy_j0(policy), rep};
    json out = to_json(art);
    if (!o.out.empty()) {
        save(art, o.out);
        out["saved"] = o.out;
    }
    std::cout << out.dump(2) << "\n";
    return ok;
}

int cmd_compare(const Options& o) {
    const auto spec = channel(o);
    ExportBundle b;
    b.comparison = compare_memory(spec.model(2), spec.deployment(objective(o), 0.0),
                                  xis(o, {0.001, 0.01, 0.1, 1.0}), o.runs, o.seed);
    emit(o, export_csv("table3", b));
    return ok;
}

int cmd_oracle(const Options& o) {
    auto spec = channel(o);
    const auto model = spec.model();
    double worst = 0.0;
    json rows = json::array();
    for (auto obj : {Objective::sum, Objective::max}) {
        for (double xi : xis(o, {0.001, 0.01, 0.1, 1.0})) {
            const auto cfg = spec.deployment(obj, xi);
            const double brute = brute_force_truncated(model, cfg, o.cap);
            const double solver = solve_truncated_j0(model, cfg, o.cap);
            const double dev = std::fabs(brute - solver);
            worst = std::max(worst, dev);
            rows.push_back({{"objective", std::string(to_string(obj))},
                            {"xi", xi},
                            {"oracle_j0", brute},
                            {"solver_j0", solver},
                            {"deviation", dev}});
        }
    }
    const bool pass = worst < o.tolerance;
    const json out{{"theta", spec.theta},
                   {"cap", o.cap},
                   {"rows", rows},
                   {"max_deviation", worst},
                   {"tolerance", o.tolerance},
                   {"pass", pass}};
    emit(o, out.dump(2) + "\n");
    return pass ? ok : deviation;
}

int cmd_export(const Options& o) {
    if (o.figure.empty()) throw UsageError("export needs --figure");
    const auto spec = channel(o);
    ExportBundle b;
    b.step_m = spec.params.step_m;
    const auto model = spec.model();
    const std::vector<double> reference_xi{0.001, 0.01, 0.1, 1.0};
    const auto& f = o.figure;
    if (f == "fig2" || f == "fig4" || f == "fig5") {
        const auto obj = f == "fig2" ? Objective::sum : Objective::max;
        for (double xi : xis(o, reference_xi)) b.policies.push_back(solve_policy(model, spec.deployment(obj, xi)));
    } else if (f == "table1" || f == "table2") {
        const auto obj = f == "table1" ? Objective::sum : Objective::max;
        for (double xi : xis(o, reference_xi)) {
            const auto p = solve_policy(model, spec.deployment(obj, xi));
            b.rows.push_back({policy_config(p), policy_j0(p), simulate(p, model, o.runs, o.seed, o.threads)});
        }
    } else if (f == "table3") {
        b.comparison = compare_memory(spec.model(2), spec.deployment(objective(o), 0.0), xis(o, reference_xi), 0, o.seed);
    } else if (f == "pmf") {
        b.model = model;
    } else if (f == "memory_slice") {
        for (double xi : xis(o, {0.01})) {
            b.policies.push_back(solve_policy(spec.model(o.n), spec.deployment(objective(o), xi, o.n), {}, true));
        }
    } else {
        throw UsageError("unsupported figure '" + f + "'");
    }
    emit(o, export_csv(f, b));
    return ok;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const Options& o) {
    AssistantService service;
    for (const auto& f : o.policy_files) std::cerr << "loaded policy " << service.add_policy(load_policy(f)) << "\n";
    if (o.policy_files.empty() || !o.xi.empty()) {
        const auto spec = channel(o);
        const auto model = spec.model(o.n);
        const std::vector<Objective> objs =
            o.objective == "both" ? std::vector<Objective>{Objective::sum, Objective::max}
                                  : std::vector<Objective>{objective(o)};
        for (auto obj : objs) {
            for (double xi : xis(o, {0.001, 0.01, 0.1, 1.0})) {
                const auto id = service.add_policy(solve_policy(model, spec.deployment(obj, xi, o.n)));
                std::cerr << "solved policy " << id << " (" << to_string(obj) << ", xi=" << xi << ")\n";
            }
        }
    }
    httplib::Server server;
    bind_routes(server, service);
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    if (!server.bind_to_port(o.host, o.port)) throw IoError("cannot listen on " + o.host + ":" + std::to_string(o.port));
    std::cerr << "listening on http://" << o.host << ":" << o.port << "\n";
    server.listen_after_bind();
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"As-you-go relay placement: channels, policies, simulation, exports and the walk assistant"};
    app.require_subcommand(1);
    Options o;

    auto add_channel = [&](CLI::App* c) {
        c->add_option("--config", o.config, "channel config or channel artifact (default: built-in dBm levels)")
;
    };
    auto add_policy_flags = [&](CLI::App* c) {
        c->add_option("--objective", o.objective, "sum or max")->check(CLI::IsMember({"sum", "max"}));
        c->add_option("--n", o.n, "memory: links may reach back n nodes")->check(CLI::Range(1, 8));
        c->add_option("--xi", o.xi, "relay cost in mW (repeatable)");
    };
    auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out, "output file"); };
    auto add_sim = [&](CLI::App* c) {
        c->add_option("--runs", o.runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
        c->add_option("--seed", o.seed, "base seed");
        c->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    };
    auto add_solver = [&](CLI::App* c) {
        c->add_option("--tol", o.tol, "value-iteration tolerance")->check(CLI::PositiveNumber);
        c->add_option("--max-iters", o.max_iters, "iteration limit")->check(CLI::PositiveNumber);
    };

    auto* channel_cmd = app.add_subcommand("channel", "summarize a channel; --out saves it, --figure pmf exports");
    add_channel(channel_cmd);
    add_out(channel_cmd);
    channel_cmd->add_option("--figure", o.figure, "pmf");

    auto* solve_cmd = app.add_subcommand("solve", "solve one policy and save it");
    add_channel(solve_cmd);
    add_policy_flags(solve_cmd);
    add_solver(solve_cmd);
    add_out(solve_cmd);

    auto* sim_cmd = app.add_subcommand("simulate", "simulate a saved or freshly solved policy");
    add_channel(sim_cmd);
    add_policy_flags(sim_cmd);
    add_solver(sim_cmd);
    add_sim(sim_cmd);
    add_out(sim_cmd);
    sim_cmd->add_option("--policy", o.policy_files, "policy artifact");
    sim_cmd->add_option("--trace", o.trace, "per-run CSV (run, L, N, cost, failed)");

    auto* cmp_cmd = app.add_subcommand("compare", "J0 for n = 1 and n = 2 over the relay costs (CSV)");
    add_channel(cmp_cmd);
    add_policy_flags(cmp_cmd);
    add_sim(cmp_cmd);
    add_out(cmp_cmd);
    cmp_cmd->callback([&] {
        if (cmp_cmd->count("--runs") == 0) o.runs = 0;
    });

    auto* oracle_cmd = app.add_subcommand("oracle", "compare the truncated-line solver with exhaustive induction");
    add_channel(oracle_cmd);
    add_out(oracle_cmd);
    oracle_cmd->add_option("--xi", o.xi, "relay cost in mW (repeatable)");
    oracle_cmd->add_option("--theta", o.theta, "line-end probability")->check(CLI::Range(0.0, 1.0));
    oracle_cmd->add_option("--cap", o.cap, "line length cap in steps")->check(CLI::Range(1, 400));
    oracle_cmd->add_option("--tolerance", o.tolerance, "largest acceptable deviation");

    auto* export_cmd = app.add_subcommand("export", "figure or table data as CSV");
    add_channel(export_cmd);
    add_policy_flags(export_cmd);
    add_sim(export_cmd);
    add_out(export_cmd);
    export_cmd->add_option("--figure", o.figure, "fig2, fig4, fig5, table1, table2, table3, pmf, memory_slice")
        ->required();

    auto* serve_cmd = app.add_subcommand("serve", "run the walk assistant HTTP service");
    add_channel(serve_cmd);
    serve_cmd->add_option("--objective", o.objective, "sum, max or both")
        ->check(CLI::IsMember({"sum", "max", "both"}));
    serve_cmd->add_option("--n", o.n, "memory")->check(CLI::Range(1, 8));
    serve_cmd->add_option("--xi", o.xi, "relay cost in mW (repeatable)");
    serve_cmd->add_option("--policy", o.policy_files, "policy artifact (repeatable)");
    serve_cmd->add_option("--port", o.port, "TCP port")->check(CLI::Range(1, 65535));
    serve_cmd->add_option("--host", o.host, "bind address");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*channel_cmd) return cmd_channel(o);
        if (*solve_cmd) return cmd_solve(o);
        if (*sim_cmd) return cmd_simulate(o);
        if (*cmp_cmd) return cmd_compare(o);
        if (*oracle_cmd) return cmd_oracle(o);
        if (*export_cmd) return cmd_export(o);
        if (*serve_cmd) return cmd_serve(o);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return usage;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return io;
    } catch (const ConvergenceError& e) {
        std::cerr << "not converged: " << e.what() << " (residual " << e.residual() << " after " << e.iterations()
                  << " iterations)\n";
        return convergence;
    } catch (const ArtifactError& e) {
        std::cerr << "artifact error: " << e.what() << "\n";
        return artifact;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return other;
    }
    return other;
}
