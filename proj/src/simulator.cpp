#include "relaynet/simulator.hpp"

#include "relaynet/errors.hpp"

#include <boost/math/distributions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

namespace relaynet {
namespace {

constexpr double kZ95 = 1.959963984540054;

Estimate estimate(double sum, double sum_sq, double n) {
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) : 0.0;
    return {mean, kZ95 * std::sqrt(var / n)};
}

} // namespace

DeploymentTrace run_deployment(const Policy& policy, const LinkPowerModel& model, std::mt19937_64& rng,
                               bool keep_steps) {
    const auto& cfg = policy_config(policy);
    if (model.max_steps() < cfg.r_max_steps) throw DomainError("link model shorter than r_max");
    if (!(model.levels() == policy_levels(policy))) throw DomainError("policy and link model use different levels");
    std::bernoulli_distribution ends(cfg.theta);
    Walker walker(policy);
    DeploymentTrace trace;
    std::vector<double> required;
    for (;;) {
        const bool last = ends(rng);
        required.clear();
        for (int d : walker.pending_distances()) required.push_back(model.sample(d, rng).required_mw);
        if (keep_steps) trace.measurements.push_back(required);
        if (last) {
            const auto out = walker.end(required);
            trace.line_length = out.position;
            trace.path_cost = out.path_cost;
            break;
        }
        const auto decision = walker.step(required).decision;
        if (keep_steps) trace.decisions.push_back(decision);
    }
    trace.placements = walker.placements();
    trace.links = walker.links();
    trace.failures = walker.failures();
    return trace;
}

double path_cost(const DeploymentTrace& trace, Objective objective, int memory_n) {
    if (memory_n < 1) throw DomainError("memory must be positive");
    if (trace.placements.empty()) throw DomainError("trace has no source");
    std::vector<int> nodes{0};
    nodes.insert(nodes.end(), trace.placements.begin(), trace.placements.end());
    std::map<std::pair<int, int>, double> level;
    for (const auto& l : trace.links) level[{l.from, l.to}] = l.level_mw;

    std::vector<double> best(nodes.size(), std::numeric_limits<double>::infinity());
    best[0] = 0.0;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        const std::size_t lo = i > static_cast<std::size_t>(memory_n) ? i - static_cast<std::size_t>(memory_n) : 0;
        for (std::size_t j = lo; j < i; ++j) {
            const auto it = level.find({nodes[i], nodes[j]});
            if (it == level.end()) continue;
            const double len = objective == Objective::sum ? it->second + best[j] : std::max(it->second, best[j]);
            best[i] = std::min(best[i], len);
        }
        if (!std::isfinite(best[i])) {
            throw DomainError("no sampled link from the node at " + std::to_string(nodes[i]));
        }
    }
    return best.back();
}

std::uint64_t run_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + (index + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SimReport simulate(const Policy& policy, const LinkPowerModel& model, std::uint64_t runs, std::uint64_t seed,
                   unsigned threads, std::vector<RunSummary>* per_run) {
    if (runs == 0) throw DomainError("at least one run is required");
    const auto& cfg = policy_config(policy);
    std::vector<RunSummary> results(runs);

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, runs));
    std::vector<std::exception_ptr> errors(threads);
    auto work = [&](unsigned t) {
        try {
            for (std::uint64_t i = t; i < runs; i += threads) {
                std::mt19937_64 rng(run_seed(seed, i));
                const auto trace = run_deployment(policy, model, rng, false);
                results[i] = {trace.line_length, trace.relays(), trace.path_cost, trace.failed()};
            }
        } catch (...) {
            errors[t] = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
    work(0);
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    double n_sum = 0, n_sq = 0, p_sum = 0, p_sq = 0, t_sum = 0, t_sq = 0, l_sum = 0, l_sq = 0;
    std::uint64_t failures = 0;
    for (const auto& r : results) {
        const double n = r.relays;
        const double total = r.path_cost + cfg.xi * n;
        n_sum += n;
        n_sq += n * n;
        p_sum += r.path_cost;
        p_sq += r.path_cost * r.path_cost;
        t_sum += total;
        t_sq += total * total;
        l_sum += r.line_length;
        l_sq += static_cast<double>(r.line_length) * r.line_length;
        failures += r.failed ? 1 : 0;
    }
    const double count = static_cast<double>(runs);
    SimReport rep;
    rep.runs = runs;
    rep.seed = seed;
    rep.xi = cfg.xi;
    rep.mean_n = estimate(n_sum, n_sq, count);
    rep.relay_cost = {cfg.xi * rep.mean_n.mean, cfg.xi * rep.mean_n.half_width};
    rep.power_cost = estimate(p_sum, p_sq, count);
    rep.total = {rep.relay_cost.mean + rep.power_cost.mean, estimate(t_sum, t_sq, count).half_width};
    rep.mean_line_length = estimate(l_sum, l_sq, count);
    rep.failures = failures;
    const double pf = static_cast<double>(failures) / count;
    rep.failure_prob = {pf, kZ95 * std::sqrt(pf * (1.0 - pf) / count)};
    if (failures < 50) {
        const double x = static_cast<double>(failures);
        rep.failure_low = failures == 0 ? 0.0 : boost::math::ibeta_inv(x, count - x + 1.0, 0.025);
        rep.failure_high = failures == runs ? 1.0 : boost::math::ibeta_inv(x + 1.0, count - x, 0.975);
    } else {
        rep.failure_low = std::max(0.0, pf - rep.failure_prob.half_width);
        rep.failure_high = std::min(1.0, pf + rep.failure_prob.half_width);
    }
    if (per_run) *per_run = std::move(results);
    return rep;
}

std::vector<ComparisonRow> compare_memory(const LinkPowerModel& model, const DeploymentConfig& base,
                                          const std::vector<double>& xis, std::uint64_t runs, std::uint64_t seed) {
    std::vector<ComparisonRow> rows;
    for (int n : {1, 2}) {
        for (double xi : xis) {
            auto cfg = base;
            cfg.xi = xi;
            cfg.memory_n = n;
            const auto policy = solve_policy(model, cfg);
            ComparisonRow row{cfg.objective, xi, n, policy_j0(policy), std::numeric_limits<double>::quiet_NaN(),
                              std::numeric_limits<double>::quiet_NaN()};
            if (runs > 0) {
                const auto rep = simulate(policy, model, runs, seed);
                row.simulated_total = rep.total.mean;
                row.simulated_half_width = rep.total.half_width;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace relaynet
