#pragma once

// Monte Carlo deployments: random line lengths and link powers, any policy.

#include "relaynet/policy.hpp"
#include "relaynet/walk.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace relaynet {

struct DeploymentTrace {
    int line_length = 0;                         ///< steps; the source sits here
    std::vector<int> placements;                 ///< relay positions, then the source
    std::vector<LinkSample> links;               ///< measurements taken where nodes were placed
    std::vector<FailureEvent> failures;
    std::vector<std::vector<double>> measurements; ///< required powers seen at every step
    std::vector<Decision> decisions;             ///< one per step before the line end
    double path_cost = 0.0;                      ///< shortest path tracked during the walk

    int relays() const { return static_cast<int>(placements.size()) - 1; }
    bool failed() const { return !failures.empty(); }
};

/// Walks one line. The generator is advanced by the line-end draw, then one
/// required-power draw per reachable node, at every step. Per-step
/// measurements and decisions are kept only when `keep_steps` is set.
DeploymentTrace run_deployment(const Policy& policy, const LinkPowerModel& model, std::mt19937_64& rng,
                               bool keep_steps = true);

/// Shortest source-to-sink path over the deployed nodes using only links
/// spanning at most n node indices. Throws DomainError when a node has no
/// sampled link within that span.
double path_cost(const DeploymentTrace& trace, Objective objective, int memory_n);

/// Seed of run `index` derived from the base seed (splitmix64 finalizer).
std::uint64_t run_seed(std::uint64_t seed, std::uint64_t index);

struct Estimate {
    double mean = 0.0;
    double half_width = 0.0;  ///< 95% normal-approximation half-width
    bool operator==(const Estimate&) const = default;
};

struct SimReport {
    std::uint64_t runs = 0;
    std::uint64_t seed = 0;
    double xi = 0.0;
    Estimate mean_n;
    Estimate relay_cost;
    Estimate power_cost;
    Estimate total;
    Estimate failure_prob;
    std::uint64_t failures = 0;
    double failure_low = 0.0;    ///< 95% interval, exact below 50 events
    double failure_high = 0.0;
    Estimate mean_line_length;

    bool operator==(const SimReport&) const = default;
};

struct RunSummary {
    int line_length;
    int relays;
    double path_cost;
    bool failed;
};

/// Runs `runs` deployments; run i uses a generator seeded with run_seed(seed, i).
/// `threads` = 0 uses the hardware concurrency. Output does not depend on it.
SimReport simulate(const Policy& policy, const LinkPowerModel& model, std::uint64_t runs, std::uint64_t seed,
                   unsigned threads = 0, std::vector<RunSummary>* per_run = nullptr);

struct ComparisonRow {
    Objective objective;
    double xi;
    int memory_n;
    double j0;
    double simulated_total;    ///< NaN when not simulated
    double simulated_half_width;
};

/// J0 for n = 1 and n = 2 over a list of relay costs, optionally with a
/// simulated total for each policy.
std::vector<ComparisonRow> compare_memory(const LinkPowerModel& model, const DeploymentConfig& base,
                                          const std::vector<double>& xis, std::uint64_t runs = 0,
                                          std::uint64_t seed = 1);

} // namespace relaynet
