#include "relaynet/policy.hpp"

#include "relaynet/errors.hpp"

namespace relaynet {

const DeploymentConfig& policy_config(const Policy& policy) {
    return std::visit([](const auto& p) -> const DeploymentConfig& { return p.config; }, policy);
}

const PowerLevelSet& policy_levels(const Policy& policy) {
    return std::visit([](const auto& p) -> const PowerLevelSet& { return p.levels; }, policy);
}

double policy_j0(const Policy& policy) {
    return std::visit([](const auto& p) { return p.j0; }, policy);
}

std::string_view policy_variant(const Policy& policy) {
    switch (policy.index()) {
    case 0: return "sum_adjacent";
    case 1: return "max_adjacent";
    default: return "memory";
    }
}

int policy_memory(const Policy& policy) {
    return policy_config(policy).memory_n;
}

Policy solve_policy(const LinkPowerModel& model, const DeploymentConfig& cfg, const SolveOptions& opts,
                    bool force_memory) {
    if (cfg.memory_n > 1 || force_memory) return solve_memory(model, cfg, opts);
    if (cfg.objective == Objective::sum) return solve_sum_adjacent(model, cfg, opts);
    return solve_max_adjacent(model, cfg, opts);
}

Decision decide(const Policy& policy, const MemoryState& state) {
    if (const auto* m = std::get_if<MemoryPolicy>(&policy)) return place_decision_memory(*m, state);
    if (state.y.empty() || state.gamma.size() != state.y.size() || state.P.size() != state.y.size()) {
        throw DomainError("adjacent policies need a one-node window");
    }
    if (const auto* s = std::get_if<SumAdjacentPolicy>(&policy)) {
        return place_decision(*s, state.y[0], state.gamma[0]);
    }
    return place_decision(std::get<MaxAdjacentPolicy>(policy), state.y[0], state.gamma[0], state.P[0]);
}

} // namespace relaynet
