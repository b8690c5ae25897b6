#pragma once

// A solved policy of any of the three kinds, with a uniform decision call.

#include "relaynet/adjacent.hpp"
#include "relaynet/memory.hpp"

#include <string_view>
#include <variant>

namespace relaynet {

using Policy = std::variant<SumAdjacentPolicy, MaxAdjacentPolicy, MemoryPolicy>;

const DeploymentConfig& policy_config(const Policy& policy);
const PowerLevelSet& policy_levels(const Policy& policy);
double policy_j0(const Policy& policy);
/// "sum_adjacent", "max_adjacent" or "memory".
std::string_view policy_variant(const Policy& policy);
/// Number of previous nodes a link may reach back (1 for adjacent policies).
int policy_memory(const Policy& policy);

/// Solves the policy selected by cfg: adjacent solvers for n = 1 (by objective)
/// unless `force_memory`, the memory solver otherwise.
Policy solve_policy(const LinkPowerModel& model, const DeploymentConfig& cfg, const SolveOptions& opts = {},
                    bool force_memory = false);

/// Decision at a window of reachable nodes. `state.gamma` holds power levels.
/// For adjacent policies the window is the last node only, and for the max
/// objective P[0] is the running maximum link power.
Decision decide(const Policy& policy, const MemoryState& state);

} // namespace relaynet
