#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace relaynet {

enum class Objective { sum, max };

std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view text);

struct DeploymentConfig {
    double theta = 0.025;   ///< probability the line ends at the next step
    double xi = 0.01;       ///< relay cost, mW per relay
    int r_max_steps = 10;   ///< a relay is forced at this distance from the last node
    Objective objective = Objective::sum;
    int memory_n = 1;

    void validate() const;
    bool operator==(const DeploymentConfig&) const = default;
};

enum class Decision { skip, place, forced_place };

std::string_view to_string(Decision decision);

inline bool places(Decision d) { return d != Decision::skip; }

/// Called after every sweep with the iteration count, J(0) of that iterate and
/// the full table of tracked values.
using IterateObserver = std::function<void(std::size_t, double, std::span<const double>)>;

struct SolveOptions {
    double tol = 1e-10;
    std::size_t max_iters = 100000;
    /// When set, the line is truncated: it ends with certainty after this many
    /// steps, and the problem is solved by backward induction instead.
    std::optional<int> horizon;
    IterateObserver observer;
};

} // namespace relaynet
