#include "relaynet/config.hpp"

#include "relaynet/errors.hpp"

#include <string>

namespace relaynet {

std::string_view to_string(Objective objective) {
    return objective == Objective::sum ? "sum" : "max";
}

Objective parse_objective(std::string_view text) {
    if (text == "sum") return Objective::sum;
    if (text == "max") return Objective::max;
    throw DomainError("unknown objective '" + std::string(text) + "'");
}

std::string_view to_string(Decision decision) {
    switch (decision) {
    case Decision::skip: return "skip";
    case Decision::place: return "place";
    case Decision::forced_place: return "forced_place";
    }
    return "skip";
}

void DeploymentConfig::validate() const {
    if (!(theta > 0.0 && theta <= 1.0)) throw DomainError("theta must lie in (0, 1]");
    if (!(xi >= 0.0)) throw DomainError("relay cost must be nonnegative");
    if (r_max_steps < 1) throw DomainError("r_max_steps must be at least 1");
    if (memory_n < 1) throw DomainError("memory must be at least 1");
}

} // namespace relaynet
