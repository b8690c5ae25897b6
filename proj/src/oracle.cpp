#include "relaynet/adjacent.hpp"

#include "relaynet/errors.hpp"

#include <algorithm>
#include <limits>
#include <vector>

// Exhaustive backward induction for the truncated line. Deliberately shares
// nothing with the function-iteration code in adjacent.cpp beyond the pmf
// table: every state (t, r, gamma[, gamma_max]) carries its own cost-to-go
// and every expectation is an explicit loop over the next link's levels.

namespace relaynet {
namespace {

struct SumTable {
    int rmax;
    std::size_t k;
    std::vector<double> cost;  // (r - 1) * k + i

    double& at(int r, std::size_t i) { return cost[static_cast<std::size_t>(r - 1) * k + i]; }
    double at(int r, std::size_t i) const { return cost[static_cast<std::size_t>(r - 1) * k + i]; }
};

struct MaxTable {
    int rmax;
    std::size_t k;
    std::vector<double> cost;  // ((r - 1) * k + i) * (k + 1) + j

    double& at(int r, std::size_t i, std::size_t j) {
        return cost[(static_cast<std::size_t>(r - 1) * k + i) * (k + 1) + j];
    }
    double at(int r, std::size_t i, std::size_t j) const {
        return cost[(static_cast<std::size_t>(r - 1) * k + i) * (k + 1) + j];
    }
};

double sum_oracle(const LinkPowerModel& model, const DeploymentConfig& cfg, int cap) {
    const auto& s = model.levels();
    const std::size_t k = s.size();
    const int rmax = cfg.r_max_steps;
    const double inf = std::numeric_limits<double>::infinity();
    SumTable next{rmax, k, std::vector<double>(static_cast<std::size_t>(rmax) * k, 0.0)};
    SumTable cur = next;

    // Line-end cost if the source lands d steps from the last node, given the
    // table of cost-to-go at position t + 1 (unused when the line surely ends).
    auto arrival = [&](int d, double end_prob, const SumTable& after) {
        double terminal = 0.0;
        double onward = 0.0;
        for (std::size_t i2 = 0; i2 < k; ++i2) {
            const double p = model.pmf(d, i2);
            terminal += p * s[i2];
            if (end_prob < 1.0) onward += p * after.at(d, i2);
        }
        return end_prob * terminal + (end_prob < 1.0 ? (1.0 - end_prob) * onward : 0.0);
    };

    for (int t = cap - 1; t >= 1; --t) {
        const double end_prob = (t + 1 < cap) ? cfg.theta : 1.0;
        const double regen = arrival(1, end_prob, next);
        for (int r = 1; r <= std::min(t, rmax); ++r) {
            for (std::size_t i = 0; i < k; ++i) {
                const double place = cfg.xi + s[i] + regen;
                const double skip = (r < rmax) ? arrival(r + 1, end_prob, next) : inf;
                cur.at(r, i) = std::min(place, skip);
            }
        }
        std::swap(cur, next);
    }
    const double end_prob = (1 < cap) ? cfg.theta : 1.0;
    return arrival(1, end_prob, next);
}

double max_oracle(const LinkPowerModel& model, const DeploymentConfig& cfg, int cap) {
    const auto& s = model.levels();
    const std::size_t k = s.size();
    const int rmax = cfg.r_max_steps;
    const double inf = std::numeric_limits<double>::infinity();
    auto grid_value = [&](std::size_t j) { return j == 0 ? 0.0 : s[j - 1]; };
    MaxTable next{rmax, k, std::vector<double>(static_cast<std::size_t>(rmax) * k * (k + 1), 0.0)};
    MaxTable cur = next;

    // Cost of arriving d steps past the last node with running maximum j.
    auto arrival = [&](int d, std::size_t j, double end_prob, const MaxTable& after) {
        double terminal = 0.0;
        double onward = 0.0;
        for (std::size_t i2 = 0; i2 < k; ++i2) {
            const double p = model.pmf(d, i2);
            terminal += p * std::max(grid_value(j), s[i2]);
            if (end_prob < 1.0) onward += p * after.at(d, i2, j);
        }
        return end_prob * terminal + (end_prob < 1.0 ? (1.0 - end_prob) * onward : 0.0);
    };

    for (int t = cap - 1; t >= 1; --t) {
        const double end_prob = (t + 1 < cap) ? cfg.theta : 1.0;
        for (int r = 1; r <= std::min(t, rmax); ++r) {
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = 0; j <= k; ++j) {
                    const std::size_t new_max = std::max(i + 1, j);
                    const double place = cfg.xi + arrival(1, new_max, end_prob, next);
                    const double skip = (r < rmax) ? arrival(r + 1, j, end_prob, next) : inf;
                    cur.at(r, i, j) = std::min(place, skip);
                }
            }
        }
        std::swap(cur, next);
    }
    const double end_prob = (1 < cap) ? cfg.theta : 1.0;
    return arrival(1, 0, end_prob, next);
}

} // namespace

double brute_force_truncated(const LinkPowerModel& model, const DeploymentConfig& cfg, int line_cap) {
    cfg.validate();
    if (line_cap < 1) throw DomainError("line cap must be at least one step");
    if (model.max_steps() < cfg.r_max_steps) throw DomainError("link power model too short");
    return cfg.objective == Objective::sum ? sum_oracle(model, cfg, line_cap) : max_oracle(model, cfg, line_cap);
}

} // namespace relaynet
