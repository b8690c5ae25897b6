#pragma once

// Optimal as-you-go placement when every relay forwards only to the node
// placed immediately before it. Two objectives: expected sum of link powers
// plus relay cost, and expected maximum link power plus relay cost.

#include "relaynet/channel.hpp"
#include "relaynet/config.hpp"

#include <cstddef>
#include <vector>

namespace relaynet {

/// Sum-power policy. Tables are indexed by r - 1 for r = 1..r_max_steps.
struct SumAdjacentPolicy {
    DeploymentConfig config;
    PowerLevelSet levels;
    std::vector<double> value;          ///< V(r) = E J(r, Gamma_r)
    double j0 = 0.0;                    ///< J(0), the optimal expected cost
    std::vector<double> threshold_raw;  ///< continuous threshold, clipped to [0, max level]
    std::vector<double> gamma_th;       ///< largest level at which placing is optimal; 0 = never
    double residual = 0.0;
    std::size_t iterations = 0;

    double gamma_th_at(int r) const;

    bool operator==(const SumAdjacentPolicy&) const = default;
};

/// Max-power policy. The running maximum gamma_max lives on the grid
/// {0} U S; grid index 0 is the "no link yet" value 0 mW and grid index j > 0
/// is levels[j - 1]. Two-dimensional tables are r-major: (r - 1) * grid + j.
struct MaxAdjacentPolicy {
    DeploymentConfig config;
    PowerLevelSet levels;
    std::vector<double> value;     ///< V(r, gamma_max)
    double j0 = 0.0;
    std::vector<int> r_th;         ///< per gamma_max grid index
    std::vector<double> gamma_th;  ///< gamma_th(r, gamma_max), 0 = never
    double residual = 0.0;
    std::size_t iterations = 0;

    std::size_t grid_size() const { return levels.size() + 1; }
    double grid_value(std::size_t j) const { return j == 0 ? 0.0 : levels[j - 1]; }
    /// Grid index of a gamma_max value (0 or one of the levels).
    std::size_t grid_index(double gamma_max_mw) const;
    double value_at(int r, std::size_t j) const;
    double gamma_th_at(int r, std::size_t j) const;

    bool operator==(const MaxAdjacentPolicy&) const = default;
};

SumAdjacentPolicy solve_sum_adjacent(const LinkPowerModel& model, const DeploymentConfig& cfg,
                                     const SolveOptions& opts = {});

MaxAdjacentPolicy solve_max_adjacent(const LinkPowerModel& model, const DeploymentConfig& cfg,
                                     const SolveOptions& opts = {});

/// Sum objective: place iff gamma <= gamma_th(r); forced at r_max.
Decision place_decision(const SumAdjacentPolicy& policy, int r, double gamma_mw);

/// Max objective: place iff (gamma <= gamma_max and r >= r_th(gamma_max)) or
/// (gamma > gamma_max and gamma <= gamma_th(r, gamma_max)); forced at r_max.
Decision place_decision(const MaxAdjacentPolicy& policy, int r, double gamma_mw, double gamma_max_mw);

/// Optimal J(0) when the line is cut at `horizon` steps (all geometric tail
/// mass moved onto the last step), by backward induction on the expected
/// value functions V_t.
double solve_truncated_j0(const LinkPowerModel& model, const DeploymentConfig& cfg, int horizon);

/// Independent oracle for solve_truncated_j0: backward induction over every
/// (position, r, gamma[, gamma_max]) state, enumerating both actions and every
/// next-step power explicitly.
double brute_force_truncated(const LinkPowerModel& model, const DeploymentConfig& cfg, int line_cap);

} // namespace relaynet
