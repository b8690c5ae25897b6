#pragma once

// Placement when a packet may skip relays: any link spanning at most n node
// indices can be used after deployment. The operative tracks, for the n most
// recent nodes, the distance y_k, the shortest-path length P_k from that node
// to the sink, and the measured link power gamma_k to it.
//
// A node is reachable only while it lies within r_max steps; once farther it
// can never be used again and leaves the window.

#include "relaynet/channel.hpp"
#include "relaynet/config.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace relaynet {

/// Live decision state. Index 0 is the most recent node.
struct MemoryState {
    std::vector<int> y;          ///< distances in steps, strictly increasing, y[0] >= 1
    std::vector<double> P;       ///< shortest-path lengths at those nodes, mW
    std::vector<double> gamma;   ///< measured link powers, mW; +inf for an unusable link
};

/// Finite lattice on which (normalized) shortest-path lengths live. For the
/// max objective it is {0} U S. For the sum objective it is {0, h, ..., top}
/// where h is the common pitch of the levels and top the largest level.
class PathGrid {
public:
    PathGrid() = default;
    PathGrid(Objective objective, const PowerLevelSet& levels);

    Objective objective() const noexcept { return objective_; }
    std::size_t size() const noexcept { return values_.size(); }
    double value(std::size_t j) const { return values_[j]; }
    const std::vector<double>& values() const noexcept { return values_; }
    double pitch() const noexcept { return pitch_; }

    /// Grid index of the path obtained by extending a path of index p with a
    /// link at power level `level`. For sum the result may exceed size() - 1.
    std::size_t extend(std::size_t level, std::size_t p) const;
    /// Grid index of a path length. Throws DomainError off the grid.
    std::size_t index_of(double length_mw) const;

    bool operator==(const PathGrid&) const = default;

private:
    Objective objective_ = Objective::sum;
    std::vector<double> values_;
    std::vector<std::size_t> level_units_;
    double pitch_ = 0.0;
};

/// Dense key over windows of 1..n nodes: (y_1, d_2..d_l, P_1..P_l) in
/// row-major order per window size, with d_k = y_k - y_{k-1}.
class MemoryIndex {
public:
    MemoryIndex() = default;
    MemoryIndex(int memory_n, int r_max, std::size_t grid);

    std::size_t size() const noexcept { return total_; }
    int memory() const noexcept { return n_; }
    int r_max() const noexcept { return r_max_; }
    std::size_t grid() const noexcept { return grid_; }

    std::size_t encode(std::span<const int> y, std::span<const std::size_t> p) const;

    bool operator==(const MemoryIndex&) const = default;

private:
    int n_ = 0;
    int r_max_ = 0;
    std::size_t grid_ = 0;
    std::vector<std::size_t> offsets_;
    std::size_t total_ = 0;
};

struct MemoryPolicy {
    DeploymentConfig config;
    PowerLevelSet levels;
    PathGrid grid;
    MemoryIndex index;
    std::vector<std::int32_t> lookup;     ///< dense key -> state number, -1 if not a state
    std::vector<std::uint8_t> state_size; ///< window size per state
    std::vector<std::int16_t> state_y;    ///< n slots per state, unused slots 0
    std::vector<std::uint16_t> state_p;   ///< n slots per state, grid indices
    std::vector<double> value;            ///< W(y, P) = E J(y; P; Gamma) per state
    std::vector<std::uint16_t> threshold; ///< grid index of c(y, P); 0 = never place
    double j0 = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;

    std::size_t states() const noexcept { return value.size(); }
    std::span<const std::int16_t> y_of(std::size_t s) const;
    std::span<const std::uint16_t> p_of(std::size_t s) const;

    /// State number of a window, after dropping unreachable nodes and (sum)
    /// shifting P so its minimum is 0; `shift` receives that minimum in mW.
    std::size_t locate(std::span<const int> y, std::span<const double> P, double* shift = nullptr) const;

    /// c(y, P) in mW on the caller's P scale; 0 means never place.
    double threshold_mw(std::span<const int> y, std::span<const double> P) const;
    /// Expected cost-to-go W(y, P) in mW on the caller's P scale.
    double value_at(std::span<const int> y, std::span<const double> P) const;

    bool operator==(const MemoryPolicy&) const = default;
};

/// Caps the number of tabulated states; larger problems are refused.
constexpr std::size_t kMaxMemoryStates = 20'000'000;

/// A policy with its state layout filled in and no values; solve_memory and
/// the policy store both start from it.
MemoryPolicy memory_layout(const DeploymentConfig& cfg, const PowerLevelSet& levels);

MemoryPolicy solve_memory(const LinkPowerModel& model, const DeploymentConfig& cfg, const SolveOptions& opts = {});

/// Shortest-path length from a node placed at the current location:
/// min_k (gamma_k + P_k) for sum, min_k max(gamma_k, P_k) for max.
double new_shortest_path(const MemoryState& state, Objective objective);

/// place iff the statistic min_k f(gamma_k, P_k) <= c(y, P), or y_1 = r_max.
Decision place_decision_memory(const MemoryPolicy& policy, const MemoryState& state);

} // namespace relaynet
