#pragma once

// Step-by-step deployment along a line, shared by the simulator and the
// assistant service so both apply a policy identically.

#include "relaynet/policy.hpp"

#include <span>
#include <string>
#include <vector>

namespace relaynet {

enum class FailureKind { forced_link, source_link };
std::string_view to_string(FailureKind kind);

struct FailureEvent {
    int position;  ///< steps from the sink
    FailureKind kind;
    bool operator==(const FailureEvent&) const = default;
};

/// A measured link from a placed node back to an earlier node (0 = sink).
struct LinkSample {
    int from;
    int to;
    double required_mw;
    double level_mw;
    bool operator==(const LinkSample&) const = default;
};

struct StepOutcome {
    int position = 0;
    Decision decision = Decision::skip;
    std::vector<int> distances;      ///< to the reachable nodes, most recent first
    std::vector<double> levels_mw;   ///< quantized measurements
    double path_mw = 0.0;            ///< shortest path at the new relay, if placed
    bool failed = false;
    std::vector<std::string> warnings;
};

struct EndOutcome {
    int position = 0;
    int relays = 0;
    double path_cost = 0.0;
    bool failed = false;
};

class Walker {
public:
    /// The policy must outlive the walker.
    explicit Walker(const Policy& policy);

    const Policy& policy() const noexcept { return *policy_; }
    int position() const noexcept { return position_; }
    bool ended() const noexcept { return ended_; }
    /// Distances from the next location to the nodes a link may reach.
    std::vector<int> pending_distances() const;
    /// Window as seen from the next location, with gamma left empty.
    MemoryState pending_window() const;

    /// Moves one step and decides, given the continuous required powers to
    /// pending_distances() in order. Raw values are quantized to levels.
    StepOutcome step(std::span<const double> required_mw);
    /// Moves one step and places the source there.
    EndOutcome end(std::span<const double> required_mw);

    /// Relay positions, then the source once ended.
    const std::vector<int>& placements() const noexcept { return placements_; }
    /// Shortest-path length at each placed node.
    const std::vector<double>& path_lengths() const noexcept { return paths_; }
    const std::vector<LinkSample>& links() const noexcept { return links_; }
    const std::vector<FailureEvent>& failures() const noexcept { return failures_; }
    int relays() const noexcept;

private:
    std::vector<std::size_t> window_nodes(int at) const;
    MemoryState measured_state(std::span<const double> required_mw, std::vector<double>& levels) const;
    void record_node(std::span<const double> required_mw, const MemoryState& state);

    const Policy* policy_;
    int memory_;
    int r_max_;
    Objective objective_;
    int position_ = 0;
    bool ended_ = false;
    std::vector<int> nodes_{0};        // sink first
    std::vector<double> node_paths_{0.0};
    std::vector<int> placements_;
    std::vector<double> paths_;
    std::vector<LinkSample> links_;
    std::vector<FailureEvent> failures_;
};

} // namespace relaynet
