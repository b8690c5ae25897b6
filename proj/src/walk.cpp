#include "relaynet/walk.hpp"

#include "relaynet/errors.hpp"

#include <algorithm>
#include <string>

namespace relaynet {

std::string_view to_string(FailureKind kind) {
    return kind == FailureKind::forced_link ? "forced-link" : "source-link";
}

Walker::Walker(const Policy& policy)
    : policy_(&policy),
      memory_(policy_memory(policy)),
      r_max_(policy_config(policy).r_max_steps),
      objective_(policy_config(policy).objective) {}

int Walker::relays() const noexcept {
    return static_cast<int>(placements_.size()) - (ended_ ? 1 : 0);
}

std::vector<std::size_t> Walker::window_nodes(int at) const {
    std::vector<std::size_t> out;
    for (std::size_t k = nodes_.size(); k-- > 0 && out.size() < static_cast<std::size_t>(memory_);) {
        if (at - nodes_[k] > r_max_) break;
        out.push_back(k);
    }
    return out;
}

std::vector<int> Walker::pending_distances() const {
    std::vector<int> d;
    for (auto k : window_nodes(position_ + 1)) d.push_back(position_ + 1 - nodes_[k]);
    return d;
}

MemoryState Walker::pending_window() const {
    MemoryState st;
    for (auto k : window_nodes(position_ + 1)) {
        st.y.push_back(position_ + 1 - nodes_[k]);
        st.P.push_back(node_paths_[k]);
    }
    return st;
}

MemoryState Walker::measured_state(std::span<const double> required_mw, std::vector<double>& levels) const {
    if (ended_) throw DomainError("the line has already ended");
    MemoryState st = pending_window();
    if (st.y.empty()) throw DomainError("walked beyond reach of every node");
    if (required_mw.size() != st.y.size()) {
        throw DomainError("expected " + std::to_string(st.y.size()) + " measurements, got " +
                          std::to_string(required_mw.size()));
    }
    const auto& s = policy_levels(*policy_);
    levels.clear();
    for (double p : required_mw) {
        if (!(p >= 0.0)) throw DomainError("measured power must be nonnegative");
        levels.push_back(quantize_power(p, s));
    }
    st.gamma = levels;
    return st;
}

void Walker::record_node(std::span<const double> required_mw, const MemoryState& state) {
    const double path = new_shortest_path(state, objective_);
    const auto window = window_nodes(position_);
    for (std::size_t k = 0; k < window.size(); ++k) {
        links_.push_back({position_, nodes_[window[k]], required_mw[k], state.gamma[k]});
    }
    nodes_.push_back(position_);
    node_paths_.push_back(path);
    placements_.push_back(position_);
    paths_.push_back(path);
}

StepOutcome Walker::step(std::span<const double> required_mw) {
    StepOutcome out;
    const MemoryState st = measured_state(required_mw, out.levels_mw);
    ++position_;
    out.position = position_;
    out.distances = st.y;
    const double top = policy_levels(*policy_).max();
    const bool all_over = std::all_of(required_mw.begin(), required_mw.end(), [&](double p) { return p > top; });
    const bool any_over = std::any_of(required_mw.begin(), required_mw.end(), [&](double p) { return p > top; });

    out.decision = st.y[0] >= r_max_ ? Decision::forced_place : decide(*policy_, st);
    if (places(out.decision)) {
        record_node(required_mw, st);
        out.path_mw = paths_.back();
        if (out.decision == Decision::forced_place && all_over) {
            failures_.push_back({position_, FailureKind::forced_link});
            out.failed = true;
        }
    } else if (st.y[0] == r_max_ - 1) {
        out.warnings.push_back("forced placement at the next step");
    }
    if (any_over) out.warnings.push_back("measured power exceeds the top level; link may fail");
    return out;
}

EndOutcome Walker::end(std::span<const double> required_mw) {
    std::vector<double> levels;
    const MemoryState st = measured_state(required_mw, levels);
    ++position_;
    const double top = policy_levels(*policy_).max();
    EndOutcome out;
    out.position = position_;
    out.relays = static_cast<int>(placements_.size());
    record_node(required_mw, st);
    ended_ = true;
    out.path_cost = paths_.back();
    if (std::all_of(required_mw.begin(), required_mw.end(), [&](double p) { return p > top; })) {
        failures_.push_back({position_, FailureKind::source_link});
    }
    out.failed = !failures_.empty();
    return out;
}

} // namespace relaynet
