#include "relaynet/memory.hpp"

#include "relaynet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace relaynet {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLatticeScale = 1e6;

std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

} // namespace

PathGrid::PathGrid(Objective objective, const PowerLevelSet& levels) : objective_(objective) {
    if (objective == Objective::max) {
        values_.push_back(0.0);
        for (std::size_t i = 0; i < levels.size(); ++i) {
            values_.push_back(levels[i]);
            level_units_.push_back(i + 1);
        }
        return;
    }

    // Sums of levels stay on the lattice generated by the levels' common pitch.
    long long g = 0;
    std::vector<long long> scaled;
    for (double level : levels.values()) {
        const double s = level * kLatticeScale;
        const long long q = std::llround(s);
        if (q <= 0 || std::fabs(s - static_cast<double>(q)) > 1e-6 * s) {
            throw DomainError("sum-objective memory policies need power levels on an arithmetic lattice");
        }
        scaled.push_back(q);
        g = std::gcd(g, q);
    }
    pitch_ = static_cast<double>(g) / kLatticeScale;
    for (long long q : scaled) level_units_.push_back(static_cast<std::size_t>(q / g));
    const std::size_t top = level_units_.back();
    if (top + 1 > std::numeric_limits<std::uint16_t>::max()) {
        throw DomainError("power levels too finely spaced for a sum-objective memory policy");
    }
    for (std::size_t j = 0; j <= top; ++j) values_.push_back(static_cast<double>(j) * pitch_);
}

std::size_t PathGrid::extend(std::size_t level, std::size_t p) const {
    if (objective_ == Objective::max) return std::max(level_units_[level], p);
    return level_units_[level] + p;
}

std::size_t PathGrid::index_of(double length_mw) const {
    if (!(length_mw >= 0.0)) throw DomainError("path length must be nonnegative");
    if (objective_ == Objective::max) {
        for (std::size_t j = 0; j < values_.size(); ++j) {
            if (std::fabs(values_[j] - length_mw) <= 1e-9 * values_[j]) return j;
        }
        throw DomainError("path length " + std::to_string(length_mw) + " mW is not a power level");
    }
    const double u = length_mw / pitch_;
    const double rounded = std::round(u);
    if (std::fabs(u - rounded) > 1e-6 || rounded >= static_cast<double>(values_.size())) {
        throw DomainError("path length " + std::to_string(length_mw) + " mW is off the grid");
    }
    return static_cast<std::size_t>(rounded);
}

MemoryIndex::MemoryIndex(int memory_n, int r_max, std::size_t grid) : n_(memory_n), r_max_(r_max), grid_(grid) {
    if (memory_n < 1 || r_max < 1 || grid < 1) throw DomainError("invalid memory index dimensions");
    std::size_t offset = 0;
    for (int l = 1; l <= n_; ++l) {
        const double approx = std::pow(static_cast<double>(r_max) * static_cast<double>(grid), l);
        if (approx + static_cast<double>(offset) > static_cast<double>(kMaxMemoryStates)) {
            throw DomainError("memory-" + std::to_string(memory_n) + " state space too large");
        }
        offsets_.push_back(offset);
        offset += ipow(static_cast<std::size_t>(r_max) * grid, l);
    }
    total_ = offset;
}

std::size_t MemoryIndex::encode(std::span<const int> y, std::span<const std::size_t> p) const {
    const int l = static_cast<int>(y.size());
    if (l < 1 || l > n_ || p.size() != y.size()) throw DomainError("window size must be 1..memory");
    std::size_t key = 0;
    for (int k = 0; k < l; ++k) {
        const int d = k == 0 ? y[0] : y[k] - y[k - 1];
        if (d < 1 || d > r_max_) throw DomainError("window distances outside the tabulated domain");
        key = key * static_cast<std::size_t>(r_max_) + static_cast<std::size_t>(d - 1);
    }
    for (int k = 0; k < l; ++k) {
        if (p[k] >= grid_) throw DomainError("path length index outside the grid");
        key = key * grid_ + p[k];
    }
    return offsets_[static_cast<std::size_t>(l - 1)] + key;
}

std::span<const std::int16_t> MemoryPolicy::y_of(std::size_t s) const {
    const auto n = static_cast<std::size_t>(config.memory_n);
    return {state_y.data() + s * n, state_size[s]};
}

std::span<const std::uint16_t> MemoryPolicy::p_of(std::size_t s) const {
    const auto n = static_cast<std::size_t>(config.memory_n);
    return {state_p.data() + s * n, state_size[s]};
}

namespace {

struct Canonical {
    std::size_t state;
    double shift;  // mW added back when the window was re-based
};

// Builds the state table and maps raw windows to state numbers.
class StateSpace {
public:
    explicit StateSpace(MemoryPolicy& policy)
        : policy_(policy), n_(policy.config.memory_n), r_(policy.config.r_max_steps) {}

    void enumerate() {
        policy_.lookup.assign(policy_.index.size(), -1);
        policy_.state_size.clear();
        policy_.state_y.clear();
        policy_.state_p.clear();
        std::vector<int> y;
        for (int l = 1; l <= n_; ++l) enumerate_y(l, y);
    }

    // Drops nodes beyond reach, truncates to n nodes and re-bases P (sum).
    Canonical canonical(std::vector<int>& y, std::vector<std::size_t>& p) const {
        std::size_t keep = 0;
        while (keep < y.size() && keep < static_cast<std::size_t>(n_) && y[keep] <= r_) ++keep;
        y.resize(keep);
        p.resize(keep);
        double shift = 0.0;
        if (policy_.grid.objective() == Objective::sum) {
            const std::size_t q = *std::min_element(p.begin(), p.end());
            for (auto& v : p) v -= q;
            shift = policy_.grid.value(q);
        }
        const auto id = policy_.lookup[policy_.index.encode(y, p)];
        return {static_cast<std::size_t>(id), shift};
    }

private:
    void enumerate_y(int l, std::vector<int>& y) {
        if (static_cast<int>(y.size()) == l) {
            std::vector<std::size_t> p;
            enumerate_p(y, p);
            return;
        }
        const int from = y.empty() ? 1 : y.back() + 1;
        for (int v = from; v <= r_; ++v) {
            y.push_back(v);
            enumerate_y(l, y);
            y.pop_back();
        }
    }

    void enumerate_p(const std::vector<int>& y, std::vector<std::size_t>& p) {
        if (p.size() == y.size()) {
            if (policy_.grid.objective() == Objective::sum && *std::min_element(p.begin(), p.end()) != 0) return;
            const auto n = static_cast<std::size_t>(n_);
            const std::size_t s = policy_.state_size.size();
            policy_.lookup[policy_.index.encode(y, p)] = static_cast<std::int32_t>(s);
            policy_.state_size.push_back(static_cast<std::uint8_t>(y.size()));
            for (std::size_t k = 0; k < n; ++k) {
                policy_.state_y.push_back(static_cast<std::int16_t>(k < y.size() ? y[k] : 0));
                policy_.state_p.push_back(static_cast<std::uint16_t>(k < p.size() ? p[k] : 0));
            }
            return;
        }
        for (std::size_t v = 0; v < policy_.grid.size(); ++v) {
            p.push_back(v);
            enumerate_p(y, p);
            p.pop_back();
        }
    }

    MemoryPolicy& policy_;
    int n_;
    int r_;
};

} // namespace

MemoryPolicy memory_layout(const DeploymentConfig& cfg, const PowerLevelSet& levels) {
    cfg.validate();
    MemoryPolicy policy;
    policy.config = cfg;
    policy.levels = levels;
    policy.grid = PathGrid(cfg.objective, levels);
    policy.index = MemoryIndex(cfg.memory_n, cfg.r_max_steps, policy.grid.size());
    StateSpace(policy).enumerate();
    return policy;
}

MemoryPolicy solve_memory(const LinkPowerModel& model, const DeploymentConfig& cfg, const SolveOptions& opts) {
    cfg.validate();
    if (!(opts.tol > 0.0) || opts.max_iters == 0) throw DomainError("invalid solver options");
    const int n = cfg.memory_n;
    const int rmax = cfg.r_max_steps;
    if (model.max_steps() < rmax) {
        throw DomainError("link model must cover " + std::to_string(rmax) + " steps");
    }

    MemoryPolicy policy = memory_layout(cfg, model.levels());
    const StateSpace space(policy);
    const auto& grid = policy.grid;
    const std::size_t m = grid.size();
    const std::size_t total = policy.state_size.size();
    const std::size_t k_levels = policy.levels.size();
    const double theta = cfg.theta;

    // surv[(r, p)][j] = P(extend(Gamma_r, p) > j)
    std::vector<double> surv(static_cast<std::size_t>(rmax) * m * m, 0.0);
    for (int r = 1; r <= rmax; ++r) {
        const auto g = model.pmf(r);
        for (std::size_t p = 0; p < m; ++p) {
            double* row = &surv[(static_cast<std::size_t>(r - 1) * m + p) * m];
            for (std::size_t i = 0; i < k_levels; ++i) {
                const std::size_t x = std::min(grid.extend(i, p), m);
                for (std::size_t j = 0; j < x; ++j) row[j] += g[i];
            }
        }
    }

    // Statistic pmf, line-end cost and successors for every state.
    std::vector<double> stat_pmf(total * m, 0.0);
    std::vector<double> terminal(total, 0.0);
    std::vector<std::int64_t> skip_to(total, -1);
    std::vector<double> skip_shift(total, 0.0);
    std::vector<std::size_t> place_to(total * m, 0);
    std::vector<double> place_shift(total * m, 0.0);
    std::vector<int> y;
    std::vector<std::size_t> p;
    for (std::size_t s = 0; s < total; ++s) {
        const auto ys = policy.y_of(s);
        const auto ps = policy.p_of(s);
        double above_prev = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
            double above = 1.0;
            for (std::size_t k = 0; k < ys.size(); ++k) {
                above *= surv[(static_cast<std::size_t>(ys[k] - 1) * m + ps[k]) * m + j];
            }
            stat_pmf[s * m + j] = above_prev - above;
            terminal[s] += (above_prev - above) * grid.value(j);
            above_prev = above;
        }
        if (above_prev > 1e-12) {
            throw DomainError("statistic escapes the path grid");
        }

        if (ys[0] < rmax) {
            y.assign(ys.begin(), ys.end());
            p.assign(ps.begin(), ps.end());
            for (auto& v : y) ++v;
            const auto c = space.canonical(y, p);
            skip_to[s] = static_cast<std::int64_t>(c.state);
            skip_shift[s] = c.shift;
        }
        for (std::size_t j = 1; j < m; ++j) {
            y.assign(1, 1);
            p.assign(1, j);
            for (std::size_t k = 0; k < ys.size(); ++k) {
                y.push_back(ys[k] + 1);
                p.push_back(ps[k]);
            }
            const auto c = space.canonical(y, p);
            place_to[s * m + j] = c.state;
            place_shift[s * m + j] = c.shift;
        }
    }

    // Gauss-Seidel in order of decreasing y_1, so skip successors are fresh.
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return policy.y_of(a)[0] > policy.y_of(b)[0]; });

    y.assign(1, 1);
    p.assign(1, 0);
    const std::size_t start = space.canonical(y, p).state;
    std::vector<double> w(total, 0.0);
    auto arrive = [&](std::size_t s) { return theta * terminal[s] + (1.0 - theta) * w[s]; };
    auto skip_cost = [&](std::size_t s) {
        return skip_to[s] < 0 ? kInf : skip_shift[s] + arrive(static_cast<std::size_t>(skip_to[s]));
    };

    double residual = kInf;
    std::size_t iter = 0;
    while (iter < opts.max_iters) {
        ++iter;
        residual = 0.0;
        for (std::size_t s : order) {
            const double cnp = skip_cost(s);
            double acc = 0.0;
            for (std::size_t j = 1; j < m; ++j) {
                const double prob = stat_pmf[s * m + j];
                if (prob == 0.0) continue;
                const double cp = cfg.xi + place_shift[s * m + j] + arrive(place_to[s * m + j]);
                acc += prob * std::min(cp, cnp);
            }
            residual = std::max(residual, std::fabs(acc - w[s]));
            w[s] = acc;
        }
        if (opts.observer) opts.observer(iter, arrive(start), w);
        if (residual < opts.tol) break;
    }
    if (!(residual < opts.tol)) {
        throw ConvergenceError("memory-" + std::to_string(n) + " function iteration did not converge", residual,
                               iter);
    }

    policy.value = w;
    policy.j0 = arrive(start);
    policy.residual = residual;
    policy.iterations = iter;

    // c(y, P): the largest statistic value at which placing is optimal.
    policy.threshold.assign(total, 0);
    for (std::size_t s = 0; s < total; ++s) {
        if (skip_to[s] < 0) {
            policy.threshold[s] = static_cast<std::uint16_t>(m - 1);
            continue;
        }
        const double cnp = skip_cost(s);
        for (std::size_t j = 1; j < m; ++j) {
            if (cfg.xi + place_shift[s * m + j] + arrive(place_to[s * m + j]) <= cnp) {
                policy.threshold[s] = static_cast<std::uint16_t>(j);
            }
        }
    }
    return policy;
}

std::size_t MemoryPolicy::locate(std::span<const int> y, std::span<const double> P, double* shift) const {
    if (y.empty() || y.size() != P.size()) throw DomainError("window needs matching, nonempty y and P");
    if (y[0] < 1) throw DomainError("distances must be at least one step");
    for (std::size_t k = 1; k < y.size(); ++k) {
        if (y[k] <= y[k - 1]) throw DomainError("window distances must be strictly increasing");
    }
    if (y[0] > config.r_max_steps) throw DomainError("distance to the last node exceeds r_max");
    std::size_t keep = 0;
    while (keep < y.size() && y[keep] <= config.r_max_steps) ++keep;
    if (keep > static_cast<std::size_t>(config.memory_n)) throw DomainError("window holds more nodes than the memory");

    double base = 0.0;
    if (grid.objective() == Objective::sum) {
        base = *std::min_element(P.begin(), P.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::vector<std::size_t> p;
    for (std::size_t k = 0; k < keep; ++k) p.push_back(grid.index_of(P[k] - base));
    const auto id = lookup[index.encode(y.first(keep), p)];
    if (id < 0) throw DomainError("window outside the tabulated domain");
    if (shift) *shift = base;
    return static_cast<std::size_t>(id);
}

double MemoryPolicy::threshold_mw(std::span<const int> y, std::span<const double> P) const {
    double shift = 0.0;
    const auto c = threshold[locate(y, P, &shift)];
    return c == 0 ? 0.0 : grid.value(c) + shift;
}

double MemoryPolicy::value_at(std::span<const int> y, std::span<const double> P) const {
    double shift = 0.0;
    const auto s = locate(y, P, &shift);
    return value[s] + shift;
}

double new_shortest_path(const MemoryState& state, Objective objective) {
    if (state.gamma.empty() || state.gamma.size() != state.P.size()) {
        throw DomainError("shortest path needs matching, nonempty gamma and P");
    }
    double best = kInf;
    for (std::size_t k = 0; k < state.gamma.size(); ++k) {
        const double len = objective == Objective::sum ? state.gamma[k] + state.P[k]
                                                       : std::max(state.gamma[k], state.P[k]);
        best = std::min(best, len);
    }
    return best;
}

Decision place_decision_memory(const MemoryPolicy& policy, const MemoryState& state) {
    if (state.gamma.size() != state.y.size()) throw DomainError("one measurement per visible node is required");
    double shift = 0.0;
    const std::size_t s = policy.locate(state.y, state.P, &shift);
    if (state.y[0] == policy.config.r_max_steps) return Decision::forced_place;
    const auto ys = policy.y_of(s);
    const auto ps = policy.p_of(s);
    std::size_t stat = std::numeric_limits<std::size_t>::max();
    for (std::size_t k = 0; k < ys.size(); ++k) {
        stat = std::min(stat, policy.grid.extend(policy.levels.index_of(state.gamma[k]), ps[k]));
    }
    return stat <= policy.threshold[s] ? Decision::place : Decision::skip;
}

} // namespace relaynet
