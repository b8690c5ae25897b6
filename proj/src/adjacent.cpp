#include "relaynet/adjacent.hpp"

#include "relaynet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace relaynet {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_inputs(const LinkPowerModel& model, const DeploymentConfig& cfg, Objective expected) {
    cfg.validate();
    if (cfg.objective != expected) {
        throw DomainError("configuration objective does not match the solver");
    }
    if (model.max_steps() < cfg.r_max_steps) {
        throw DomainError("link power model covers " + std::to_string(model.max_steps()) +
                          " steps, solver needs " + std::to_string(cfg.r_max_steps));
    }
}

void check_options(const SolveOptions& opts) {
    if (!(opts.tol > 0.0)) throw DomainError("tolerance must be positive");
    if (opts.max_iters == 0) throw DomainError("max_iters must be positive");
}

// E max(a, Gamma_r).
double expected_max_with(const LinkPowerModel& model, int r, double a) {
    const auto g = model.pmf(r);
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        e += g[i] * std::max(a, model.levels()[i]);
    }
    return e;
}

std::size_t index_in_r(int r) { return static_cast<std::size_t>(r - 1); }

} // namespace

double SumAdjacentPolicy::gamma_th_at(int r) const {
    if (r < 1 || r > config.r_max_steps) {
        throw DomainError("distance " + std::to_string(r) + " outside the policy table");
    }
    return gamma_th[index_in_r(r)];
}

std::size_t MaxAdjacentPolicy::grid_index(double gamma_max_mw) const {
    if (gamma_max_mw == 0.0) {
        return 0;
    }
    return levels.index_of(gamma_max_mw) + 1;
}

double MaxAdjacentPolicy::value_at(int r, std::size_t j) const {
    if (r < 1 || r > config.r_max_steps || j >= grid_size()) {
        throw DomainError("state outside the max-power value table");
    }
    return value[index_in_r(r) * grid_size() + j];
}

double MaxAdjacentPolicy::gamma_th_at(int r, std::size_t j) const {
    if (r < 1 || r > config.r_max_steps || j >= grid_size()) {
        throw DomainError("state outside the max-power threshold table");
    }
    return gamma_th[index_in_r(r) * grid_size() + j];
}

SumAdjacentPolicy solve_sum_adjacent(const LinkPowerModel& model, const DeploymentConfig& cfg,
                                     const SolveOptions& opts) {
    check_inputs(model, cfg, Objective::sum);
    check_options(opts);
    const int rmax = cfg.r_max_steps;
    const double theta = cfg.theta;
    const auto& levels = model.levels();

    // Not placing at r costs theta E(Gamma_{r+1}) + (1 - theta) V(r + 1);
    // beyond r_max the value is infinite, so r_max forces a placement.
    auto skip_cost = [&](const std::vector<double>& v, int r) {
        if (r >= rmax) return kInf;
        return theta * model.mean_level_power(r + 1) + (1.0 - theta) * v[index_in_r(r + 1)];
    };

    std::vector<double> v(static_cast<std::size_t>(rmax), 0.0);
    std::vector<double> next(v.size());
    std::vector<double> observed(v.size() + 1);
    double j0 = 0.0;
    double residual = kInf;
    std::size_t iter = 0;
    while (iter < opts.max_iters) {
        ++iter;
        residual = 0.0;
        for (int r = 1; r <= rmax; ++r) {
            const double cnp = skip_cost(v, r);
            const auto g = model.pmf(r);
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                acc += g[i] * std::min(cfg.xi + levels[i] + j0, cnp);
            }
            next[index_in_r(r)] = acc;
            residual = std::max(residual, std::fabs(acc - v[index_in_r(r)]));
        }
        const double j0_next = theta * model.mean_level_power(1) + (1.0 - theta) * v[0];
        residual = std::max(residual, std::fabs(j0_next - j0));
        j0 = j0_next;
        v.swap(next);
        if (opts.observer) {
            observed[0] = j0;
            std::copy(v.begin(), v.end(), observed.begin() + 1);
            opts.observer(iter, j0, observed);
        }
        if (residual < opts.tol) break;
    }
    if (!(residual < opts.tol)) {
        throw ConvergenceError("sum-power function iteration did not converge", residual, iter);
    }

    SumAdjacentPolicy policy;
    policy.config = cfg;
    policy.levels = levels;
    policy.value = v;
    policy.j0 = j0;
    policy.residual = residual;
    policy.iterations = iter;
    policy.threshold_raw.resize(v.size());
    policy.gamma_th.resize(v.size());
    for (int r = 1; r <= rmax; ++r) {
        const double cnp = skip_cost(v, r);
        if (r == rmax) {
            policy.threshold_raw[index_in_r(r)] = levels.max();
            policy.gamma_th[index_in_r(r)] = levels.max();
            continue;
        }
        policy.threshold_raw[index_in_r(r)] = std::clamp(cnp - cfg.xi - j0, 0.0, levels.max());
        double th = 0.0;
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (cfg.xi + levels[i] + j0 <= cnp) th = levels[i];
        }
        policy.gamma_th[index_in_r(r)] = th;
    }
    return policy;
}

MaxAdjacentPolicy solve_max_adjacent(const LinkPowerModel& model, const DeploymentConfig& cfg,
                                     const SolveOptions& opts) {
    check_inputs(model, cfg, Objective::max);
    check_options(opts);
    const int rmax = cfg.r_max_steps;
    const double theta = cfg.theta;
    const auto& levels = model.levels();
    const std::size_t grid = levels.size() + 1;
    auto grid_value = [&](std::size_t j) { return j == 0 ? 0.0 : levels[j - 1]; };
    auto at = [grid](int r, std::size_t j) { return index_in_r(r) * grid + j; };

    // emax[(r-1) * grid + j] = E max(grid_j, Gamma_r)
    std::vector<double> emax(static_cast<std::size_t>(rmax) * grid);
    for (int r = 1; r <= rmax; ++r) {
        for (std::size_t j = 0; j < grid; ++j) {
            emax[at(r, j)] = expected_max_with(model, r, grid_value(j));
        }
    }

    std::vector<double> v(emax.size(), 0.0);
    std::vector<double> next(v.size());
    std::vector<double> observed(v.size() + 1);
    std::vector<double> place_cost(grid);
    double residual = kInf;
    std::size_t iter = 0;

    // Placing with new running maximum m costs
    // xi + theta E max(m, Gamma_1) + (1 - theta) V(1, m).
    auto fill_place_cost = [&](const std::vector<double>& vals) {
        for (std::size_t m = 0; m < grid; ++m) {
            place_cost[m] = cfg.xi + theta * emax[at(1, m)] + (1.0 - theta) * vals[at(1, m)];
        }
    };
    auto skip_cost = [&](const std::vector<double>& vals, int r, std::size_t j) {
        if (r >= rmax) return kInf;
        return theta * emax[at(r + 1, j)] + (1.0 - theta) * vals[at(r + 1, j)];
    };

    while (iter < opts.max_iters) {
        ++iter;
        residual = 0.0;
        fill_place_cost(v);
        for (int r = 1; r <= rmax; ++r) {
            const auto g = model.pmf(r);
            for (std::size_t j = 0; j < grid; ++j) {
                const double cnp = skip_cost(v, r, j);
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    acc += g[i] * std::min(place_cost[std::max(i + 1, j)], cnp);
                }
                next[at(r, j)] = acc;
                residual = std::max(residual, std::fabs(acc - v[at(r, j)]));
            }
        }
        v.swap(next);
        if (opts.observer) {
            observed[0] = theta * model.mean_level_power(1) + (1.0 - theta) * v[at(1, 0)];
            std::copy(v.begin(), v.end(), observed.begin() + 1);
            opts.observer(iter, observed[0], observed);
        }
        if (residual < opts.tol) break;
    }
    if (!(residual < opts.tol)) {
        throw ConvergenceError("max-power function iteration did not converge", residual, iter);
    }

    MaxAdjacentPolicy policy;
    policy.config = cfg;
    policy.levels = levels;
    policy.value = v;
    policy.j0 = theta * model.mean_level_power(1) + (1.0 - theta) * v[at(1, 0)];
    policy.residual = residual;
    policy.iterations = iter;
    policy.gamma_th.assign(v.size(), 0.0);
    policy.r_th.assign(grid, rmax);

    fill_place_cost(v);
    for (int r = 1; r <= rmax; ++r) {
        for (std::size_t j = 0; j < grid; ++j) {
            if (r == rmax) {
                policy.gamma_th[at(r, j)] = levels.max();
                continue;
            }
            const double cnp = skip_cost(v, r, j);
            double th = 0.0;
            for (std::size_t i = 0; i < levels.size(); ++i) {
                if (place_cost[i + 1] <= cnp) th = levels[i];
            }
            policy.gamma_th[at(r, j)] = th;
        }
    }
    for (std::size_t j = 0; j < grid; ++j) {
        for (int r = 1; r <= rmax; ++r) {
            if (grid_value(j) <= policy.gamma_th[at(r, j)]) {
                policy.r_th[j] = r;
                break;
            }
        }
    }
    return policy;
}

Decision place_decision(const SumAdjacentPolicy& policy, int r, double gamma_mw) {
    const double th = policy.gamma_th_at(r);
    policy.levels.index_of(gamma_mw);
    if (r == policy.config.r_max_steps) return Decision::forced_place;
    return gamma_mw <= th ? Decision::place : Decision::skip;
}

Decision place_decision(const MaxAdjacentPolicy& policy, int r, double gamma_mw, double gamma_max_mw) {
    const std::size_t j = policy.grid_index(gamma_max_mw);
    const double th = policy.gamma_th_at(r, j);
    policy.levels.index_of(gamma_mw);
    if (r == policy.config.r_max_steps) return Decision::forced_place;
    const bool place = gamma_mw <= gamma_max_mw ? r >= policy.r_th[j] : gamma_mw <= th;
    return place ? Decision::place : Decision::skip;
}

double solve_truncated_j0(const LinkPowerModel& model, const DeploymentConfig& cfg, int horizon) {
    cfg.validate();
    if (horizon < 1) throw DomainError("horizon must be at least one step");
    if (model.max_steps() < cfg.r_max_steps) throw DomainError("link power model too short");
    const int rmax = cfg.r_max_steps;
    const double theta = cfg.theta;
    const auto& levels = model.levels();
    // Probability that the line ends at position t given it reached t - 1.
    auto hazard = [&](int t) { return t < horizon ? theta : 1.0; };

    if (cfg.objective == Objective::sum) {
        std::vector<double> later(static_cast<std::size_t>(rmax), 0.0);
        std::vector<double> now(later.size());
        for (int t = horizon - 1; t >= 1; --t) {
            const double h = hazard(t + 1);
            const double regen = h * model.mean_level_power(1) + (h < 1.0 ? (1.0 - h) * later[0] : 0.0);
            for (int r = 1; r <= rmax; ++r) {
                double cnp = kInf;
                if (r < rmax) {
                    cnp = h * model.mean_level_power(r + 1) + (h < 1.0 ? (1.0 - h) * later[index_in_r(r + 1)] : 0.0);
                }
                const auto g = model.pmf(r);
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    acc += g[i] * std::min(cfg.xi + levels[i] + regen, cnp);
                }
                now[index_in_r(r)] = acc;
            }
            later.swap(now);
        }
        const double h = hazard(1);
        return h * model.mean_level_power(1) + (h < 1.0 ? (1.0 - h) * later[0] : 0.0);
    }

    const std::size_t grid = levels.size() + 1;
    auto grid_value = [&](std::size_t j) { return j == 0 ? 0.0 : levels[j - 1]; };
    auto at = [grid](int r, std::size_t j) { return index_in_r(r) * grid + j; };
    std::vector<double> later(static_cast<std::size_t>(rmax) * grid, 0.0);
    std::vector<double> now(later.size());
    for (int t = horizon - 1; t >= 1; --t) {
        const double h = hazard(t + 1);
        for (int r = 1; r <= rmax; ++r) {
            const auto g = model.pmf(r);
            for (std::size_t j = 0; j < grid; ++j) {
                double cnp = kInf;
                if (r < rmax) {
                    cnp = h * expected_max_with(model, r + 1, grid_value(j)) +
                          (h < 1.0 ? (1.0 - h) * later[at(r + 1, j)] : 0.0);
                }
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const std::size_t m = std::max(i + 1, j);
                    const double cp = cfg.xi + h * expected_max_with(model, 1, grid_value(m)) +
                                      (h < 1.0 ? (1.0 - h) * later[at(1, m)] : 0.0);
                    acc += g[i] * std::min(cp, cnp);
                }
                now[at(r, j)] = acc;
            }
        }
        later.swap(now);
    }
    const double h = hazard(1);
    return h * model.mean_level_power(1) + (h < 1.0 ? (1.0 - h) * later[at(1, 0)] : 0.0);
}

} // namespace relaynet
