#include "doctest.h"

#include "relaynet/adjacent.hpp"
#include "relaynet/errors.hpp"
#include "relaynet/presets.hpp"

#include <cmath>
#include <vector>

using namespace relaynet;

namespace {

// Evaluates the stationary policy given by `decide` with a plain fixed-point
// iteration, independent of the solver's Bellman minimum.
double evaluate_sum_policy(const SumAdjacentPolicy& policy, const LinkPowerModel& model) {
    const auto& cfg = policy.config;
    const auto& s = model.levels();
    std::vector<double> v(static_cast<std::size_t>(cfg.r_max_steps), 0.0);
    double j0 = 0.0;
    for (int it = 0; it < 200000; ++it) {
        std::vector<double> nv(v.size());
        for (int r = 1; r <= cfg.r_max_steps; ++r) {
            double acc = 0.0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                const double cost = places(place_decision(policy, r, s[i]))
                                        ? cfg.xi + s[i] + j0
                                        : cfg.theta * model.mean_level_power(r + 1) + (1 - cfg.theta) * v[r];
                acc += model.pmf(r, i) * cost;
            }
            nv[r - 1] = acc;
        }
        const double nj0 = cfg.theta * model.mean_level_power(1) + (1 - cfg.theta) * v[0];
        double diff = std::fabs(nj0 - j0);
        for (std::size_t r = 0; r < v.size(); ++r) diff = std::max(diff, std::fabs(nv[r] - v[r]));
        v = nv;
        j0 = nj0;
        if (diff < 1e-13) break;
    }
    return j0;
}

double evaluate_max_policy(const MaxAdjacentPolicy& policy, const LinkPowerModel& model) {
    const auto& cfg = policy.config;
    const auto& s = model.levels();
    const std::size_t grid = policy.grid_size();
    auto emax = [&](int r, double a) {
        double e = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) e += model.pmf(r, i) * std::max(a, s[i]);
        return e;
    };
    std::vector<double> v(cfg.r_max_steps * grid, 0.0);
    for (int it = 0; it < 200000; ++it) {
        std::vector<double> nv(v.size());
        double diff = 0.0;
        for (int r = 1; r <= cfg.r_max_steps; ++r) {
            for (std::size_t j = 0; j < grid; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < s.size(); ++i) {
                    const double gm = policy.grid_value(j);
                    double cost;
                    if (places(place_decision(policy, r, s[i], gm))) {
                        const std::size_t m = std::max(i + 1, j);
                        cost = cfg.xi + cfg.theta * emax(1, policy.grid_value(m)) + (1 - cfg.theta) * v[m];
                    } else {
                        cost = cfg.theta * emax(r + 1, gm) + (1 - cfg.theta) * v[r * grid + j];
                    }
                    acc += model.pmf(r, i) * cost;
                }
                nv[(r - 1) * grid + j] = acc;
                diff = std::max(diff, std::fabs(acc - v[(r - 1) * grid + j]));
            }
        }
        v = nv;
        if (diff < 1e-13) break;
    }
    return cfg.theta * model.mean_level_power(1) + (1 - cfg.theta) * v[0];
}

} // namespace

TEST_CASE("theta = 1 leaves only the first link") {
    const auto spec = reference_channel_dbm();
    const auto model = spec.model();
    auto cfg = spec.deployment(Objective::sum, 0.05);
    cfg.theta = 1.0;
    CHECK(solve_sum_adjacent(model, cfg).j0 == doctest::Approx(model.mean_level_power(1)).epsilon(1e-14));
    cfg.objective = Objective::max;
    CHECK(solve_max_adjacent(model, cfg).j0 == doctest::Approx(model.mean_level_power(1)).epsilon(1e-14));
    CHECK(brute_force_truncated(model, cfg, 10) == doctest::Approx(model.mean_level_power(1)).epsilon(1e-14));
}

TEST_CASE("sum-power policy on the reference channel") {
    const auto spec = reference_channel_dbm();
    const auto model = spec.model();
    const auto p01 = solve_sum_adjacent(model, spec.deployment(Objective::sum, 0.01));
    CHECK(std::fabs(p01.j0 / 0.18584 - 1.0) < 0.02);

    const auto p = solve_sum_adjacent(model, spec.deployment(Objective::sum, 0.001));
    // 8 m = 4 steps: place at -20 dBm or below; 2 m: never.
    CHECK(p.gamma_th_at(4) == doctest::Approx(dbm_to_mw(-20.0)));
    CHECK(p.gamma_th_at(1) == 0.0);
    CHECK(place_decision(p, 4, dbm_to_mw(-20.0)) == Decision::place);
    CHECK(place_decision(p, 4, dbm_to_mw(-15.0)) == Decision::skip);
    CHECK(place_decision(p, 1, dbm_to_mw(-25.0)) == Decision::skip);
    CHECK(place_decision(p, 10, dbm_to_mw(3.0)) == Decision::forced_place);
    CHECK_THROWS_AS(place_decision(p, 11, dbm_to_mw(3.0)), DomainError);
    CHECK_THROWS_AS(place_decision(p, 3, 0.123), DomainError);
    CHECK(p.residual < 1e-10);
}

TEST_CASE("ties place") {
    const auto spec = reference_channel_dbm();
    auto p = solve_sum_adjacent(spec.model(), spec.deployment(Objective::sum, 0.001));
    CHECK(place_decision(p, 6, p.gamma_th_at(6)) == Decision::place);
}

TEST_CASE("max-power policy on the reference channel") {
    const auto spec = reference_channel_dbm();
    const auto model = spec.model();
    const double xis[] = {0.001, 0.01, 0.1};
    const double published[] = {0.03336, 0.13124, 0.61693};
    for (int k = 0; k < 3; ++k) {
        const auto mp = solve_max_adjacent(model, spec.deployment(Objective::max, xis[k]));
        CHECK(std::fabs(mp.j0 / published[k] - 1.0) < 0.02);
        for (std::size_t j = 2; j < mp.grid_size(); ++j) {
            CHECK(mp.r_th[j] >= mp.r_th[j - 1]);
        }
        const auto sp = solve_sum_adjacent(model, spec.deployment(Objective::sum, xis[k]));
        CHECK(mp.j0 <= sp.j0);
        for (int r = 1; r <= 10; ++r) {
            for (std::size_t j = 0; j < mp.grid_size(); ++j) {
                if (j > 0) CHECK(mp.gamma_th_at(r, j) >= mp.gamma_th_at(r, j - 1));
                if (r > 1) CHECK(mp.gamma_th_at(r, j) >= mp.gamma_th_at(r - 1, j));
                if (r > 1) CHECK(mp.value_at(r, j) >= mp.value_at(r - 1, j) - 1e-12);
                if (j > 0) CHECK(mp.value_at(r, j) >= mp.value_at(r, j - 1) - 1e-12);
            }
        }
    }
}

TEST_CASE("max-power decisions follow the two-case rule") {
    const auto spec = reference_channel_dbm();
    const auto mp = solve_max_adjacent(spec.model(), spec.deployment(Objective::max, 0.01));
    const auto& s = spec.levels;
    for (int r = 1; r < 10; ++r) {
        for (std::size_t j = 0; j < mp.grid_size(); ++j) {
            const double gm = mp.grid_value(j);
            for (std::size_t i = 0; i < s.size(); ++i) {
                const bool expect = s[i] <= gm ? r >= mp.r_th[j] : s[i] <= mp.gamma_th_at(r, j);
                CHECK(places(place_decision(mp, r, s[i], gm)) == expect);
            }
        }
    }
    CHECK(place_decision(mp, 10, s[0], s[3]) == Decision::forced_place);
}

TEST_CASE("single-level channel places only when forced") {
    const auto spec = reference_channel_dbm();
    const double g0 = 0.5;
    const LinkPowerModel model(spec.params, PowerLevelSet(std::vector<double>{g0}), 10);
    const double theta = 0.1;
    const double xi = 0.3;
    // Expected forced placements: sum_k P(L > 10 k) = q / (1 - q), q = (1 - theta)^10.
    const double q = std::pow(1.0 - theta, 10);
    const double forced = q / (1.0 - q);

    auto cfg = spec.deployment(Objective::max, xi);
    cfg.theta = theta;
    const auto mp = solve_max_adjacent(model, cfg);
    CHECK(mp.j0 == doctest::Approx(g0 + xi * forced).epsilon(1e-9));
    for (int r = 1; r < 10; ++r) CHECK_FALSE(places(place_decision(mp, r, g0, g0)));

    cfg.objective = Objective::sum;
    const auto sp = solve_sum_adjacent(model, cfg);
    CHECK(sp.j0 == doctest::Approx(g0 * (1.0 + forced) + xi * forced).epsilon(1e-9));
}

TEST_CASE("value iteration iterates are monotone") {
    const auto spec = reference_channel_dbm();
    const auto model = spec.model();
    for (auto objective : {Objective::sum, Objective::max}) {
        std::vector<double> prev;
        bool monotone = true;
        std::size_t seen = 0;
        SolveOptions opts;
        opts.observer = [&](std::size_t, double, std::span<const double> values) {
            if (!prev.empty()) {
                for (std::size_t i = 0; i < values.size(); ++i) {
                    if (values[i] < prev[i] - 1e-15) monotone = false;
                }
            }
            prev.assign(values.begin(), values.end());
            ++seen;
        };
        auto cfg = spec.deployment(objective, 0.01);
        if (objective == Objective::sum) {
            solve_sum_adjacent(model, cfg, opts);
        } else {
            solve_max_adjacent(model, cfg, opts);
        }
        CHECK(seen > 10);
        CHECK(monotone);
    }
}

TEST_CASE("optimal cost is increasing and concave in the relay cost") {
    const auto spec = reference_channel_dbm();
    const auto model = spec.model();
    for (auto objective : {Objective::sum, Objective::max}) {
        std::vector<double> j;
        for (int k = 0; k < 10; ++k) {
            const auto cfg = spec.deployment(objective, 0.05 * k);
            j.push_back(objective == Objective::sum ? solve_sum_adjacent(model, cfg).j0
                                                    : solve_max_adjacent(model, cfg).j0);
        }
        for (std::size_t k = 1; k < j.size(); ++k) CHECK(j[k] >= j[k - 1]);
        for (std::size_t k = 2; k < j.size(); ++k) {
            CHECK(j[k] - j[k - 1] <= j[k - 1] - j[k - 2] + 1e-9);
        }
    }
}

TEST_CASE("sum thresholds rise with distance and fall with relay cost") {
    const auto spec = reference_channel_dbm();
    const auto model = spec.model();
    std::vector<SumAdjacentPolicy> ps;
    for (double xi : {0.0001, 0.001, 0.01, 0.1, 1.0}) {
        ps.push_back(solve_sum_adjacent(model, spec.deployment(Objective::sum, xi)));
    }
    for (std::size_t k = 0; k < ps.size(); ++k) {
        for (int r = 2; r <= 10; ++r) {
            CHECK(ps[k].gamma_th_at(r) >= ps[k].gamma_th_at(r - 1));
            CHECK(ps[k].threshold_raw[r - 1] >= ps[k].threshold_raw[r - 2]);
            CHECK(ps[k].value[r - 1] >= ps[k].value[r - 2]);
        }
        if (k > 0) {
            for (int r = 1; r <= 10; ++r) CHECK(ps[k].gamma_th_at(r) <= ps[k - 1].gamma_th_at(r));
        }
    }
}

TEST_CASE("greedy evaluation of the extracted policy reproduces J(0)") {
    const auto spec = reference_channel_dbm();
    const auto model = spec.model();
    for (double xi : {0.001, 0.01, 0.1}) {
        const auto sp = solve_sum_adjacent(model, spec.deployment(Objective::sum, xi));
        CHECK(evaluate_sum_policy(sp, model) == doctest::Approx(sp.j0).epsilon(1e-8));
        const auto mp = solve_max_adjacent(model, spec.deployment(Objective::max, xi));
        CHECK(evaluate_max_policy(mp, model) == doctest::Approx(mp.j0).epsilon(1e-8));
    }
}

TEST_CASE("brute-force oracle agrees with the truncated function iteration") {
    struct Case {
        ChannelSpec spec;
        Objective objective;
        double theta;
        double xi;
        int cap;
    };
    const std::vector<Case> cases = {
        {reference_channel_dbm(), Objective::sum, 0.5, 0.01, 10},
        {reference_channel_dbm(), Objective::max, 0.5, 0.01, 10},
        {reference_channel_dbm(), Objective::sum, 0.3, 0.001, 12},
        {reference_channel_dbm(), Objective::max, 0.2, 0.1, 12},
        {reference_channel_mw_grid(), Objective::sum, 0.5, 0.05, 8},
        {reference_channel_mw_grid(), Objective::max, 0.4, 0.0, 11},
        {reference_channel_dbm(), Objective::sum, 0.5, 1e6, 10},
        {reference_channel_dbm(), Objective::max, 0.5, 1e6, 10},
        {reference_channel_dbm(), Objective::sum, 0.5, 0.01, 1},
    };
    for (const auto& c : cases) {
        const auto model = c.spec.model();
        auto cfg = c.spec.deployment(c.objective, c.xi);
        cfg.theta = c.theta;
        const double oracle = brute_force_truncated(model, cfg, c.cap);
        const double solver = solve_truncated_j0(model, cfg, c.cap);
        CHECK(std::fabs(oracle - solver) < 1e-9);
    }
}

TEST_CASE("long truncation converges to the infinite-line solution") {
    const auto spec = reference_channel_dbm();
    const auto model = spec.model();
    for (auto objective : {Objective::sum, Objective::max}) {
        auto cfg = spec.deployment(objective, 0.01);
        cfg.theta = 0.5;
        const double full = objective == Objective::sum ? solve_sum_adjacent(model, cfg).j0
                                                        : solve_max_adjacent(model, cfg).j0;
        CHECK(brute_force_truncated(model, cfg, 80) == doctest::Approx(full).epsilon(1e-10));
    }
}

TEST_CASE("non-convergence is reported") {
    const auto spec = reference_channel_dbm();
    SolveOptions opts;
    opts.max_iters = 3;
    try {
        solve_sum_adjacent(spec.model(), spec.deployment(Objective::sum, 0.01), opts);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations() == 3);
        CHECK(e.residual() > 0.0);
    }
    CHECK_THROWS_AS(solve_max_adjacent(spec.model(), spec.deployment(Objective::sum, 0.01)), DomainError);
}
