// Acceptance suite: one PASS/FAIL line per criterion, preceded by the
// measured numbers behind it. Exits nonzero if any criterion fails.

#include "relaynet/presets.hpp"
#include "relaynet/simulator.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

using namespace relaynet;

namespace {

constexpr std::uint64_t kRuns = 200000;
constexpr std::uint64_t kSeed = 7;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

class Criterion {
public:
    explicit Criterion(std::string name) : name_(std::move(name)) {}

    // Records one check with a detail line; returns `ok`.
    bool check(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
        char buf[512];
        va_list ap;
        va_start(ap, fmt);
        std::vsnprintf(buf, sizeof buf, fmt, ap);
        va_end(ap);
        std::printf("    %s %s\n", ok ? "ok  " : "MISS", buf);
        pass_ = pass_ && ok;
        ++checks_;
        if (!ok) ++misses_;
        return ok;
    }

    bool finish() const {
        std::printf("%s  %s  (%d checks, %d missed)\n\n", pass_ ? "PASS" : "FAIL", name_.c_str(), checks_, misses_);
        std::fflush(stdout);
        return pass_;
    }

private:
    std::string name_;
    bool pass_ = true;
    int checks_ = 0;
    int misses_ = 0;
};

double rel(double a, double b) {
    return std::fabs(a / b - 1.0);
}

struct Sim {
    Policy policy;
    SimReport report;
    double seconds;
};

// Simulations shared by several criteria, keyed by (objective, xi).
std::map<std::pair<int, double>, Sim>& sims() {
    static std::map<std::pair<int, double>, Sim> cache;
    return cache;
}

const Sim& simulated(Objective obj, double xi) {
    auto key = std::make_pair(static_cast<int>(obj), xi);
    auto& cache = sims();
    auto it = cache.find(key);
    if (it == cache.end()) {
        const auto spec = reference_channel_dbm();
        const auto model = spec.model();
        auto policy = solve_policy(model, spec.deployment(obj, xi));
        const auto t = Clock::now();
        auto rep = simulate(policy, model, kRuns, kSeed);
        it = cache.emplace(key, Sim{std::move(policy), rep, seconds_since(t)}).first;
    }
    return it->second;
}

// ---- criteria ----------------------------------------------------------------

bool channel_analytics() {
    Criterion c("channel analytics");
    const double outage = outage_probability(std::pow(10.0, -7.5), std::pow(10.0, -8.8));
    const double exact = 1.0 - std::exp(-std::pow(10.0, -1.3));
    c.check(std::fabs(outage - exact) <= 1e-12, "outage %.15f vs 1-exp(-10^-1.3) = %.15f", outage, exact);
    const auto spec = reference_channel_dbm();
    const auto model = spec.model();
    const double f20 = model.fail_prob(10);
    c.check(f20 >= 0.0260 && f20 <= 0.0270, "P(required power above 3 dBm at 20 m) = %.6f, band [0.0260, 0.0270]",
            f20);
    return c.finish();
}

bool table_reproduction(Objective obj, const char* name, const double (&j0_ref)[3], const double (&n_ref)[3],
                        double solver_budget) {
    Criterion c(name);
    const auto spec = reference_channel_dbm();
    const auto model = spec.model();
    const double xis[] = {0.001, 0.01, 0.1};
    for (int k = 0; k < 3; ++k) {
        const auto t = Clock::now();
        const auto policy = solve_policy(model, spec.deployment(obj, xis[k]));
        const double solve_s = seconds_since(t);
        const double j0 = policy_j0(policy);
        c.check(rel(j0, j0_ref[k]) <= 0.02, "xi=%g  J0 %.6f vs %.5f (%+.2f%%, tol 2%%)", xis[k], j0, j0_ref[k],
                100.0 * (j0 / j0_ref[k] - 1.0));
        c.check(solve_s < solver_budget, "xi=%g  solver %.3f s (budget %.0f s)", xis[k], solve_s, solver_budget);
        const auto& sim = simulated(obj, xis[k]);
        const double en = sim.report.mean_n.mean;
        const double tol = std::max(3.0 * sim.report.mean_n.half_width, 0.03 * n_ref[k]);
        c.check(std::fabs(en - n_ref[k]) <= tol, "xi=%g  E(N) %.4f +- %.4f vs %.4f (%+.2f%%, tol %.4f)", xis[k], en,
                sim.report.mean_n.half_width, n_ref[k], 100.0 * (en / n_ref[k] - 1.0), tol);
        c.check(sim.seconds < 60.0, "xi=%g  %llu runs in %.1f s (budget 60 s)", xis[k],
                static_cast<unsigned long long>(kRuns), sim.seconds);
    }
    return c.finish();
}

bool table_three() {
    Criterion c("memory one vs memory two");
    const auto dbm = reference_channel_dbm();
    const auto mw = reference_channel_mw_grid();
    const auto dbm_model = dbm.model(2);
    const auto mw_model = mw.model(2);
    const double xis[] = {0.001, 0.01, 0.1, 1.0};
    const double max1[] = {0.03336, 0.13124, 0.61693, 4.10798};
    const double max2[] = {0.02119, 0.10686, 0.60548, 4.09718};
    const double sum1[] = {0.61946, 0.65759, 1.0414, 4.49396};
    const double sum2[] = {0.50723, 0.56834, 1.0233, 4.43836};
    const auto t = Clock::now();
    for (int k = 0; k < 4; ++k) {
        const double m1 = policy_j0(solve_policy(dbm_model, dbm.deployment(Objective::max, xis[k], 1)));
        const double m2 = policy_j0(solve_policy(dbm_model, dbm.deployment(Objective::max, xis[k], 2)));
        const double s1 = policy_j0(solve_policy(mw_model, mw.deployment(Objective::sum, xis[k], 1)));
        const double s2 = policy_j0(solve_policy(mw_model, mw.deployment(Objective::sum, xis[k], 2)));
        c.check(rel(m1, max1[k]) <= 0.02, "max n=1 xi=%g  %.6f vs %.5f (%+.2f%%, tol 2%%)", xis[k], m1, max1[k],
                100.0 * (m1 / max1[k] - 1.0));
        c.check(rel(m2, max2[k]) <= 0.02, "max n=2 xi=%g  %.6f vs %.5f (%+.2f%%, tol 2%%)", xis[k], m2, max2[k],
                100.0 * (m2 / max2[k] - 1.0));
        c.check(rel(s1, sum1[k]) <= 0.05, "sum n=1 xi=%g  %.6f vs %.5f (%+.2f%%, tol 5%%)", xis[k], s1, sum1[k],
                100.0 * (s1 / sum1[k] - 1.0));
        c.check(rel(s2, sum2[k]) <= 0.05, "sum n=2 xi=%g  %.6f vs %.5f (%+.2f%%, tol 5%%)", xis[k], s2, sum2[k],
                100.0 * (s2 / sum2[k] - 1.0));
        c.check(m2 <= m1, "max xi=%g  J0(n=2) <= J0(n=1)", xis[k]);
        c.check(s2 <= s1, "sum xi=%g  J0(n=2) <= J0(n=1)", xis[k]);
    }
    std::printf("    (all sixteen solves: %.1f s)\n", seconds_since(t));
    return c.finish();
}

bool deployment_failure() {
    Criterion c("deployment failure probability");
    const double xis[] = {0.001, 0.01, 0.1, 1.0};
    const double sum_ref[] = {0.00025, 0.00057, 0.00555, 0.038};
    const double max_ref[] = {0.0001, 0.00145, 0.0073, 0.0539};
    for (auto obj : {Objective::sum, Objective::max}) {
        const auto& ref = obj == Objective::sum ? sum_ref : max_ref;
        std::vector<double> est;
        for (int k = 0; k < 4; ++k) {
            const auto& r = simulated(obj, xis[k]).report;
            const double se = std::sqrt(ref[k] * (1.0 - ref[k]) / static_cast<double>(r.runs));
            const double z = (r.failure_prob.mean - ref[k]) / se;
            c.check(std::fabs(z) <= 3.0, "%s xi=%g  %.4f%% (%llu of %llu, 95%% CI %.4f-%.4f%%) vs %.4g%%, z = %+.2f",
                    std::string(to_string(obj)).c_str(), xis[k], 100.0 * r.failure_prob.mean,
                    static_cast<unsigned long long>(r.failures), static_cast<unsigned long long>(r.runs),
                    100.0 * r.failure_low, 100.0 * r.failure_high, 100.0 * ref[k], z);
            est.push_back(r.failure_prob.mean);
        }
        bool trend = true;
        for (std::size_t k = 1; k < est.size(); ++k) trend = trend && est[k] >= est[k - 1];
        c.check(trend, "%s  failure probability increases with xi", std::string(to_string(obj)).c_str());
    }
    return c.finish();
}

bool threshold_spot_checks() {
    Criterion c("threshold spot-checks");
    const auto spec = reference_channel_dbm();
    const auto model = spec.model();
    const auto sp = solve_sum_adjacent(model, spec.deployment(Objective::sum, 0.001));
    const double at8 = sp.gamma_th_at(4);
    c.check(std::fabs(mw_to_dbm(at8) + 20.0) < 1e-9, "sum xi=0.001  gamma_th(8 m) = %.4f dBm (expect -20)",
            mw_to_dbm(at8));
    c.check(sp.gamma_th_at(1) == 0.0, "sum xi=0.001  gamma_th(2 m) = %g mW (expect 0)", sp.gamma_th_at(1));
    for (double xi : {0.001, 0.01, 0.1}) {
        const auto mp = solve_max_adjacent(model, spec.deployment(Objective::max, xi));
        bool mono = true;
        std::string row;
        for (std::size_t j = 1; j < mp.grid_size(); ++j) {
            if (j > 1) mono = mono && mp.r_th[j] >= mp.r_th[j - 1];
            row += std::to_string(mp.r_th[j]) + (j + 1 < mp.grid_size() ? " " : "");
        }
        c.check(mono, "max xi=%g  r_th over S = [%s] nondecreasing", xi, row.c_str());
    }
    return c.finish();
}

// Minimum over every source-to-sink path whose hops span at most n indices.
double enumerate_paths(const std::vector<std::vector<double>>& link, int n, Objective obj) {
    const int last = static_cast<int>(link.size()) - 1;
    double best = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < (1 << (last - 1)); ++mask) {
        int at = last;
        double len = 0.0;
        bool ok = true;
        for (int i = last - 1; i >= 0; --i) {
            if (i > 0 && !(mask & (1 << (i - 1)))) continue;
            if (at - i > n) {
                ok = false;
                break;
            }
            len = obj == Objective::sum ? len + link[at][i] : std::max(len, link[at][i]);
            at = i;
        }
        if (ok) best = std::min(best, len);
    }
    return best;
}

bool property_suite() {
    Criterion c("property suite");
    const auto dbm = reference_channel_dbm();
    const auto mw = reference_channel_mw_grid();
    const auto model = dbm.model();
    const auto mw_model = mw.model();

    // monotone iterates
    for (auto obj : {Objective::sum, Objective::max}) {
        for (int n : {1, 2}) {
            const auto& spec = obj == Objective::sum && n == 2 ? mw : dbm;
            std::vector<double> prev;
            bool mono = true;
            std::size_t sweeps = 0;
            SolveOptions opts;
            opts.observer = [&](std::size_t, double, std::span<const double> v) {
                if (!prev.empty()) {
                    for (std::size_t i = 0; i < v.size(); ++i) mono = mono && v[i] >= prev[i] - 1e-15;
                }
                prev.assign(v.begin(), v.end());
                ++sweeps;
            };
            solve_policy(spec.model(n), spec.deployment(obj, 0.01, n), opts);
            c.check(mono && sweeps > 1, "value iteration iterates nondecreasing (%s, n=%d, %zu sweeps)",
                    std::string(to_string(obj)).c_str(), n, sweeps);
        }
    }

    // sum thresholds in r and xi
    {
        std::vector<SumAdjacentPolicy> ps;
        for (double xi : {0.0001, 0.001, 0.01, 0.1, 1.0}) {
            ps.push_back(solve_sum_adjacent(model, dbm.deployment(Objective::sum, xi)));
        }
        bool in_r = true, in_xi = true;
        for (std::size_t k = 0; k < ps.size(); ++k) {
            for (int r = 2; r <= 10; ++r) in_r = in_r && ps[k].gamma_th_at(r) >= ps[k].gamma_th_at(r - 1);
            for (int r = 1; k > 0 && r <= 10; ++r) in_xi = in_xi && ps[k].gamma_th_at(r) <= ps[k - 1].gamma_th_at(r);
        }
        c.check(in_r, "gamma_th(r) nondecreasing in r (5 relay costs)");
        c.check(in_xi, "gamma_th(r) nonincreasing in xi (5 relay costs)");
    }

    // max thresholds in r and gamma_max
    {
        bool ok = true;
        for (double xi : {0.001, 0.01, 0.1, 1.0}) {
            const auto mp = solve_max_adjacent(model, dbm.deployment(Objective::max, xi));
            for (int r = 1; r <= 10; ++r) {
                for (std::size_t j = 0; j < mp.grid_size(); ++j) {
                    if (j > 0) ok = ok && mp.gamma_th_at(r, j) >= mp.gamma_th_at(r, j - 1);
                    if (r > 1) ok = ok && mp.gamma_th_at(r, j) >= mp.gamma_th_at(r - 1, j);
                }
            }
        }
        c.check(ok, "gamma_th(r, gamma_max) nondecreasing in r and gamma_max (4 relay costs)");
    }

    // J0 against xi
    for (auto obj : {Objective::sum, Objective::max}) {
        std::vector<double> j;
        // where the optimal policy is the same at adjacent grid points J0 is
        // linear, so solve tightly enough that stopping error stays below 1e-11
        SolveOptions tight;
        tight.tol = 1e-13;
        for (int k = 0; k < 10; ++k) {
            j.push_back(policy_j0(solve_policy(model, dbm.deployment(obj, 0.001 + 0.111 * k), tight)));
        }
        bool inc = true, concave = true;
        for (std::size_t k = 1; k < j.size(); ++k) inc = inc && j[k] >= j[k - 1];
        for (std::size_t k = 2; k < j.size(); ++k) concave = concave && j[k] - j[k - 1] <= j[k - 1] - j[k - 2] + 1e-11;
        c.check(inc && concave, "J0(xi) nondecreasing with nonincreasing increments, 10-point grid (%s)",
                std::string(to_string(obj)).c_str());
    }

    // stochastic dominance of G_r
    for (const auto* spec : {&dbm, &mw}) {
        const auto m = spec->model(2);
        bool dom = true;
        for (int r = 1; r < m.max_steps(); ++r) {
            for (std::size_t i = 0; i < m.levels().size(); ++i) dom = dom && m.cdf(r + 1, i) <= m.cdf(r, i) + 1e-15;
        }
        c.check(dom, "G_{r+1} <= G_r at every level, r = 1..%d (%zu levels)", m.max_steps() - 1, m.levels().size());
    }

    // brute-force oracle
    {
        struct Case {
            const ChannelSpec* spec;
            Objective obj;
            double theta, xi;
            int cap;
        };
        const Case cases[] = {
            {&dbm, Objective::sum, 0.5, 0.01, 10}, {&dbm, Objective::max, 0.5, 0.01, 10},
            {&dbm, Objective::sum, 0.3, 0.001, 12}, {&dbm, Objective::max, 0.2, 0.1, 12},
            {&mw, Objective::sum, 0.5, 0.05, 8},    {&mw, Objective::max, 0.4, 0.0, 11},
        };
        double worst = 0.0;
        for (const auto& k : cases) {
            auto cfg = k.spec->deployment(k.obj, k.xi);
            cfg.theta = k.theta;
            const auto m = k.spec->model();
            worst = std::max(worst, std::fabs(brute_force_truncated(m, cfg, k.cap) - solve_truncated_j0(m, cfg, k.cap)));
        }
        c.check(worst < 1e-9, "exhaustive induction vs truncated solver on 6 configurations: max deviation %.3g",
                worst);
    }

    // memory one equals the adjacent solvers
    {
        SolveOptions tight;
        tight.tol = 1e-13;
        double worst = 0.0;
        int mismatches = 0;
        for (double xi : {0.001, 0.01, 0.1, 1.0}) {
            const auto sa = solve_sum_adjacent(mw_model, mw.deployment(Objective::sum, xi), tight);
            const auto sm = solve_memory(mw_model, mw.deployment(Objective::sum, xi, 1), tight);
            const auto ma = solve_max_adjacent(model, dbm.deployment(Objective::max, xi), tight);
            const auto mm = solve_memory(model, dbm.deployment(Objective::max, xi, 1), tight);
            worst = std::max({worst, std::fabs(sa.j0 - sm.j0), std::fabs(ma.j0 - mm.j0)});
            for (int r = 1; r <= 10; ++r) {
                for (std::size_t i = 0; i < mw.levels.size(); ++i) {
                    const MemoryState s{{r}, {0.0}, {mw.levels[i]}};
                    mismatches += place_decision_memory(sm, s) != place_decision(sa, r, mw.levels[i]);
                }
                for (std::size_t j = 0; j < ma.grid_size(); ++j) {
                    for (std::size_t i = 0; i < dbm.levels.size(); ++i) {
                        const MemoryState s{{r}, {ma.grid_value(j)}, {dbm.levels[i]}};
                        mismatches += place_decision_memory(mm, s) != place_decision(ma, r, dbm.levels[i], ma.grid_value(j));
                    }
                }
            }
        }
        c.check(worst < 1e-9 && mismatches == 0, "memory-one J0 vs adjacent: max deviation %.3g, %d decision mismatches",
                worst, mismatches);
    }

    // path cost against enumeration
    {
        std::mt19937_64 rng(8);
        std::uniform_int_distribution<std::size_t> level(0, dbm.levels.size() - 1);
        int checked = 0, bad = 0;
        for (int nodes = 2; nodes <= 6; ++nodes) {
            for (int rep = 0; rep < 200; ++rep) {
                std::vector<std::vector<double>> link(nodes, std::vector<double>(nodes, 0.0));
                DeploymentTrace t;
                for (int i = 1; i < nodes; ++i) {
                    t.placements.push_back(i);
                    for (int j = 0; j < i; ++j) {
                        link[i][j] = dbm.levels[level(rng)];
                        t.links.push_back({i, j, link[i][j], link[i][j]});
                    }
                }
                for (int n = 1; n < nodes; ++n) {
                    for (auto obj : {Objective::sum, Objective::max}) {
                        bad += std::fabs(path_cost(t, obj, n) - enumerate_paths(link, n, obj)) > 1e-12;
                        ++checked;
                    }
                }
            }
        }
        c.check(bad == 0, "path cost equals path enumeration: %d instances up to 6 nodes, %d differ", checked, bad);
    }

    // simulated total against J0
    {
        for (auto obj : {Objective::sum, Objective::max}) {
            for (double xi : {0.001, 0.01, 0.1, 1.0}) {
                const auto& s = simulated(obj, xi);
                const double j0 = policy_j0(s.policy);
                const double gap = std::fabs(s.report.total.mean - j0);
                c.check(gap <= 3.0 * s.report.total.half_width, "%s n=1 xi=%g  simulated %.6f +- %.6f vs J0 %.6f",
                        std::string(to_string(obj)).c_str(), xi, s.report.total.mean, s.report.total.half_width, j0);
            }
        }
        const Policy pm = solve_policy(dbm.model(2), dbm.deployment(Objective::max, 0.01, 2));
        const Policy ps = solve_policy(mw.model(2), mw.deployment(Objective::sum, 0.01, 2));
        for (const auto* p : {&pm, &ps}) {
            const auto& spec = p == &pm ? dbm : mw;
            const auto r = simulate(*p, spec.model(2), kRuns, kSeed);
            const double j0 = policy_j0(*p);
            c.check(std::fabs(r.total.mean - j0) <= 3.0 * r.total.half_width,
                    "%s n=2 xi=0.01  simulated %.6f +- %.6f vs J0 %.6f",
                    std::string(to_string(policy_config(*p).objective)).c_str(), r.total.mean, r.total.half_width, j0);
        }
    }
    return c.finish();
}

} // namespace

int main() {
    std::printf("acceptance suite: %llu runs per simulation, seed %llu\n\n", static_cast<unsigned long long>(kRuns),
                static_cast<unsigned long long>(kSeed));
    const auto t = Clock::now();
    int failed = 0;
    failed += !channel_analytics();
    failed += !table_reproduction(Objective::sum, "sum power, adjacent relaying",
                                  {0.09101, 0.18584, 0.72516}, {15.8754, 10.3069, 5.3225}, 1.0);
    failed += !table_reproduction(Objective::max, "max power, adjacent relaying",
                                  {0.03336, 0.13124, 0.61693}, {18.1178, 8.6875, 4.6615}, 10.0);
    failed += !table_three();
    failed += !deployment_failure();
    failed += !threshold_spot_checks();
    failed += !property_suite();
    std::printf("%d of 7 criteria failed (%.0f s)\n", failed, seconds_since(t));
    return failed == 0 ? 0 : 1;
}
