#include "relaynet/presets.hpp"

#include <array>
#include <vector>

namespace relaynet {

DeploymentConfig ChannelSpec::deployment(Objective objective, double xi, int memory_n) const {
    DeploymentConfig cfg;
    cfg.theta = theta;
    cfg.xi = xi;
    cfg.r_max_steps = r_max_steps;
    cfg.objective = objective;
    cfg.memory_n = memory_n;
    return cfg;
}

LinkPowerModel ChannelSpec::model(int memory_n) const {
    return build_pmf(params, levels, r_max_steps * (memory_n < 1 ? 1 : memory_n));
}

namespace {

ChannelParams reference_params() {
    ChannelParams p;
    p.eta = 2.5;
    p.sigma_db = 8.0;
    p.alpha_gain = dbm_to_mw(-30.0);
    p.psi_mw = dbm_to_mw(-75.0);
    p.p_rcv_min_mw = dbm_to_mw(-88.0);
    p.step_m = 2.0;
    return p;
}

} // namespace

ChannelSpec reference_channel_dbm() {
    constexpr std::array<double, 7> dbm{-25.0, -20.0, -15.0, -10.0, -5.0, 0.0, 3.0};
    return ChannelSpec{reference_params(), PowerLevelSet::from_dbm(dbm), 10, 0.025};
}

ChannelSpec reference_channel_mw_grid() {
    std::vector<double> mw;
    for (int i = 1; i <= 20; ++i) {
        mw.push_back(i / 10.0);
    }
    return ChannelSpec{reference_params(), PowerLevelSet(std::move(mw)), 10, 0.025};
}

} // namespace relaynet
