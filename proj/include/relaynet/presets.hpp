#pragma once

#include "relaynet/channel.hpp"
#include "relaynet/config.hpp"

namespace relaynet {

/// Everything a channel parameter file describes.
struct ChannelSpec {
    ChannelParams params;
    PowerLevelSet levels;
    int r_max_steps = 10;
    double theta = 0.025;

    /// Deployment config for this channel with the given objective, xi and memory.
    DeploymentConfig deployment(Objective objective, double xi, int memory_n = 1) const;
    /// Link power model long enough for memory-n policies (n * r_max steps).
    LinkPowerModel model(int memory_n = 1) const;

    bool operator==(const ChannelSpec&) const = default;
};

/// 2 m steps, mean line length 40 steps, eta 2.5, sigma 8 dB, -30 dB gain,
/// psi -75 dBm, -88 dBm receiver floor, S = {-25, -20, ..., 0, 3} dBm.
ChannelSpec reference_channel_dbm();

/// Same propagation, S = {0.1, 0.2, ..., 2.0} mW (an arithmetic grid, so
/// sum-power shortest paths stay on a finite lattice).
ChannelSpec reference_channel_mw_grid();

} // namespace relaynet
