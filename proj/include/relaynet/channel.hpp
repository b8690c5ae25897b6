#pragma once

// Link power model: the transmit power a node needs to reach another node at
// distance r under path loss and lognormal shadowing, quantized onto the
// finite set of power levels the radio supports.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace relaynet {

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

/// Standard normal CDF.
double normal_cdf(double x);

/// Strictly increasing, positive transmit power levels in mW.
class PowerLevelSet {
public:
    PowerLevelSet() = default;
    explicit PowerLevelSet(std::vector<double> levels_mw);

    static PowerLevelSet from_dbm(std::span<const double> levels_dbm);

    std::size_t size() const noexcept { return levels_.size(); }
    double operator[](std::size_t i) const { return levels_[i]; }
    double min() const { return levels_.front(); }
    double max() const { return levels_.back(); }
    const std::vector<double>& values() const noexcept { return levels_; }

    /// Index of the smallest level >= p_mw; the top index if p_mw exceeds
    /// every level. Ties map to the level itself.
    std::size_t quantize_index(double p_mw) const;

    /// Index of `level_mw` if it is one of the levels (relative tolerance
    /// 1e-9), otherwise throws DomainError.
    std::size_t index_of(double level_mw) const;

    bool operator==(const PowerLevelSet&) const = default;

private:
    std::vector<double> levels_;
};

struct ChannelParams {
    double eta = 2.5;
    double sigma_db = 8.0;
    /// alpha / r0^-eta, so required power = psi * r^eta * 10^(nu/10) / alpha_gain.
    double alpha_gain = 1e-3;
    double psi_mw = 3.1622776601683794e-08;
    double p_rcv_min_mw = 1.5848931924611143e-09;
    double step_m = 2.0;

    void validate() const;
    bool operator==(const ChannelParams&) const = default;
};

/// Continuous transmit power (mW) needed to reach distance r_m meters with a
/// shadowing realization nu_db.
double required_power(const ChannelParams& params, double r_m, double nu_db);

/// Smallest level >= p_req, saturating at the top level.
double quantize_power(double p_req_mw, const PowerLevelSet& levels);

/// Outage probability under unit-mean exponential (Rayleigh power) fading
/// when the fading-averaged received power is psi.
double outage_probability(double psi_mw, double p_rcv_min_mw);

struct PowerSample {
    double required_mw = 0.0;
    std::size_t level_index = 0;
    double level_mw = 0.0;
    bool failed = false;  ///< required power above the top level
};

/// Distribution of the quantized required power for every link length
/// 1..max_steps (in steps). Immutable after construction.
class LinkPowerModel {
public:
    LinkPowerModel() = default;
    LinkPowerModel(ChannelParams params, PowerLevelSet levels, int max_steps);

    const ChannelParams& params() const noexcept { return params_; }
    const PowerLevelSet& levels() const noexcept { return levels_; }
    int max_steps() const noexcept { return max_steps_; }

    /// g(r, level i).
    std::span<const double> pmf(int r) const;
    double pmf(int r, std::size_t level) const { return pmf(r)[level]; }
    /// G_r evaluated at level i, i.e. P(Gamma_r <= level i).
    double cdf(int r, std::size_t level) const;
    /// P(required power at r steps exceeds the top level).
    double fail_prob(int r) const;
    /// E[Gamma_r] in mW.
    double mean_level_power(int r) const;
    /// Median continuous required power at r steps (nu = 0).
    double median_required(int r) const;

    PowerSample sample(int r, std::mt19937_64& rng) const;
    /// Deterministic part of sample(): quantize a given required power.
    PowerSample classify(double required_mw) const;

    bool operator==(const LinkPowerModel&) const = default;

private:
    void check_range(int r) const;

    ChannelParams params_;
    PowerLevelSet levels_;
    int max_steps_ = 0;
    std::vector<double> pmf_;   // row-major, max_steps_ x levels
    std::vector<double> cdf_;
    std::vector<double> fail_;
    std::vector<double> mean_;
};

LinkPowerModel build_pmf(const ChannelParams& params, const PowerLevelSet& levels, int max_steps);

inline double mean_level_power(const LinkPowerModel& model, int r) { return model.mean_level_power(r); }

inline PowerSample sample_required_power(const LinkPowerModel& model, int r, std::mt19937_64& rng) {
    return model.sample(r, rng);
}

} // namespace relaynet
