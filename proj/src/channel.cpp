#include "relaynet/channel.hpp"

#include "relaynet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace relaynet {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

PowerLevelSet::PowerLevelSet(std::vector<double> levels_mw) : levels_(std::move(levels_mw)) {
    if (levels_.empty()) {
        throw DomainError("power level set is empty");
    }
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (!(levels_[i] > 0.0) || !std::isfinite(levels_[i])) {
            throw DomainError("power levels must be positive and finite");
        }
        if (i > 0 && !(levels_[i] > levels_[i - 1])) {
            throw DomainError("power levels must be strictly increasing");
        }
    }
}

PowerLevelSet PowerLevelSet::from_dbm(std::span<const double> levels_dbm) {
    std::vector<double> mw;
    mw.reserve(levels_dbm.size());
    for (double d : levels_dbm) {
        mw.push_back(dbm_to_mw(d));
    }
    return PowerLevelSet(std::move(mw));
}

std::size_t PowerLevelSet::quantize_index(double p_mw) const {
    auto it = std::lower_bound(levels_.begin(), levels_.end(), p_mw);
    if (it == levels_.end()) {
        return levels_.size() - 1;
    }
    return static_cast<std::size_t>(it - levels_.begin());
}

std::size_t PowerLevelSet::index_of(double level_mw) const {
    std::size_t i = quantize_index(level_mw * (1.0 - 1e-9));
    if (std::fabs(levels_[i] - level_mw) <= 1e-9 * levels_[i]) {
        return i;
    }
    throw DomainError("value " + std::to_string(level_mw) + " mW is not a power level");
}

void ChannelParams::validate() const {
    if (!(eta > 0.0)) throw DomainError("eta must be positive");
    if (!(sigma_db >= 0.0)) throw DomainError("sigma_dB must be nonnegative");
    if (!(alpha_gain > 0.0)) throw DomainError("alpha_gain must be positive");
    if (!(p_rcv_min_mw > 0.0)) throw DomainError("p_rcv_min must be positive");
    if (!(psi_mw > p_rcv_min_mw)) throw DomainError("psi must exceed p_rcv_min");
    if (!(step_m > 0.0)) throw DomainError("step length must be positive");
}

double required_power(const ChannelParams& params, double r_m, double nu_db) {
    if (!(r_m > 0.0)) {
        throw DomainError("link length must be positive");
    }
    return params.psi_mw / (std::pow(10.0, -nu_db / 10.0) * params.alpha_gain) * std::pow(r_m, params.eta);
}

double quantize_power(double p_req_mw, const PowerLevelSet& levels) {
    return levels[levels.quantize_index(p_req_mw)];
}

double outage_probability(double psi_mw, double p_rcv_min_mw) {
    if (!(psi_mw > 0.0) || !(p_rcv_min_mw >= 0.0)) {
        throw DomainError("outage_probability needs positive powers");
    }
    return -std::expm1(-p_rcv_min_mw / psi_mw);
}

LinkPowerModel::LinkPowerModel(ChannelParams params, PowerLevelSet levels, int max_steps)
    : params_(params), levels_(std::move(levels)), max_steps_(max_steps) {
    params_.validate();
    if (max_steps_ < 1) {
        throw DomainError("link power model needs at least one step");
    }
    if (levels_.size() == 0) {
        throw DomainError("power level set is empty");
    }
    const std::size_t k = levels_.size();
    pmf_.assign(static_cast<std::size_t>(max_steps_) * k, 0.0);
    cdf_.assign(pmf_.size(), 0.0);
    fail_.assign(static_cast<std::size_t>(max_steps_), 0.0);
    mean_.assign(static_cast<std::size_t>(max_steps_), 0.0);

    for (int r = 1; r <= max_steps_; ++r) {
        const double median = median_required(r);
        // P(required <= level) = P(nu <= 10 log10(level / median)).
        auto below = [&](double level) {
            const double margin_db = 10.0 * std::log10(level / median);
            if (params_.sigma_db == 0.0) {
                return margin_db >= 0.0 ? 1.0 : 0.0;
            }
            return normal_cdf(margin_db / params_.sigma_db);
        };
        const std::size_t row = static_cast<std::size_t>(r - 1) * k;
        double prev = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double c = (i + 1 == k) ? 1.0 : below(levels_[i]);
            pmf_[row + i] = c - prev;
            cdf_[row + i] = c;
            prev = c;
        }
        fail_[static_cast<std::size_t>(r - 1)] = 1.0 - below(levels_.max());
        double mean = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            mean += pmf_[row + i] * levels_[i];
        }
        mean_[static_cast<std::size_t>(r - 1)] = mean;
    }
}

void LinkPowerModel::check_range(int r) const {
    if (r < 1 || r > max_steps_) {
        throw DomainError("link length " + std::to_string(r) + " steps outside 1.." + std::to_string(max_steps_));
    }
}

std::span<const double> LinkPowerModel::pmf(int r) const {
    check_range(r);
    return {pmf_.data() + static_cast<std::size_t>(r - 1) * levels_.size(), levels_.size()};
}

double LinkPowerModel::cdf(int r, std::size_t level) const {
    check_range(r);
    return cdf_[static_cast<std::size_t>(r - 1) * levels_.size() + level];
}

double LinkPowerModel::fail_prob(int r) const {
    check_range(r);
    return fail_[static_cast<std::size_t>(r - 1)];
}

double LinkPowerModel::mean_level_power(int r) const {
    check_range(r);
    return mean_[static_cast<std::size_t>(r - 1)];
}

double LinkPowerModel::median_required(int r) const {
    return required_power(params_, r * params_.step_m, 0.0);
}

PowerSample LinkPowerModel::classify(double required_mw) const {
    PowerSample s;
    s.required_mw = required_mw;
    s.level_index = levels_.quantize_index(required_mw);
    s.level_mw = levels_[s.level_index];
    s.failed = required_mw > levels_.max();
    return s;
}

PowerSample LinkPowerModel::sample(int r, std::mt19937_64& rng) const {
    check_range(r);
    double nu = 0.0;
    if (params_.sigma_db > 0.0) {
        std::normal_distribution<double> shadow(0.0, params_.sigma_db);
        nu = shadow(rng);
    }
    return classify(required_power(params_, r * params_.step_m, nu));
}

LinkPowerModel build_pmf(const ChannelParams& params, const PowerLevelSet& levels, int max_steps) {
    return LinkPowerModel(params, levels, max_steps);
}

} // namespace relaynet
