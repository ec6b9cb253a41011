#include "lageb/prior.hpp"

#include "lageb/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lageb {

std::string_view to_string(PriorKind kind) {
    switch (kind) {
    case PriorKind::Gamma: return "gamma";
    case PriorKind::UniformInterval: return "uniform";
    case PriorKind::TruncatedGamma: return "truncated_gamma";
    }
    return "unknown";
}

namespace {

void check_gamma(double shape, double rate) {
    if (!(std::isfinite(shape) && shape > 0.0 && std::isfinite(rate) && rate > 0.0)) {
        throw InputError("gamma prior requires shape > 0 and rate > 0");
    }
}

void check_interval(double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo >= 0.0 && lo < hi)) {
        throw InputError("prior interval requires finite 0 <= lo < hi");
    }
}

double gamma_log_density(double shape, double rate, double theta) {
    return shape * std::log(rate) + (shape - 1.0) * std::log(theta) - rate * theta -
           std::lgamma(shape);
}

constexpr int kMaxRejections = 64;

} // namespace

PriorModel PriorModel::gamma(double shape, double rate) {
    check_gamma(shape, rate);
    return PriorModel(PriorKind::Gamma, shape, rate,
                      {0.0, std::numeric_limits<double>::infinity(), false, false}, 1.0);
}

PriorModel PriorModel::uniform(double lo, double hi) {
    check_interval(lo, hi);
    return PriorModel(PriorKind::UniformInterval, 0.0, 0.0, {lo, hi, true, true}, 1.0);
}

PriorModel PriorModel::truncated_gamma(double shape, double rate, double lo, double hi) {
    check_gamma(shape, rate);
    check_interval(lo, hi);
    const double mass =
        boost::math::gamma_p(shape, rate * hi) - boost::math::gamma_p(shape, rate * lo);
    if (!(mass > 0.0)) {
        throw InputError("truncated gamma prior has no mass on [lo, hi]");
    }
    return PriorModel(PriorKind::TruncatedGamma, shape, rate, {lo, hi, true, true}, mass);
}

double PriorModel::density(double theta) const {
    if (!support_.contains(theta)) {
        return 0.0;
    }
    switch (kind_) {
    case PriorKind::Gamma: return std::exp(gamma_log_density(shape_, rate_, theta));
    case PriorKind::UniformInterval: return 1.0 / (support_.hi - support_.lo);
    case PriorKind::TruncatedGamma:
        return theta > 0.0 ? std::exp(gamma_log_density(shape_, rate_, theta)) / mass_ : 0.0;
    }
    return 0.0;
}

double PriorModel::sample(Stream& rng) const {
    switch (kind_) {
    case PriorKind::Gamma: return rng.gamma(shape_, rate_);
    case PriorKind::UniformInterval:
        return support_.lo + (support_.hi - support_.lo) * rng.uniform_open();
    case PriorKind::TruncatedGamma: {
        for (int i = 0; i < kMaxRejections; ++i) {
            const double t = rng.gamma(shape_, rate_);
            if (support_.contains(t)) {
                return t;
            }
        }
        // Low-mass window: invert the CDF restricted to [lo, hi].
        const double p_lo = boost::math::gamma_p(shape_, rate_ * support_.lo);
        const double p = p_lo + mass_ * rng.uniform_open();
        const double t = boost::math::gamma_p_inv(shape_, p) / rate_;
        return std::clamp(t, support_.lo, support_.hi);
    }
    }
    return 0.0;
}

double PriorModel::bulk_end() const {
    if (std::isfinite(support_.hi)) {
        return support_.hi;
    }
    return (shape_ + 12.0 * std::sqrt(shape_) + 40.0) / rate_;
}

PriorModel default_prior(const MixingModel& mixing) {
    switch (mixing.kind()) {
    case MixingKind::Uniform: {
        const Interval d = mixing.theta_domain();
        return PriorModel::uniform(d.lo, d.hi);
    }
    case MixingKind::Pareto: return PriorModel::uniform(1.0, mixing.theta_domain().hi);
    case MixingKind::Beta: return PriorModel::uniform(1.0, 4.0);
    default: return PriorModel::gamma(2.0, 1.0);
    }
}

bool prior_fits_domain(const PriorModel& prior, const MixingModel& mixing) {
    const Interval p = prior.support();
    const Interval d = mixing.theta_domain();
    const bool lo_ok = p.lo > d.lo || (p.lo == d.lo && (d.lo_closed || !p.lo_closed));
    const bool hi_ok = p.hi < d.hi || (p.hi == d.hi && (d.hi_closed || !p.hi_closed));
    return lo_ok && hi_ok;
}

} // namespace lageb
