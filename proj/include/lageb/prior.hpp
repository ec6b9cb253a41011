#pragma once

#include "lageb/mixing.hpp"
#include "lageb/rng.hpp"

#include <string_view>

namespace lageb {

enum class PriorKind { Gamma, UniformInterval, TruncatedGamma };

std::string_view to_string(PriorKind kind);

/// Prior g(theta) used to synthesize data and to evaluate the Bayes oracle.
class PriorModel {
public:
    /// Gamma with the given shape and rate on (0, inf).
    static PriorModel gamma(double shape, double rate);
    static PriorModel uniform(double lo, double hi);
    /// Gamma(shape, rate) conditioned on [lo, hi].
    static PriorModel truncated_gamma(double shape, double rate, double lo, double hi);

    PriorKind kind() const { return kind_; }
    std::string_view name() const { return to_string(kind_); }
    double shape() const { return shape_; }
    double rate() const { return rate_; }
    Interval support() const { return support_; }

    double density(double theta) const;
    double sample(Stream& rng) const;

    /// Probability mass the untruncated gamma puts on [lo, hi] (1 for the others).
    double truncation_mass() const { return mass_; }

    /// Point past which the density is negligible (the support end when finite).
    double bulk_end() const;

private:
    PriorModel(PriorKind kind, double shape, double rate, Interval support, double mass)
        : kind_(kind), shape_(shape), rate_(rate), support_(support), mass_(mass) {}

    PriorKind kind_;
    double shape_;
    double rate_;
    Interval support_;
    double mass_;
};

/// Default simulation prior paired with a mixing family.
PriorModel default_prior(const MixingModel& mixing);

/// True when the prior support lies inside the model's parameter domain.
bool prior_fits_domain(const PriorModel& prior, const MixingModel& mixing);

} // namespace lageb
