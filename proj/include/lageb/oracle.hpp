#pragma once

#include "lageb/mixing.hpp"
#include "lageb/prior.hpp"

#include <optional>

namespace lageb {

/// Bayes rule t(y) = Psi(y) / p(y) for a known (prior, mixing) pair, where
/// p(y) = integral q(y|theta) g(theta) and Psi(y) = integral theta q(y|theta) g(theta).
class BayesOracle {
public:
    /// Throws InputError unless the prior support lies in the model's parameter domain.
    BayesOracle(PriorModel prior, MixingModel mixing, double quad_tol = 1e-10);

    const PriorModel& prior() const { return prior_; }
    const MixingModel& mixing() const { return mixing_; }
    double quad_tol() const { return quad_tol_; }

    double marginal_density(double y) const;
    double psi(double y) const;
    /// Throws NumericalError when p(y) < kMinMarginal.
    double bayes_rule(double y) const;

    /// (s0 + 1) / (r0 + y) for the Exponential mixing with a Gamma(s0, r0) prior.
    std::optional<double> closed_form(double y) const;

    /// p(y) and Psi(y) from a single quadrature pass over theta.
    struct Moments {
        double p = 0.0;
        double psi = 0.0;
    };
    Moments moments(double y) const;

    static constexpr double kMinMarginal = 1e-12;

private:
    PriorModel prior_;
    MixingModel mixing_;
    double quad_tol_;
};

} // namespace lageb
