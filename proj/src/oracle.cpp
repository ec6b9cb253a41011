#include "lageb/oracle.hpp"

#include "lageb/error.hpp"
#include "lageb/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lageb {

BayesOracle::BayesOracle(PriorModel prior, MixingModel mixing, double quad_tol)
    : prior_(prior), mixing_(mixing), quad_tol_(quad_tol) {
    if (!(quad_tol > 0.0 && quad_tol < 1e-2)) {
        throw InputError("oracle quadrature tolerance must lie in (0, 0.01)");
    }
    if (!prior_fits_domain(prior_, mixing_)) {
        throw InputError("the " + std::string(prior_.name()) +
                         " prior support is not inside the " + std::string(mixing_.name()) +
                         " parameter domain");
    }
}

BayesOracle::Moments BayesOracle::moments(double y) const {
    if (!std::isfinite(y) || y < 0.0) {
        throw InputError("oracle requires finite y >= 0");
    }
    const Interval xs = mixing_.x_support();
    if (y > xs.hi || (y == xs.hi && !xs.hi_closed)) {
        return {};
    }

    // theta range on which q(y | theta) g(theta) can be nonzero
    const Interval support = prior_.support();
    double lo = support.lo;
    double hi = support.hi;
    switch (mixing_.kind()) {
    case MixingKind::Uniform:
        lo = std::max(lo, y);
        break;
    case MixingKind::Pareto:
        hi = std::min(hi, y);
        break;
    default:
        break;
    }
    if (!(hi > lo)) {
        return {};
    }

    quad::Options opts;
    opts.rel_tol = quad_tol_;
    opts.abs_tol = 1e-300;
    const quad::VectorFn f = [this, y](double theta, std::span<double> out) {
        const double w = mixing_.density(y, theta) * prior_.density(theta);
        out[0] = w;
        out[1] = theta * w;
    };
    std::vector<double> v;
    if (std::isfinite(hi)) {
        opts.initial_panels = 8;
        v = quad::integrate_many(2, f, lo, hi, opts);
    } else {
        v = quad::integrate_many_to_infinity(2, f, lo, std::max(prior_.bulk_end(), lo + 1.0), opts);
    }
    return {std::max(v[0], 0.0), std::max(v[1], 0.0)};
}

double BayesOracle::marginal_density(double y) const { return moments(y).p; }

double BayesOracle::psi(double y) const { return moments(y).psi; }

double BayesOracle::bayes_rule(double y) const {
    const Moments m = moments(y);
    if (!(m.p >= kMinMarginal)) {
        throw NumericalError("marginal density p(" + std::to_string(y) + ") = " +
                             std::to_string(m.p) + " is below the oracle threshold");
    }
    return m.psi / m.p;
}

std::optional<double> BayesOracle::closed_form(double y) const {
    if (mixing_.kind() != MixingKind::Exponential || prior_.kind() != PriorKind::Gamma) {
        return std::nullopt;
    }
    if (!std::isfinite(y) || y < 0.0) {
        throw InputError("oracle requires finite y >= 0");
    }
    return (prior_.shape() + 1.0) / (prior_.rate() + y);
}

} // namespace lageb
