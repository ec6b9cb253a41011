#include "lageb/mixing.hpp"

#include "lageb/error.hpp"
#include "lageb/laguerre.hpp"
#include "lageb/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lageb {

std::string_view to_string(MixingKind kind) {
    switch (kind) {
    case MixingKind::Uniform: return "uniform";
    case MixingKind::Pareto: return "pareto";
    case MixingKind::Beta: return "beta";
    case MixingKind::Exponential: return "exponential";
    case MixingKind::Rayleigh: return "rayleigh";
    case MixingKind::Weibull: return "weibull";
    }
    return "unknown";
}

bool Interval::contains(double v) const {
    if (!std::isfinite(v)) {
        return false;
    }
    const bool above = lo_closed ? v >= lo : v > lo;
    const bool below = hi_closed ? v <= hi : v < hi;
    return above && below;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw InputError(what);
    }
}

} // namespace

MixingModel MixingModel::uniform(double theta_lo, double theta_hi) {
    require(std::isfinite(theta_lo) && std::isfinite(theta_hi) && theta_lo > 0.0 &&
                theta_lo <= theta_hi,
            "uniform mixing requires 0 < theta_lo <= theta_hi");
    return MixingModel(MixingKind::Uniform, 0.0, 0.0, 0.0, {theta_lo, theta_hi, true, true});
}

MixingModel MixingModel::pareto(double alpha, double theta_max) {
    require(std::isfinite(alpha) && alpha > 2.0, "pareto mixing requires alpha > 2");
    require(std::isfinite(theta_max) && theta_max > 1.0, "pareto mixing requires theta_max > 1");
    return MixingModel(MixingKind::Pareto, alpha, 0.0, 7.0 / 3.0, {0.0, theta_max, false, true});
}

MixingModel MixingModel::beta(double alpha) {
    require(std::isfinite(alpha) && alpha > 0.0, "beta mixing requires alpha > 0");
    return MixingModel(MixingKind::Beta, alpha, 2.0, 1.0, {0.0, kInf, false, false});
}

MixingModel MixingModel::exponential() {
    return MixingModel(MixingKind::Exponential, 0.0, 2.0, 1.0, {0.0, kInf, false, false});
}

MixingModel MixingModel::rayleigh() {
    return MixingModel(MixingKind::Rayleigh, 0.0, 4.0, 1.0, {0.0, kInf, false, false});
}

MixingModel MixingModel::weibull(double alpha) {
    require(std::isfinite(alpha) && alpha > 0.0, "weibull mixing requires alpha > 0");
    return MixingModel(MixingKind::Weibull, alpha, 2.0 * alpha, 1.0, {0.0, kInf, false, false});
}

Interval MixingModel::x_support() const {
    switch (kind_) {
    case MixingKind::Uniform: return {0.0, theta_domain_.hi, false, false};
    case MixingKind::Beta: return {0.0, 1.0, false, true}; // U_k(1) = 0 is well defined
    default: return {0.0, kInf, false, false};
    }
}

void MixingModel::check_theta(double theta) const {
    if (!theta_domain_.contains(theta)) {
        throw InputError("theta = " + std::to_string(theta) + " is outside the " +
                         std::string(name()) + " parameter domain");
    }
}

double MixingModel::density(double x, double theta) const {
    check_theta(theta);
    if (std::isnan(x) || x < 0.0) {
        return 0.0;
    }
    const double alpha = shape_;
    switch (kind_) {
    case MixingKind::Uniform:
        return (x > 0.0 && x < theta) ? 1.0 / theta : 0.0;
    case MixingKind::Pareto:
        return x >= theta ? alpha * std::exp(alpha * std::log(theta) - (alpha + 1.0) * std::log(x))
                          : 0.0;
    case MixingKind::Beta: {
        if (x <= 0.0 || x >= 1.0) {
            return 0.0;
        }
        const double log_norm =
            std::lgamma(theta + alpha) - std::lgamma(theta) - std::lgamma(alpha);
        return std::exp(log_norm + (alpha - 1.0) * std::log(x) + (theta - 1.0) * std::log1p(-x));
    }
    case MixingKind::Exponential:
        return theta * std::exp(-x * theta);
    case MixingKind::Rayleigh:
        return theta * x * std::exp(-0.5 * x * x * theta);
    case MixingKind::Weibull:
        if (x == 0.0) {
            return alpha == 1.0 ? theta : (alpha > 1.0 ? 0.0 : kInf);
        }
        return alpha * theta * std::pow(x, alpha - 1.0) * std::exp(-std::pow(x, alpha) * theta);
    }
    return 0.0;
}

double MixingModel::sample(double theta, Stream& rng) const {
    check_theta(theta);
    const double alpha = shape_;
    switch (kind_) {
    case MixingKind::Uniform:
        return theta * rng.uniform_open();
    case MixingKind::Pareto:
        return theta * std::pow(rng.uniform_open(), -1.0 / alpha);
    case MixingKind::Beta: {
        // No closed-form inverse CDF for general (alpha, theta); use the gamma ratio.
        const double g1 = rng.gamma(alpha, 1.0);
        const double g2 = rng.gamma(theta, 1.0);
        double x = g1 / (g1 + g2);
        if (!(x > 0.0)) {
            x = std::numeric_limits<double>::min();
        }
        if (!(x < 1.0)) {
            x = std::nextafter(1.0, 0.0);
        }
        return x;
    }
    case MixingKind::Exponential:
        return -std::log(rng.uniform_open()) / theta;
    case MixingKind::Rayleigh:
        return std::sqrt(-2.0 * std::log(rng.uniform_open()) / theta);
    case MixingKind::Weibull:
        return std::pow(-std::log(rng.uniform_open()) / theta, 1.0 / alpha);
    }
    return 0.0;
}

double MixingModel::conditional_bulk_end(double theta) const {
    constexpr double kLogMass = 40.0;
    switch (kind_) {
    case MixingKind::Uniform: return theta;
    case MixingKind::Pareto: return theta * std::exp(kLogMass / shape_);
    case MixingKind::Beta: return 1.0;
    case MixingKind::Exponential: return kLogMass / theta;
    case MixingKind::Rayleigh: return std::sqrt(2.0 * kLogMass / theta);
    case MixingKind::Weibull: return std::pow(kLogMass / theta, 1.0 / shape_);
    }
    return kInf;
}

namespace {

void check_u_point(const MixingModel& m, double x) {
    const Interval s = m.x_support();
    if (!(x > 0.0) || !s.contains(x)) {
        throw InputError("U_k evaluated at x = " + std::to_string(x) + " outside the " +
                         std::string(m.name()) + " support");
    }
}

// Vector of integrals of (lo / z)^{alpha+1} phi_k(z) over [lo, hi] (Pareto sweep step).
std::vector<double> weighted_segment(double a, double alpha, double lo, double hi, int M) {
    return quad::integrate_many(
        static_cast<std::size_t>(M),
        [=](double z, std::span<double> out) {
            basis_values(a, z, out);
            const double w = std::pow(lo / z, alpha + 1.0);
            for (double& v : out) {
                v *= w;
            }
        },
        lo, hi);
}

// x * integral_0^1 v^{alpha-1} phi_k(x / v) dv for all k < M.
std::vector<double> scaled_tails(double a, double alpha, double x, int M) {
    quad::Options opts;
    opts.abs_tol = 1e-10 / std::max(x, 1.0);
    opts.initial_panels = 8;
    std::vector<double> v = quad::integrate_many(
        static_cast<std::size_t>(M),
        [=](double s, std::span<double> out) {
            basis_values(a, x / s, out);
            const double w = std::pow(s, alpha - 1.0);
            for (double& e : out) {
                e *= w;
            }
        },
        0.0, 1.0, opts);
    for (double& e : v) {
        e *= x;
    }
    return v;
}

std::vector<double> cumulative_segment(double a, double lo, double hi, int M) {
    quad::Options opts;
    opts.initial_panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / 4.0)));
    return quad::integrate_many(
        static_cast<std::size_t>(M), [=](double z, std::span<double> out) { basis_values(a, z, out); },
        lo, hi, opts);
}

} // namespace

void MixingModel::u_row(double x, std::span<double> out) const {
    check_u_point(*this, x);
    const int M = static_cast<int>(out.size());
    if (M == 0) {
        return;
    }
    std::vector<double> phi(out.size());
    switch (kind_) {
    case MixingKind::Uniform: {
        basis_values(a_, x, phi);
        const std::vector<double> cum = cumulative_segment(a_, 0.0, x, M);
        for (int k = 0; k < M; ++k) {
            out[k] = cum[k] + x * phi[k];
        }
        return;
    }
    case MixingKind::Pareto: {
        basis_values(a_, x, phi);
        const std::vector<double> tail = scaled_tails(a_, shape_, x, M);
        for (int k = 0; k < M; ++k) {
            out[k] = -tail[k] + x * phi[k];
        }
        return;
    }
    case MixingKind::Beta: {
        basis_values(a_, x, phi);
        basis_derivatives(a_, x, out);
        const double one_minus = 1.0 - x;
        for (int k = 0; k < M; ++k) {
            out[k] = (shape_ - 1.0) * one_minus * phi[k] / x + one_minus * out[k];
        }
        return;
    }
    case MixingKind::Exponential:
        basis_derivatives(a_, x, out);
        return;
    case MixingKind::Rayleigh:
        basis_derivatives(a_, x, out);
        for (double& v : out) {
            v /= x;
        }
        return;
    case MixingKind::Weibull: {
        basis_derivatives(a_, x, out);
        const double scale = 1.0 / (shape_ * std::pow(x, shape_ - 1.0));
        for (double& v : out) {
            v *= scale;
        }
        return;
    }
    }
}

double MixingModel::u(int k, double x) const {
    if (k < 0) {
        throw InputError("U_k requires k >= 0");
    }
    check_u_point(*this, x);
    switch (kind_) {
    case MixingKind::Uniform:
        return cumulative_integral(k, a_, x) + x * laguerre_fn(k, a_, x);
    case MixingKind::Pareto:
        return -scaled_tail_integral(k, a_, shape_, x) + x * laguerre_fn(k, a_, x);
    default: {
        std::vector<double> row(static_cast<std::size_t>(k) + 1);
        u_row(x, row);
        return row.back();
    }
    }
}

Eigen::MatrixXd MixingModel::u_matrix(std::span<const double> ascending, int M) const {
    if (M < 1) {
        throw InputError("u_matrix requires M >= 1");
    }
    const auto n = static_cast<Eigen::Index>(ascending.size());
    if (!std::is_sorted(ascending.begin(), ascending.end())) {
        throw InputError("u_matrix requires ascending data");
    }
    for (double x : ascending) {
        check_u_point(*this, x);
    }
    Eigen::MatrixXd U(n, M);
    std::vector<double> phi(static_cast<std::size_t>(M));
    std::vector<double> row(static_cast<std::size_t>(M));

    if (kind_ == MixingKind::Uniform) {
        std::vector<double> cum(static_cast<std::size_t>(M), 0.0);
        double prev = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = ascending[static_cast<std::size_t>(i)];
            if (x > prev) {
                const std::vector<double> seg = cumulative_segment(a_, prev, x, M);
                for (int k = 0; k < M; ++k) {
                    cum[k] += seg[k];
                }
                prev = x;
            }
            basis_values(a_, x, phi);
            for (int k = 0; k < M; ++k) {
                U(i, k) = cum[k] + x * phi[k];
            }
        }
        return U;
    }

    if (kind_ == MixingKind::Pareto) {
        // S(x) = x^{alpha+1} integral_x^inf z^{-alpha-1} phi(z) dz, swept downward:
        // S(x_i) = (x_i / x_{i+1})^{alpha+1} S(x_{i+1}) + integral_{x_i}^{x_{i+1}} (x_i/z)^{alpha+1} phi.
        const double alpha = shape_;
        std::vector<double> tail;
        double next = 0.0;
        for (Eigen::Index i = n - 1; i >= 0; --i) {
            const double x = ascending[static_cast<std::size_t>(i)];
            if (tail.empty()) {
                tail = scaled_tails(a_, alpha, x, M);
            } else if (x < next) {
                const double shrink = std::pow(x / next, alpha + 1.0);
                const std::vector<double> seg = weighted_segment(a_, alpha, x, next, M);
                for (int k = 0; k < M; ++k) {
                    tail[k] = shrink * tail[k] + seg[k];
                }
            }
            next = x;
            basis_values(a_, x, phi);
            for (int k = 0; k < M; ++k) {
                U(i, k) = -tail[k] + x * phi[k];
            }
        }
        return U;
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        u_row(ascending[static_cast<std::size_t>(i)], row);
        for (int k = 0; k < M; ++k) {
            U(i, k) = row[k];
        }
    }
    return U;
}

namespace {

// integral over the conditional support of q(x | theta) h(x) dx, with
// family-specific substitutions that remove endpoint singularities and
// polynomial tails.
double conditional_expectation(const MixingModel& m, double theta, int k,
                               const std::function<double(double)>& h) {
    quad::Options opts;
    opts.abs_tol = 1e-10;
    opts.rel_tol = 1e-12;
    const double alpha = m.shape();
    switch (m.kind()) {
    case MixingKind::Uniform:
        opts.initial_panels = std::max(1, static_cast<int>(std::ceil(theta / 2.0)));
        return quad::integrate([&](double x) { return h(x) / theta; }, 0.0, theta, opts);
    case MixingKind::Pareto:
        // x = theta / v: alpha theta^alpha x^{-alpha-1} dx = alpha v^{alpha-1} dv.
        opts.initial_panels = 8;
        return quad::integrate(
            [&](double v) { return alpha * std::pow(v, alpha - 1.0) * h(theta / v); }, 0.0, 1.0,
            opts);
    case MixingKind::Beta: {
        // x = 1 - s^2 absorbs the (1-x)^{theta-1} endpoint factor.
        const double log_norm =
            std::lgamma(theta + alpha) - std::lgamma(theta) - std::lgamma(alpha);
        opts.initial_panels = 4;
        return quad::integrate(
            [&](double s) {
                if (s <= 0.0 || s >= 1.0) {
                    return 0.0;
                }
                const double x = 1.0 - s * s;
                if (x >= 1.0) {
                    return 0.0;
                }
                const double q_times_jac =
                    2.0 * std::exp(log_norm + (alpha - 1.0) * std::log(x) +
                                   (2.0 * theta - 1.0) * std::log(s));
                return q_times_jac * h(x);
            },
            0.0, 1.0, opts);
    }
    default: {
        const double bulk =
            std::min(basis_bulk_end(k, m.recommended_a()), m.conditional_bulk_end(theta));
        return quad::integrate_to_infinity(
            [&](double x) { return x > 0.0 ? m.density(x, theta) * h(x) : 0.0; }, 0.0, bulk,
            opts);
    }
    }
}

} // namespace

double verify_u_identity(const MixingModel& model, int k, double theta, double u_sign) {
    model.check_theta(theta);
    if (k < 0) {
        throw InputError("verify_u_identity requires k >= 0");
    }
    const double a = model.recommended_a();
    const double lhs = conditional_expectation(
        model, theta, k, [&](double x) { return u_sign * model.u(k, x); });
    const double rhs = conditional_expectation(
        model, theta, k, [&](double x) { return theta * laguerre_fn(k, a, x); });
    return std::abs(lhs - rhs);
}

double u_norm(const MixingModel& model, int k) {
    if (k < 0) {
        throw InputError("u_norm requires k >= 0");
    }
    quad::Options opts;
    opts.abs_tol = 1e-10;
    opts.rel_tol = 1e-10;
    auto square = [&](double x) {
        if (!(x > 0.0)) {
            return 0.0;
        }
        const double v = model.u(k, x);
        return v * v;
    };
    const Interval s = model.x_support();
    if (std::isfinite(s.hi)) {
        opts.initial_panels = std::max(4, static_cast<int>(std::ceil(s.hi / 0.25)));
        return quad::integrate(square, 0.0, s.hi, opts);
    }
    return quad::integrate_to_infinity(square, 0.0, basis_bulk_end(k, model.recommended_a()), opts);
}

std::vector<double> default_theta_grid(const MixingModel& model) {
    switch (model.kind()) {
    case MixingKind::Uniform: {
        const Interval d = model.theta_domain();
        std::vector<double> g(5);
        for (int i = 0; i < 5; ++i) {
            g[i] = d.lo + (d.hi - d.lo) * i / 4.0;
        }
        return g;
    }
    case MixingKind::Pareto: {
        const double hi = model.theta_domain().hi;
        return {0.2 * hi, 0.4 * hi, 0.6 * hi, 0.8 * hi, hi};
    }
    case MixingKind::Beta: return {0.5, 1.0, 2.0, 4.0, 8.0};
    default: return {0.25, 0.5, 1.0, 2.0, 4.0};
    }
}

} // namespace lageb
