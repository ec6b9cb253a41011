#pragma once

#include "lageb/rng.hpp"

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

namespace lageb {

enum class MixingKind { Uniform, Pareto, Beta, Exponential, Rayleigh, Weibull };

std::string_view to_string(MixingKind kind);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_closed = false;
    bool hi_closed = false;

    bool contains(double v) const;
};

/// Known conditional family q(x | theta) together with the functions U_k that
/// turn c_k = integral phi_k Psi into a marginal expectation, the Laguerre
/// parameter that keeps U_k square integrable, and the U_k norm-growth
/// exponent beta.
///
/// The Laguerre parameter is fixed by the family and cannot be overridden.
class MixingModel {
public:
    /// q = 1/theta on (0, theta), theta in [theta_lo, theta_hi].
    static MixingModel uniform(double theta_lo = 0.5, double theta_hi = 3.0);
    /// q = alpha theta^alpha / x^{alpha+1} on x >= theta, 0 < theta <= theta_max.
    /// Requires alpha > 2 and theta_max > 1.
    static MixingModel pareto(double alpha = 3.0, double theta_max = 3.0);
    /// Beta(alpha, theta) on (0, 1) with known first shape alpha > 0.
    static MixingModel beta(double alpha = 2.0);
    /// q = theta e^{-x theta}.
    static MixingModel exponential();
    /// q = theta x e^{-x^2 theta / 2}.
    static MixingModel rayleigh();
    /// q = alpha theta x^{alpha-1} e^{-x^alpha theta}, known shape alpha > 0.
    static MixingModel weibull(double alpha = 2.0);

    MixingKind kind() const { return kind_; }
    std::string_view name() const { return to_string(kind_); }
    /// Known shape constant (Pareto, Beta, Weibull); 0 for the other families.
    double shape() const { return shape_; }
    double recommended_a() const { return a_; }
    double beta_exponent() const { return beta_; }
    Interval theta_domain() const { return theta_domain_; }
    Interval x_support() const;

    double density(double x, double theta) const;
    double sample(double theta, Stream& rng) const;

    /// U_k(x) for one order.
    double u(int k, double x) const;
    /// U_0(x) .. U_{n-1}(x), n = out.size().
    void u_row(double x, std::span<double> out) const;
    /// N x M matrix of U_k(X_i) for ascending data. Uniform and Pareto rows are
    /// produced by a single sweep that integrates only between consecutive
    /// observations.
    Eigen::MatrixXd u_matrix(std::span<const double> ascending, int M) const;

    /// A point past which q(. | theta) carries negligible mass.
    double conditional_bulk_end(double theta) const;

    /// Throws InputError when theta is outside the parameter domain.
    void check_theta(double theta) const;

private:
    MixingModel(MixingKind kind, double shape, double a, double beta, Interval theta_domain)
        : kind_(kind), shape_(shape), a_(a), beta_(beta), theta_domain_(theta_domain) {}

    MixingKind kind_;
    double shape_;
    double a_;
    double beta_;
    Interval theta_domain_;
};

/// |integral q(x|theta) U_k(x) dx - integral theta q(x|theta) phi_k(x) dx|.
/// `u_sign` = -1 negates U_k, which the tests use to confirm the check can fail.
double verify_u_identity(const MixingModel& model, int k, double theta, double u_sign = 1.0);

/// integral U_k(x)^2 over the x-support of the model.
double u_norm(const MixingModel& model, int k);

/// Five theta values spanning the model's parameter domain.
std::vector<double> default_theta_grid(const MixingModel& model);

} // namespace lageb
