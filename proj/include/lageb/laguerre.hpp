#pragma once

#include <span>

namespace lageb {

/// Identifies the generalized Laguerre function system {phi_k^(a)}, k = 0 .. M-1.
struct BasisSpec {
    double a = 0.0; // Laguerre parameter, a >= 0
    int M = 1;      // number of basis functions

    /// Throws InputError unless a >= 0 (finite) and M >= 1.
    void validate() const;

    bool operator==(const BasisSpec&) const = default;
};

/// Generalized Laguerre polynomial L_k^(a)(x) by the three-term recurrence.
double laguerre_poly(int k, double a, double x);

/// Orthonormal Laguerre function
///   phi_k^(a)(x) = sqrt(k! / Gamma(k+a+1)) e^{-x/2} x^{a/2} L_k^(a)(x).
/// At x = 0 with a > 0 the analytic limit 0 is returned unless `strict`, in
/// which case InputError is thrown.
double laguerre_fn(int k, double a, double x, bool strict = false);

/// d/dx phi_k^(a)(x), using (L_k^(a))' = -L_{k-1}^(a+1). Requires x > 0.
double laguerre_fn_deriv(int k, double a, double x);

/// phi_0 .. phi_{n-1} at x in one recurrence sweep, n = out.size().
void basis_values(double a, double x, std::span<double> out);

/// phi'_0 .. phi'_{n-1} at x > 0 in one sweep.
void basis_derivatives(double a, double x, std::span<double> out);

/// Right end of the oscillatory region of phi_0 .. phi_{k_max}; beyond it every
/// function in the family decays like e^{-x/2} times a polynomial.
double basis_bulk_end(int k_max, double a);

/// Integral of phi_k^(a) over [0, x] (adaptive quadrature, abs. tol 1e-10).
double cumulative_integral(int k, double a, double x);

/// Integral of z^{-alpha-1} phi_k^(a)(z) over [x, inf), alpha > 2.
double tail_weighted_integral(int k, double a, double alpha, double x);

/// x^{alpha+1} * tail_weighted_integral(k, a, alpha, x) evaluated without
/// forming the large prefactor.
double scaled_tail_integral(int k, double a, double alpha, double x);

/// sum_l coeffs[l] * phi_l^(a)(y) for l < spec.M.
double eval_series(std::span<const double> coeffs, const BasisSpec& spec, double y);

} // namespace lageb
