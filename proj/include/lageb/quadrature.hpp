#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace lageb::quad {

/// Termination criteria for the adaptive integrators. A result is accepted once
/// the summed error estimate is at most max(abs_tol, rel_tol * |value|) in every
/// component.
struct Options {
    double abs_tol = 1e-10;
    double rel_tol = 1e-12;
    int max_panels = 4000;
    int initial_panels = 1;
};

using ScalarFn = std::function<double(double)>;
/// Vector-valued integrand: writes f(x) into `out` (size fixed per call site).
using VectorFn = std::function<void(double, std::span<double>)>;

struct Result {
    double value = 0.0;
    double abs_error = 0.0;
    double abs_integral = 0.0; // integral of |f|, used for tail truncation
    int panels = 0;
};

// Globally adaptive Gauss-Kronrod (7/15) on a finite interval.
// Throws QuadratureError when the panel cap is hit before convergence.
Result integrate_gk(const ScalarFn& f, double lo, double hi, const Options& opts = {});
double integrate(const ScalarFn& f, double lo, double hi, const Options& opts = {});

std::vector<double> integrate_many(std::size_t dim, const VectorFn& f, double lo, double hi,
                                   const Options& opts = {});

// Integrals over [lo, inf). The interval [lo, bulk_end] is integrated as one
// adaptive block; beyond it, geometrically growing panels are added until a
// panel's absolute mass drops below the truncation threshold.
double integrate_to_infinity(const ScalarFn& f, double lo, double bulk_end,
                             const Options& opts = {});
std::vector<double> integrate_many_to_infinity(std::size_t dim, const VectorFn& f, double lo,
                                               double bulk_end, const Options& opts = {});

} // namespace lageb::quad
