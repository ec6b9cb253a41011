#include "lageb/laguerre.hpp"

#include "lageb/error.hpp"
#include "lageb/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace lageb {

namespace {

void check_order(int k) {
    if (k < 0) {
        throw InputError("Laguerre order must be nonnegative, got " + std::to_string(k));
    }
}

void check_parameter(double a) {
    if (!std::isfinite(a) || a < 0.0) {
        throw InputError("Laguerre parameter a must be finite and >= 0, got " + std::to_string(a));
    }
}

// log of e^{-x/2} x^{a/2}; -inf at x = 0 when a > 0.
double log_weight(double a, double x) {
    if (x == 0.0) {
        return a == 0.0 ? 0.0 : -INFINITY;
    }
    return -0.5 * x + 0.5 * a * std::log(x);
}

constexpr double kLogUnderflow = -745.0;

// Fills out[k] = sqrt(k!/Gamma(k+a+1)) L_k^(a)(x) for k < out.size(). The
// normalized three-term recurrence keeps every term O(x^k / sqrt(k! Gamma(k+a+1)))
// so no factorial is ever formed.
void normalized_polys(double a, double x, std::span<double> out) {
    if (out.empty()) {
        return;
    }
    out[0] = std::exp(-0.5 * std::lgamma(a + 1.0));
    if (out.size() == 1) {
        return;
    }
    out[1] = (1.0 + a - x) * out[0] / std::sqrt(1.0 + a);
    for (std::size_t n = 1; n + 1 < out.size(); ++n) {
        const double k = static_cast<double>(n);
        out[n + 1] = ((2.0 * k + 1.0 + a - x) * out[n] - std::sqrt(k * (k + a)) * out[n - 1]) /
                     std::sqrt((k + 1.0) * (k + 1.0 + a));
    }
}

} // namespace

void BasisSpec::validate() const {
    check_parameter(a);
    if (M < 1) {
        throw InputError("truncation level M must be >= 1, got " + std::to_string(M));
    }
}

double laguerre_poly(int k, double a, double x) {
    check_order(k);
    check_parameter(a);
    if (!std::isfinite(x) || x < 0.0) {
        throw InputError("laguerre_poly requires finite x >= 0");
    }
    if (k == 0) {
        return 1.0;
    }
    double prev = 1.0;
    double cur = 1.0 + a - x;
    for (int n = 1; n < k; ++n) {
        const double next = ((2.0 * n + 1.0 + a - x) * cur - (n + a) * prev) / (n + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

void basis_values(double a, double x, std::span<double> out) {
    check_parameter(a);
    if (!std::isfinite(x) || x < 0.0) {
        throw InputError("basis evaluation requires finite x >= 0");
    }
    const double lw = log_weight(a, x);
    if (lw < kLogUnderflow) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    normalized_polys(a, x, out);
    const double w = std::exp(lw);
    for (double& v : out) {
        v *= w;
    }
}

void basis_derivatives(double a, double x, std::span<double> out) {
    check_parameter(a);
    if (!std::isfinite(x) || x <= 0.0) {
        throw InputError("basis derivative requires finite x > 0");
    }
    const double lw = log_weight(a, x);
    if (lw < kLogUnderflow) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const std::size_t n = out.size();
    std::vector<double> same(n);
    std::vector<double> shifted(n > 0 ? n - 1 : 0);
    normalized_polys(a, x, same);
    normalized_polys(a + 1.0, x, shifted);
    const double w = std::exp(lw);
    const double slope = 0.5 * a / x - 0.5;
    for (std::size_t k = 0; k < n; ++k) {
        double v = slope * same[k];
        if (k > 0) {
            v -= std::sqrt(static_cast<double>(k)) * shifted[k - 1];
        }
        out[k] = w * v;
    }
}

double laguerre_fn(int k, double a, double x, bool strict) {
    check_order(k);
    check_parameter(a);
    if (!std::isfinite(x) || x < 0.0) {
        throw InputError("laguerre_fn requires finite x >= 0");
    }
    if (x == 0.0 && a > 0.0 && strict) {
        throw InputError("laguerre_fn at x = 0 with a > 0 (strict mode)");
    }
    const double lw = log_weight(a, x);
    if (lw < kLogUnderflow) {
        return 0.0;
    }
    double prev = 0.0;
    double cur = std::exp(-0.5 * std::lgamma(a + 1.0));
    for (int n = 0; n < k; ++n) {
        const double m = n;
        const double next = ((2.0 * m + 1.0 + a - x) * cur - std::sqrt(m * (m + a)) * prev) /
                            std::sqrt((m + 1.0) * (m + 1.0 + a));
        prev = cur;
        cur = next;
    }
    return std::exp(lw) * cur;
}

double laguerre_fn_deriv(int k, double a, double x) {
    check_order(k);
    std::vector<double> vals(static_cast<std::size_t>(k) + 1);
    basis_derivatives(a, x, vals);
    return vals.back();
}

double basis_bulk_end(int k_max, double a) {
    return 4.0 * std::max(k_max, 0) + 2.0 * a + 12.0;
}

double cumulative_integral(int k, double a, double x) {
    check_order(k);
    check_parameter(a);
    if (!std::isfinite(x) || x < 0.0) {
        throw InputError("cumulative_integral requires finite x >= 0");
    }
    quad::Options opts;
    opts.initial_panels = std::max(1, static_cast<int>(std::ceil(x / 4.0)));
    return quad::integrate([k, a](double z) { return laguerre_fn(k, a, z); }, 0.0, x, opts);
}

namespace {

void check_tail_args(double alpha, double x) {
    if (!(alpha > 2.0) || !std::isfinite(alpha)) {
        throw InputError("tail integral requires alpha > 2, got " + std::to_string(alpha));
    }
    if (!std::isfinite(x) || x <= 0.0) {
        throw InputError("tail integral requires finite x > 0");
    }
}

// integral_0^1 v^{alpha-1} phi_k(x / v) dv; substituting z = x / v maps
// [x, inf) onto (0, 1] and turns the polynomial tail into a smooth endpoint.
double inverted_tail(int k, double a, double alpha, double x, double abs_tol) {
    quad::Options opts;
    opts.abs_tol = abs_tol;
    opts.initial_panels = 8;
    return quad::integrate(
        [=](double v) { return std::pow(v, alpha - 1.0) * laguerre_fn(k, a, x / v); }, 0.0, 1.0,
        opts);
}

} // namespace

double tail_weighted_integral(int k, double a, double alpha, double x) {
    check_order(k);
    check_parameter(a);
    check_tail_args(alpha, x);
    const double scale = std::pow(x, -alpha);
    return scale * inverted_tail(k, a, alpha, x, 1e-10 / std::max(scale, 1.0));
}

double scaled_tail_integral(int k, double a, double alpha, double x) {
    check_order(k);
    check_parameter(a);
    check_tail_args(alpha, x);
    return x * inverted_tail(k, a, alpha, x, 1e-10 / std::max(x, 1.0));
}

double eval_series(std::span<const double> coeffs, const BasisSpec& spec, double y) {
    spec.validate();
    if (coeffs.size() != static_cast<std::size_t>(spec.M)) {
        throw InputError("coefficient vector has length " + std::to_string(coeffs.size()) +
                         " but the basis has M = " + std::to_string(spec.M));
    }
    if (!std::isfinite(y) || y < 0.0) {
        throw InputError("series evaluation requires finite y >= 0");
    }
    const double lw = log_weight(spec.a, y);
    if (lw < kLogUnderflow) {
        return 0.0;
    }
    const double a = spec.a;
    const double x = y;
    double prev = 0.0;
    double cur = std::exp(-0.5 * std::lgamma(a + 1.0));
    double sum = coeffs[0] * cur;
    for (int n = 0; n + 1 < spec.M; ++n) {
        const double k = n;
        const double next =
            ((2.0 * k + 1.0 + a - x) * cur - std::sqrt(k * (k + a)) * prev) /
            std::sqrt((k + 1.0) * (k + 1.0 + a));
        prev = cur;
        cur = next;
        sum += coeffs[static_cast<std::size_t>(n) + 1] * cur;
    }
    return std::exp(lw) * sum;
}

} // namespace lageb
