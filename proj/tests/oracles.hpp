#pragma once
// Reference computations kept independent of the library code paths.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

// L_k^(a)(x) from the explicit sum over binom(k+a, k-i) (-x)^i / i!.
inline double laguerre_series(int k, double a, double x) {
    if (x == 0.0) {
        return std::exp(std::lgamma(k + a + 1.0) - std::lgamma(k + 1.0) - std::lgamma(a + 1.0));
    }
    long double sum = 0.0L;
    for (int i = 0; i <= k; ++i) {
        const long double log_binom = std::lgamma(k + a + 1.0L) - std::lgamma(k - i + 1.0L) -
                                      std::lgamma(a + i + 1.0L);
        const long double term = std::exp(log_binom + i * std::log(static_cast<long double>(x)) -
                                          std::lgamma(i + 1.0L));
        sum += (i % 2 == 0 ? term : -term);
    }
    return static_cast<double>(sum);
}

// Normalized Laguerre function built from the explicit series.
inline double laguerre_fn_series(int k, double a, double x) {
    const double norm = std::exp(0.5 * (std::lgamma(k + 1.0) - std::lgamma(k + a + 1.0)));
    return norm * std::exp(-0.5 * x) * std::pow(x, 0.5 * a) * laguerre_series(k, a, x);
}

inline double trapezoid(const std::function<double(double)>& f, double lo, double hi, long panels) {
    const double h = (hi - lo) / static_cast<double>(panels);
    long double sum = 0.5L * (f(lo) + f(hi));
    for (long i = 1; i < panels; ++i) {
        sum += f(lo + h * static_cast<double>(i));
    }
    return static_cast<double>(sum * h);
}

inline double simpson(const std::function<double(double)>& f, double lo, double hi, long panels) {
    if (panels % 2 != 0) {
        ++panels;
    }
    const double h = (hi - lo) / static_cast<double>(panels);
    long double sum = f(lo) + f(hi);
    for (long i = 1; i < panels; ++i) {
        sum += (i % 2 == 1 ? 4.0L : 2.0L) * f(lo + h * static_cast<double>(i));
    }
    return static_cast<double>(sum * h / 3.0L);
}

// Row-major square matrix inverse by Gauss-Jordan elimination with partial pivoting.
inline std::vector<double> gauss_jordan_inverse(std::vector<double> m, std::size_t n) {
    std::vector<double> inv(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        inv[i * n + i] = 1.0;
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(m[r * n + c]) > std::abs(m[piv * n + c])) {
                piv = r;
            }
        }
        if (m[piv * n + c] == 0.0) {
            throw std::runtime_error("singular");
        }
        for (std::size_t j = 0; j < n; ++j) {
            std::swap(m[c * n + j], m[piv * n + j]);
            std::swap(inv[c * n + j], inv[piv * n + j]);
        }
        const double p = m[c * n + c];
        for (std::size_t j = 0; j < n; ++j) {
            m[c * n + j] /= p;
            inv[c * n + j] /= p;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) {
                continue;
            }
            const double f = m[r * n + c];
            for (std::size_t j = 0; j < n; ++j) {
                m[r * n + j] -= f * m[c * n + j];
                inv[r * n + j] -= f * inv[c * n + j];
            }
        }
    }
    return inv;
}

} // namespace oracle
