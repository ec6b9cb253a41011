#include "lageb/quadrature.hpp"

#include "lageb/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace lageb::quad {

namespace {

// 15-point Kronrod abscissae on [-1, 1] (nonnegative half) with the embedded
// 7-point Gauss rule on the odd-indexed nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> value;
    std::vector<double> error;
    std::vector<double> abs_value;
    double worst = 0.0;
};

class Workspace {
public:
    Workspace(std::size_t dim, const VectorFn& f) : dim_(dim), f_(f), buf_(dim) {}

    Panel evaluate(double lo, double hi) {
        Panel p;
        p.lo = lo;
        p.hi = hi;
        p.value.assign(dim_, 0.0);
        p.error.assign(dim_, 0.0);
        p.abs_value.assign(dim_, 0.0);
        std::vector<double> gauss(dim_, 0.0);

        const double center = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);

        auto accumulate = [&](double x, double wk, double wg) {
            f_(x, buf_);
            for (std::size_t j = 0; j < dim_; ++j) {
                const double v = buf_[j];
                if (!std::isfinite(v)) {
                    throw QuadratureError("non-finite integrand value at x = " + std::to_string(x));
                }
                p.value[j] += wk * v;
                p.abs_value[j] += wk * std::abs(v);
                gauss[j] += wg * v;
            }
        };

        accumulate(center, kWgk[7], kWg[3]);
        for (std::size_t i = 0; i < 7; ++i) {
            const double wg = (i % 2 == 1) ? kWg[i / 2] : 0.0;
            const double dx = half * kXgk[i];
            accumulate(center - dx, kWgk[i], wg);
            accumulate(center + dx, kWgk[i], wg);
        }

        p.worst = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
            p.value[j] *= half;
            p.abs_value[j] *= std::abs(half);
            p.error[j] = std::abs(p.value[j] - half * gauss[j]);
            p.worst = std::max(p.worst, p.error[j]);
        }
        return p;
    }

private:
    std::size_t dim_;
    const VectorFn& f_;
    std::vector<double> buf_;
};

struct VectorResult {
    std::vector<double> value;
    std::vector<double> error;
    std::vector<double> abs_value;
    int panels = 0;
};

bool converged(const std::vector<double>& value, const std::vector<double>& error,
               const Options& opts) {
    for (std::size_t j = 0; j < value.size(); ++j) {
        if (error[j] > std::max(opts.abs_tol, opts.rel_tol * std::abs(value[j]))) {
            return false;
        }
    }
    return true;
}

VectorResult adaptive(std::size_t dim, const VectorFn& f, double lo, double hi,
                      const Options& opts) {
    VectorResult out;
    out.value.assign(dim, 0.0);
    out.error.assign(dim, 0.0);
    out.abs_value.assign(dim, 0.0);
    if (lo == hi) {
        return out;
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        throw QuadratureError("finite-interval quadrature called with an infinite limit");
    }

    Workspace ws(dim, f);
    auto by_error = [](const Panel& a, const Panel& b) { return a.worst < b.worst; };

    std::vector<Panel> heap;
    std::vector<Panel> frozen;
    const int initial = std::max(1, opts.initial_panels);
    for (int i = 0; i < initial; ++i) {
        const double a = lo + (hi - lo) * i / initial;
        const double b = (i + 1 == initial) ? hi : lo + (hi - lo) * (i + 1) / initial;
        heap.push_back(ws.evaluate(a, b));
    }
    std::make_heap(heap.begin(), heap.end(), by_error);
    int panels = initial;

    auto totals = [&](VectorResult& r) {
        std::fill(r.value.begin(), r.value.end(), 0.0);
        std::fill(r.error.begin(), r.error.end(), 0.0);
        std::fill(r.abs_value.begin(), r.abs_value.end(), 0.0);
        for (const auto* group : {&heap, &frozen}) {
            for (const Panel& p : *group) {
                for (std::size_t j = 0; j < dim; ++j) {
                    r.value[j] += p.value[j];
                    r.error[j] += p.error[j];
                    r.abs_value[j] += p.abs_value[j];
                }
            }
        }
    };

    auto shift = [&](const Panel& p, double sign) {
        for (std::size_t j = 0; j < dim; ++j) {
            out.value[j] += sign * p.value[j];
            out.error[j] += sign * p.error[j];
            out.abs_value[j] += sign * p.abs_value[j];
        }
    };

    totals(out);
    for (int iter = 1;; ++iter) {
        if (iter % 64 == 0) {
            totals(out);
        }
        if (converged(out.value, out.error, opts)) {
            totals(out);
            if (converged(out.value, out.error, opts)) {
                break;
            }
        }
        if (heap.empty()) {
            throw QuadratureError("adaptive quadrature stalled at round-off level on [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        if (panels >= opts.max_panels) {
            throw QuadratureError("adaptive quadrature exceeded " +
                                  std::to_string(opts.max_panels) + " panels on [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        std::pop_heap(heap.begin(), heap.end(), by_error);
        Panel worst = std::move(heap.back());
        heap.pop_back();

        const double mid = 0.5 * (worst.lo + worst.hi);
        const double scale = std::max({1.0, std::abs(worst.lo), std::abs(worst.hi)});
        if (std::abs(worst.hi - worst.lo) <= 64.0 * std::numeric_limits<double>::epsilon() * scale) {
            frozen.push_back(std::move(worst));
            continue;
        }
        shift(worst, -1.0);
        Panel left = ws.evaluate(worst.lo, mid);
        Panel right = ws.evaluate(mid, worst.hi);
        shift(left, 1.0);
        shift(right, 1.0);
        heap.push_back(std::move(left));
        std::push_heap(heap.begin(), heap.end(), by_error);
        heap.push_back(std::move(right));
        std::push_heap(heap.begin(), heap.end(), by_error);
        ++panels;
    }
    out.panels = panels;
    return out;
}

VectorFn lift(const ScalarFn& f) {
    return [&f](double x, std::span<double> out) { out[0] = f(x); };
}

VectorResult adaptive_to_infinity(std::size_t dim, const VectorFn& f, double lo, double bulk_end,
                                  const Options& opts) {
    VectorResult total;
    total.value.assign(dim, 0.0);
    total.error.assign(dim, 0.0);
    total.abs_value.assign(dim, 0.0);

    auto add = [&](const VectorResult& r) {
        for (std::size_t j = 0; j < dim; ++j) {
            total.value[j] += r.value[j];
            total.error[j] += r.error[j];
            total.abs_value[j] += r.abs_value[j];
        }
        total.panels += r.panels;
    };

    double start = lo;
    if (bulk_end > lo) {
        Options bulk_opts = opts;
        bulk_opts.initial_panels = std::max(
            opts.initial_panels, std::min(64, static_cast<int>(std::ceil((bulk_end - lo) / 4.0))));
        add(adaptive(dim, f, lo, bulk_end, bulk_opts));
        start = bulk_end;
    }

    Options tail_opts = opts;
    tail_opts.abs_tol = opts.abs_tol / 8.0;
    double width = std::max(1.0, start - lo);
    constexpr int kMaxSegments = 64;
    for (int seg = 0; seg < kMaxSegments; ++seg) {
        const VectorResult r = adaptive(dim, f, start, start + width, tail_opts);
        add(r);
        bool negligible = true;
        for (std::size_t j = 0; j < dim; ++j) {
            const double threshold =
                std::max(0.01 * opts.abs_tol, 1e-16 * std::abs(total.value[j]));
            if (r.abs_value[j] > threshold) {
                negligible = false;
                break;
            }
        }
        if (negligible) {
            return total;
        }
        start += width;
        width *= 2.0;
    }
    throw QuadratureError("semi-infinite quadrature did not reach a negligible tail from x = " +
                          std::to_string(lo));
}

} // namespace

Result integrate_gk(const ScalarFn& f, double lo, double hi, const Options& opts) {
    const double sign = hi < lo ? -1.0 : 1.0;
    const VectorFn g = lift(f);
    const VectorResult r = adaptive(1, g, std::min(lo, hi), std::max(lo, hi), opts);
    return Result{sign * r.value[0], r.error[0], r.abs_value[0], r.panels};
}

double integrate(const ScalarFn& f, double lo, double hi, const Options& opts) {
    return integrate_gk(f, lo, hi, opts).value;
}

std::vector<double> integrate_many(std::size_t dim, const VectorFn& f, double lo, double hi,
                                   const Options& opts) {
    if (hi < lo) {
        std::vector<double> v = adaptive(dim, f, hi, lo, opts).value;
        for (double& x : v) {
            x = -x;
        }
        return v;
    }
    return adaptive(dim, f, lo, hi, opts).value;
}

double integrate_to_infinity(const ScalarFn& f, double lo, double bulk_end, const Options& opts) {
    const VectorFn g = lift(f);
    return adaptive_to_infinity(1, g, lo, bulk_end, opts).value[0];
}

std::vector<double> integrate_many_to_infinity(std::size_t dim, const VectorFn& f, double lo,
                                               double bulk_end, const Options& opts) {
    return adaptive_to_infinity(dim, f, lo, bulk_end, opts).value;
}

} // namespace lageb::quad
