#include "lageb/error.hpp"
#include "lageb/laguerre.hpp"
#include "lageb/mixing.hpp"
#include "lageb/quadrature.hpp"
#include "lageb/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace lageb;

namespace {

std::vector<MixingModel> catalog() {
    return {MixingModel::uniform(), MixingModel::pareto(), MixingModel::beta(),
            MixingModel::exponential(), MixingModel::rayleigh(), MixingModel::weibull()};
}

double sample_mean(const MixingModel& m, double theta, int n, std::uint64_t seed, double* sd) {
    Stream s(seed);
    long double sum = 0.0L;
    long double sq = 0.0L;
    for (int i = 0; i < n; ++i) {
        const double x = m.sample(theta, s);
        sum += x;
        sq += static_cast<long double>(x) * x;
    }
    const long double mean = sum / n;
    *sd = static_cast<double>(std::sqrt((sq / n - mean * mean) / n));
    return static_cast<double>(mean);
}

} // namespace

TEST_CASE("family constants") {
    CHECK(MixingModel::uniform().recommended_a() == 0.0);
    CHECK(MixingModel::uniform().beta_exponent() == 0.0);
    CHECK(MixingModel::pareto().recommended_a() == 0.0);
    CHECK(MixingModel::pareto().beta_exponent() == 7.0 / 3.0);
    CHECK(MixingModel::beta(2.0).recommended_a() == 2.0);
    CHECK(MixingModel::exponential().recommended_a() == 2.0);
    CHECK(MixingModel::rayleigh().recommended_a() == 4.0);
    CHECK(MixingModel::weibull(1.5).recommended_a() == 3.0);
    for (const auto& m : catalog()) {
        if (m.kind() != MixingKind::Uniform && m.kind() != MixingKind::Pareto) {
            CHECK(m.beta_exponent() == 1.0);
        }
    }
    CHECK_THROWS_AS(MixingModel::pareto(2.0), InputError);
    CHECK_THROWS_AS(MixingModel::pareto(3.0, 1.0), InputError);
    CHECK_THROWS_AS(MixingModel::uniform(0.0, 1.0), InputError);
    CHECK_THROWS_AS(MixingModel::weibull(0.0), InputError);
}

TEST_CASE("conditional densities") {
    CHECK(MixingModel::exponential().density(0.0, 2.0) == 2.0);
    CHECK(MixingModel::uniform().density(1.5, 1.0) == 0.0);
    CHECK(MixingModel::pareto(3.0).density(2.0, 1.0) == doctest::Approx(0.1875).epsilon(1e-15));
    CHECK(MixingModel::pareto(3.0).density(0.5, 1.0) == 0.0);
    CHECK_THROWS_AS(MixingModel::uniform().density(1.0, 5.0), InputError);
    CHECK_THROWS_AS(MixingModel::pareto().density(1.0, 3.5), InputError);
    CHECK_THROWS_AS(MixingModel::exponential().density(1.0, 0.0), InputError);
}

TEST_CASE("densities integrate to one") {
    for (const auto& m : catalog()) {
        for (double theta : default_theta_grid(m)) {
            const double hi = m.kind() == MixingKind::Beta ? 1.0 : m.conditional_bulk_end(theta);
            quad::Options opts;
            opts.initial_panels = 16;
            double total = 0.0;
            if (m.kind() == MixingKind::Beta) {
                // x = 1 - s^2 removes the endpoint singularity at x = 1 when theta < 1
                total = quad::integrate([&](double s) { return 2.0 * s * m.density(1.0 - s * s, theta); }, 0.0, 1.0, opts);
            } else if (m.kind() == MixingKind::Pareto) {
                total = quad::integrate([&](double x) { return m.density(x, theta); }, theta, hi, opts);
                total += std::pow(theta / hi, m.shape()); // exact tail mass beyond hi
            } else {
                total = quad::integrate([&](double x) { return m.density(x, theta); }, 0.0, hi, opts);
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("samplers") {
    double sd = 0.0;
    const double m1 = sample_mean(MixingModel::exponential(), 1.0, 1000000, 11, &sd);
    CHECK(std::abs(m1 - 1.0) < 4 * sd);
    const double m2 = sample_mean(MixingModel::weibull(2.0), 1.0, 1000000, 12, &sd);
    CHECK(std::abs(m2 - 0.886226925452758) < 4 * sd);
    const double m3 = sample_mean(MixingModel::beta(2.0), 3.0, 1000000, 13, &sd);
    CHECK(std::abs(m3 - 0.4) < 4 * sd);
    const double m4 = sample_mean(MixingModel::pareto(3.0), 1.5, 1000000, 14, &sd);
    CHECK(std::abs(m4 - 1.5 * 3.0 / 2.0) < 4 * sd);
    const double m5 = sample_mean(MixingModel::rayleigh(), 2.0, 1000000, 15, &sd);
    CHECK(std::abs(m5 - std::sqrt(M_PI / 2.0 / 2.0)) < 4 * sd);

    Stream s(3);
    const auto uni = MixingModel::uniform();
    for (int i = 0; i < 10000; ++i) {
        const double x = uni.sample(2.0, s);
        CHECK_MESSAGE((x > 0.0 && x < 2.0), "uniform draw outside (0, 2)");
    }
}

TEST_CASE("U_k special values") {
    CHECK(std::abs(MixingModel::uniform().u(0, 1e-12)) < 1e-11);
    CHECK(std::abs(MixingModel::exponential().u(0, 2.0)) < 1e-15);
    for (int k : {0, 3, 7}) {
        CHECK(MixingModel::beta(2.5).u(k, 1.0) == 0.0);
    }
    CHECK(std::abs(MixingModel::rayleigh().u(0, 4.0)) < 1e-15);
    CHECK_THROWS_AS(MixingModel::beta().u(0, 1.5), InputError);
    CHECK_THROWS_AS(MixingModel::exponential().u(0, 0.0), InputError);
}

TEST_CASE("U_k formulas against series-based references") {
    const double h = 1e-5;
    auto dphi = [&](int k, double a, double x) {
        return (oracle::laguerre_fn_series(k, a, x + h) - oracle::laguerre_fn_series(k, a, x - h)) / (2 * h);
    };
    for (int k : {0, 2, 5}) {
        for (double x : {0.2, 0.9, 3.0}) {
            CHECK(MixingModel::exponential().u(k, x) == doctest::Approx(dphi(k, 2.0, x)).epsilon(1e-7));
            CHECK(MixingModel::rayleigh().u(k, x) == doctest::Approx(dphi(k, 4.0, x) / x).epsilon(1e-7));
            CHECK(MixingModel::weibull(1.5).u(k, x) ==
                  doctest::Approx(dphi(k, 3.0, x) / (1.5 * std::sqrt(x))).epsilon(1e-7));
            const double uni = oracle::simpson([&](double z) { return oracle::laguerre_fn_series(k, 0.0, z); }, 0.0, x, 20000) +
                               x * oracle::laguerre_fn_series(k, 0.0, x);
            CHECK(MixingModel::uniform(0.5, 5.0).u(k, x) == doctest::Approx(uni).epsilon(1e-9));
            // Pareto tail on [x', 400]; beyond that the integrand is below e^{-190}.
            const double xp = x + 1.0;
            const double tail = oracle::simpson(
                [&](double z) { return std::pow(z, -4.0) * oracle::laguerre_fn_series(k, 0.0, z); }, xp,
                400.0, 400000);
            const double pareto_ref = -std::pow(xp, 4.0) * tail + xp * oracle::laguerre_fn_series(k, 0.0, xp);
            CHECK(MixingModel::pareto(3.0).u(k, xp) == doctest::Approx(pareto_ref).epsilon(1e-8));
        }
        const double xb = 0.35;
        const double beta_ref = (2.0 - 1.0) * (1 - xb) * oracle::laguerre_fn_series(k, 2.0, xb) / xb + (1 - xb) * dphi(k, 2.0, xb);
        CHECK(MixingModel::beta(2.0).u(k, xb) == doctest::Approx(beta_ref).epsilon(1e-7));
    }
}

TEST_CASE("u_matrix sweep matches pointwise evaluation") {
    std::vector<double> xs = {0.05, 0.3, 0.3, 0.71, 1.2, 2.9};
    for (const auto& m : catalog()) {
        std::vector<double> pts = xs;
        if (m.kind() == MixingKind::Beta) {
            for (double& x : pts) {
                x /= 3.0;
            }
        }
        const int M = 6;
        const Eigen::MatrixXd U = m.u_matrix(pts, M);
        std::vector<double> row(M);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            m.u_row(pts[i], row);
            for (int k = 0; k < M; ++k) {
                CHECK(U(static_cast<Eigen::Index>(i), k) == doctest::Approx(row[k]).epsilon(1e-9).scale(1.0));
                CHECK(row[k] == doctest::Approx(m.u(k, pts[i])).epsilon(1e-9).scale(1.0));
            }
        }
        const std::vector<double> unsorted = {1.0, 0.5};
        CHECK_THROWS_AS(m.u_matrix(unsorted, 2), InputError);
    }
}

TEST_CASE("U identity holds and the checker detects a corrupted U") {
    CHECK(verify_u_identity(MixingModel::exponential(), 0, 1.0) < 1e-6);
    CHECK(verify_u_identity(MixingModel::uniform(), 3, 2.0) < 1e-6);
    CHECK(verify_u_identity(MixingModel::pareto(3.0), 2, 1.5) < 1e-6);
    for (const auto& m : catalog()) {
        const auto grid = default_theta_grid(m);
        CHECK(grid.size() == 5);
        for (double theta : grid) {
            CHECK(verify_u_identity(m, 4, theta) < 1e-6);
        }
        CHECK(verify_u_identity(m, 1, grid[2], -1.0) > 1e-3);
    }
    CHECK_THROWS_AS(verify_u_identity(MixingModel::uniform(), 1, 4.0), InputError);
}

TEST_CASE("marginal expectation of U_k equals the Psi projection") {
    // Exponential mixing with a Gamma(2, 1) prior: p = 2 / (1+x)^3, Psi = 6 / (1+x)^4.
    const auto m = MixingModel::exponential();
    for (int k = 0; k <= 4; ++k) {
        const double lhs = oracle::simpson([&](double x) { return m.u(k, std::max(x, 1e-12)) * 2.0 / std::pow(1 + x, 3); }, 0.0, 120.0, 240000);
        const double rhs = oracle::simpson([&](double x) { return oracle::laguerre_fn_series(k, 2.0, x) * 6.0 / std::pow(1 + x, 4); }, 0.0, 120.0, 240000);
        CHECK(std::abs(lhs - rhs) < 1e-5);
    }
    // Uniform mixing on [0.5, 3] with a uniform prior: Psi(x) = (3 - max(x, 0.5)) / 2.5.
    const auto uni = MixingModel::uniform(0.5, 3.0);
    auto p = [](double x) { return std::log(3.0 / std::max(x, 0.5)) / 2.5; };
    auto psi = [](double x) { return (3.0 - std::max(x, 0.5)) / 2.5; };
    for (int k = 0; k <= 4; ++k) {
        const double lhs = oracle::simpson([&](double x) { return x > 0 && x < 3 ? uni.u(k, x) * p(x) : 0.0; }, 0.0, 0.5, 2000) +
                           oracle::simpson([&](double x) { return x > 0 && x < 3 ? uni.u(k, x) * p(x) : 0.0; }, 0.5, 3.0, 10000);
        const double rhs = oracle::simpson([&](double x) { return oracle::laguerre_fn_series(k, 0.0, x) * psi(x); }, 0.0, 0.5, 2000) +
                           oracle::simpson([&](double x) { return oracle::laguerre_fn_series(k, 0.0, x) * psi(x); }, 0.5, 3.0, 10000);
        CHECK(std::abs(lhs - rhs) < 1e-5);
    }
}

TEST_CASE("u_norm") {
    CHECK(u_norm(MixingModel::exponential(), 0) == doctest::Approx(0.25).epsilon(1e-10));
    const double ref = oracle::simpson([](double x) {
        const double d = std::exp(-x / 2) * (1 - x / 2) / std::sqrt(2.0);
        return d * d; }, 0.0, 80.0, 200000);
    CHECK(u_norm(MixingModel::exponential(), 0) == doctest::Approx(ref).epsilon(1e-9));
    // Beta norms grow at most linearly in k.
    std::vector<double> lk;
    std::vector<double> ln;
    for (int k : {1, 2, 4, 8, 16, 32}) {
        lk.push_back(std::log(k));
        ln.push_back(std::log(u_norm(MixingModel::beta(2.0), k)));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lk.size(); ++i) { mx += lk[i]; my += ln[i]; }
    mx /= lk.size(); my /= ln.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lk.size(); ++i) { sxy += (lk[i] - mx) * (ln[i] - my); sxx += (lk[i] - mx) * (lk[i] - mx); }
    CHECK(sxy / sxx <= 1.3);
}
