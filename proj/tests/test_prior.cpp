#include "lageb/error.hpp"
#include "lageb/mixing.hpp"
#include "lageb/prior.hpp"
#include "lageb/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace lageb;

TEST_CASE("prior densities") {
    CHECK(PriorModel::uniform(1, 2).density(1.5) == 1.0);
    CHECK(PriorModel::uniform(1, 2).density(2.5) == 0.0);
    CHECK(PriorModel::gamma(2, 1).density(0.0) == 0.0);
    CHECK(PriorModel::gamma(2, 1).density(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    const auto tg = PriorModel::truncated_gamma(2, 1, 0.5, 3);
    const double mass = oracle::simpson([](double t) { return t * std::exp(-t); }, 0.5, 3.0, 20000);
    CHECK(tg.truncation_mass() == doctest::Approx(mass).epsilon(1e-12));
    CHECK(tg.density(1.0) == doctest::Approx(std::exp(-1.0) / mass).epsilon(1e-12));
    CHECK(tg.density(0.25) == 0.0);
    CHECK(tg.density(3.5) == 0.0);
}

TEST_CASE("prior densities integrate to one") {
    CHECK(oracle::simpson([](double t) { return PriorModel::gamma(2, 1).density(t); }, 0.0, 60.0, 60000) ==
          doctest::Approx(1.0).epsilon(1e-8));
    CHECK(oracle::simpson([](double t) { return PriorModel::gamma(3.5, 2).density(t); }, 0.0, 60.0, 60000) ==
          doctest::Approx(1.0).epsilon(1e-8));
    const auto tg = PriorModel::truncated_gamma(2, 1, 0.5, 3);
    CHECK(oracle::simpson([&](double t) { return tg.density(t); }, 0.5, 3.0, 20000) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("prior sampling") {
    Stream s(42);
    const auto u = PriorModel::uniform(1, 2);
    const auto tg = PriorModel::truncated_gamma(2, 1, 0.5, 3);
    for (int i = 0; i < 20000; ++i) {
        const double a = u.sample(s);
        const double b = tg.sample(s);
        CHECK_MESSAGE((a >= 1 && a <= 2), "uniform draw off support");
        CHECK_MESSAGE((b >= 0.5 && b <= 3), "truncated draw off support");
    }
    // narrow window far in the tail exercises the inverse-CDF fallback
    const auto far = PriorModel::truncated_gamma(2, 1, 40, 41);
    for (int i = 0; i < 100; ++i) {
        const double t = far.sample(s);
        CHECK((t >= 40 && t <= 41));
    }
}

TEST_CASE("gamma prior moments and deciles") {
    const int n = 1000000;
    Stream s(7);
    const auto g = PriorModel::gamma(2, 1);
    std::vector<double> draws(n);
    long double sum = 0;
    for (double& d : draws) {
        d = g.sample(s);
        sum += d;
    }
    const double mean = static_cast<double>(sum / n);
    CHECK(std::abs(mean - 2.0) < 4 * std::sqrt(2.0 / n));
    std::sort(draws.begin(), draws.end());
    // Gamma(2, 1) CDF is 1 - (1 + t) e^{-t}.
    for (int d = 1; d <= 9; ++d) {
        const double t = draws[static_cast<std::size_t>(n * d / 10)];
        CHECK(std::abs(1 - (1 + t) * std::exp(-t) - d / 10.0) < 0.005);
    }
}

TEST_CASE("default priors fit their families") {
    for (const auto& m : {MixingModel::uniform(), MixingModel::pareto(), MixingModel::beta(), MixingModel::exponential(),
                          MixingModel::rayleigh(), MixingModel::weibull()}) {
        CHECK(prior_fits_domain(default_prior(m), m));
    }
    CHECK_FALSE(prior_fits_domain(PriorModel::uniform(1, 4), MixingModel::pareto(3, 3)));
    CHECK_FALSE(prior_fits_domain(PriorModel::gamma(2, 1), MixingModel::uniform()));
    CHECK_THROWS_AS(PriorModel::uniform(2, 1), InputError);
    CHECK_THROWS_AS(PriorModel::gamma(0, 1), InputError);
}
