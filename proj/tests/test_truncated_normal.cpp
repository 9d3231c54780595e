#include <doctest.h>

#include <cmath>

#include "lpm/normal.hpp"
#include "lpm/rng.hpp"
#include "lpm/truncated_normal.hpp"
#include "oracles.hpp"

using lpm::truncated_normal_moments;

TEST_CASE("half-normal moments match the quadrature oracle and closed forms") {
    const auto m = truncated_normal_moments(0.0, 1.0, +1);
    CHECK(m.xi == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-12));
    CHECK(m.beta == doctest::Approx(1.0 - 2.0 / M_PI).epsilon(1e-12));

    const auto o = oracles::truncated_moments_quadrature(0.0, 1.0, +1);
    CHECK(m.xi == doctest::Approx(o.xi).epsilon(1e-11));
    CHECK(m.beta == doctest::Approx(o.beta).epsilon(1e-11));
}

TEST_CASE("mirror symmetry at zeta = 0") {
    const auto plus = truncated_normal_moments(0.0, 2.5, +1);
    const auto minus = truncated_normal_moments(0.0, 2.5, -1);
    CHECK(plus.xi == doctest::Approx(-minus.xi).epsilon(1e-14));
    CHECK(plus.beta == doctest::Approx(minus.beta).epsilon(1e-14));
}

TEST_CASE("far from the boundary the truncation is negligible") {
    const auto m = truncated_normal_moments(10.0, 1.0, +1);
    CHECK(m.xi == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(m.beta == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("moments match adaptive quadrature over a wide grid") {
    // Includes standardized means out to +-40; nothing may go non-finite.
    const double rhos[] = {0.25, 1.0, 4.0};
    for (int y : {+1, -1}) {
        for (double rho : rhos) {
            for (double t = -40.0; t <= 40.0; t += 2.5) {
                const double zeta = t * std::sqrt(rho);
                const auto got = truncated_normal_moments(zeta, rho, y);
                REQUIRE(std::isfinite(got.xi));
                REQUIRE(std::isfinite(got.beta));
                const auto want = oracles::truncated_moments_quadrature(zeta, rho, y);
                CHECK(std::fabs(got.xi - want.xi) < 1e-9);
                CHECK(std::fabs(got.beta - want.beta) < 1e-9);
            }
        }
    }
}

TEST_CASE("conditioning invariants: sign(xi - zeta) = y and beta <= rho") {
    lpm::Rng rng(99);
    for (int i = 0; i < 2000; ++i) {
        const double t = -35.0 + 70.0 * rng.uniform();
        const double rho = 0.05 + 4.0 * rng.uniform();
        const int y = rng.uniform() < 0.5 ? 1 : -1;
        const double zeta = t * std::sqrt(rho) * y;
        const auto m = truncated_normal_moments(zeta, rho, y);
        // Never wrong-signed; strictly signed while the pdf(t)/cdf(t)
        // correction is resolvable against ulp(zeta) (it falls below double
        // resolution once t is a few units past the boundary).
        CHECK((m.xi - zeta) * y >= 0.0);
        if (t < 7.0) CHECK((m.xi - zeta) * y > 0.0);
        CHECK(m.beta <= rho * (1.0 + 1e-12));
        CHECK(m.beta > 0.0);
    }
    for (double t : {38.0, 40.0, 120.0}) {
        const auto m = truncated_normal_moments(t, 1.0, +1);
        CHECK(std::isfinite(m.xi));
        CHECK(std::isfinite(m.beta));
        CHECK((m.xi - t) >= 0.0);
        CHECK(m.beta > 0.0);
        CHECK(m.beta <= 1.0 + 1e-12);
    }
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(truncated_normal_moments(0.0, 0.0, +1), std::domain_error);
    CHECK_THROWS_AS(truncated_normal_moments(0.0, -1.0, +1), std::domain_error);
    CHECK_THROWS_AS(truncated_normal_moments(0.0, 1.0, 0), std::domain_error);
}

TEST_CASE("normal helpers agree with std::erfc in easy ranges") {
    for (double x = -5.0; x <= 5.0; x += 0.25) {
        CHECK(lpm::norm_cdf(x) == doctest::Approx(0.5 * std::erfc(-x / std::sqrt(2.0))).epsilon(1e-14));
        CHECK(lpm::norm_logcdf(x) == doctest::Approx(std::log(lpm::norm_cdf(x))).epsilon(1e-11));
        const double p = lpm::norm_cdf(x);
        CHECK(lpm::norm_quantile(p) == doctest::Approx(x).epsilon(1e-9));
    }
    // erfcx branches agree where both are finite.
    for (double x = 10.0; x < 25.0; x += 0.7) {
        const double direct = std::exp(x * x) * std::erfc(x);
        CHECK(lpm::erfcx(x) == doctest::Approx(direct).epsilon(1e-11));
    }
    CHECK(std::isfinite(lpm::norm_logcdf(-40.0)));
    CHECK(lpm::norm_logcdf(-40.0) == doctest::Approx(-0.5 * 1600.0 - std::log(40.0) -
                                                     0.5 * std::log(2.0 * M_PI))
                                         .epsilon(1e-3));
}
