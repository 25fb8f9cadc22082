#include <cmath>
#include <numbers>

#include <stdexcept>

#include <doctest.h>

#include "chaos_spde/basis.hpp"
#include "chaos_spde/rng.hpp"
#include "support.hpp"

using chaos_spde::TimeBasis;
using test_support::simpson;

TEST_CASE("eval_basis oracles") {
    const TimeBasis b(1.0, 5);
    CHECK(b.eval(1, 0.37) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(b.eval(2, 0.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(b.eval(3, 0.5) == doctest::Approx(-1.41421356).epsilon(1e-8));
}

TEST_CASE("integral_basis oracles") {
    const TimeBasis b(1.0, 5);
    CHECK(b.integral(1, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(b.integral(2, 1.0)) < 1e-15);
    CHECK(b.integral(2, 0.5) == doctest::Approx(std::sqrt(2.0) / std::numbers::pi).epsilon(1e-12));
    const double quad = simpson([&](double s) { return b.eval(2, s); }, 0.0, 0.5, 20000);
    CHECK(std::abs(quad - b.integral(2, 0.5)) < 1e-10);
}

TEST_CASE("l1_norm_basis oracles") {
    const TimeBasis b(1.0, 1);
    CHECK(b.l1_norm(1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(b.l1_norm(2) == doctest::Approx(2.0 * std::sqrt(2.0) / std::numbers::pi).epsilon(1e-12));
    // j = 6 spans five half-periods, each contributing the same mass.
    const TimeBasis wide(1.0, 6);
    const double quad = simpson([&](double s) { return std::abs(wide.eval(6, s)); }, 0.0, 1.0, 200000);
    CHECK(wide.l1_norm(6) == doctest::Approx(quad).epsilon(1e-8));
    CHECK(wide.l1_norm(6) == doctest::Approx(0.90032).epsilon(1e-5));
}

TEST_CASE("l1_norm matches quadrature across horizons and indices") {
    for (double T : {0.5, 1.0, 2.0}) {
        const TimeBasis b(T, 12);
        for (std::size_t j = 1; j <= 12; ++j) {
            const double quad = simpson([&](double s) { return std::abs(b.eval(j, s)); }, 0.0, T, 240000);
            CHECK(b.l1_norm(j) == doctest::Approx(quad).epsilon(1e-7));
        }
    }
}

TEST_CASE("domain errors") {
    const TimeBasis b(1.0, 5);
    CHECK_THROWS_AS(b.eval(0, 0.5), std::out_of_range);
    CHECK_THROWS_AS(b.eval(6, 0.5), std::out_of_range);
    CHECK_THROWS_AS(b.eval(1, -0.1), std::out_of_range);
    CHECK_THROWS_AS(b.integral(1, 1.1), std::out_of_range);
    CHECK_THROWS_AS(b.l1_norm(0), std::out_of_range);
    CHECK_THROWS(TimeBasis(0.0, 3));
    CHECK_THROWS(TimeBasis(1.0, 0));
}

TEST_CASE("orthonormality under composite quadrature") {
    for (double T : {0.5, 1.0, 2.0}) {
        const std::size_t J = 50;
        const TimeBasis b(T, J);
        double worst = 0.0;
        for (std::size_t j = 1; j <= J; ++j)
            for (std::size_t k = j; k <= J; ++k) {
                const double g = simpson([&](double s) { return b.eval(j, s) * b.eval(k, s); }, 0.0, T, 2000);
                worst = std::max(worst, std::abs(g - (j == k ? 1.0 : 0.0)));
            }
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("integral matches quadrature at random (j, t)") {
    const TimeBasis b(1.0, 20);
    chaos_spde::CounterStream rng(99);
    for (int n = 0; n < 100; ++n) {
        const std::size_t j = 1 + rng.below(20);
        const double t = rng.uniform();
        const double quad = simpson([&](double s) { return b.eval(j, s); }, 0.0, t, 20000);
        CHECK(std::abs(quad - b.integral(j, t)) < 1e-10);
    }
}

TEST_CASE("Parseval for indicators") {
    const double t = 0.7;
    double previous = 0.0, sum = 0.0;
    const TimeBasis b(1.0, 200);
    for (std::size_t j = 1; j <= 200; ++j) {
        const double c = b.integral(j, t);
        sum += c * c;
        CHECK(sum >= previous);
        previous = sum;
    }
    CHECK(std::abs(sum - t) < 5e-3);
}
