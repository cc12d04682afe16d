// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "shortdf/schedule.hpp"

using namespace shortdf;

TEST_CASE("linear schedule interpolates beta inclusively") {
    const auto s = make_linear_schedule(1000, 1e-4, 0.02);
    CHECK(s.betas.front() == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(s.betas.back() == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(alpha_bar(s, 1) == doctest::Approx(0.9999).epsilon(1e-12));
}

TEST_CASE("two-step schedule products by hand") {
    const auto s = make_linear_schedule(2, 0.1, 0.2);
    CHECK(s.betas[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(s.betas[1] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(s.alpha_bars[0] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(s.alpha_bars[1] == doctest::Approx(0.72).epsilon(1e-12));
}

TEST_CASE("single-point schedule") {
    const auto s = make_linear_schedule(1, 0.5, 0.5);
    REQUIRE(s.betas.size() == 1);
    CHECK(s.betas[0] == 0.5);
    CHECK(s.alpha_bars[0] == 0.5);
}

TEST_CASE("construction rejects bad arguments") {
    CHECK_THROWS_AS(make_linear_schedule(0, 1e-4, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(make_linear_schedule(10, 0.0, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(make_linear_schedule(10, 1e-4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_linear_schedule(10, 0.2, 0.1), std::invalid_argument);
}

TEST_CASE("alpha_bar boundary and range") {
    const auto s = make_linear_schedule(2, 0.1, 0.2);
    CHECK(alpha_bar(s, 0) == 1.0);
    CHECK(alpha_bar(s, 2) == doctest::Approx(0.72).epsilon(1e-12));
    CHECK_THROWS_AS(alpha_bar(s, 3), std::invalid_argument);
    CHECK_THROWS_AS(alpha_bar(s, -1), std::invalid_argument);
}

TEST_CASE("alpha_bar strictly decreasing") {
    const auto s = make_linear_schedule(1000, 1e-4, 0.02);
    for (int t = 1; t <= 1000; ++t) {
        CHECK(alpha_bar(s, t) < alpha_bar(s, t - 1));
        CHECK(alpha_bar(s, t) > 0.0);
        CHECK(alpha_bar(s, t) < 1.0);
    }
}

TEST_CASE("stored products match brute-force recomputation") {
    const auto s = make_linear_schedule(1000, 1e-4, 0.02);
    double running = 1.0;
    for (int t = 1; t <= 1000; ++t) {
        running *= 1.0 - s.betas[t - 1];
        const double stored = alpha_bar(s, t);
        CHECK(std::fabs(stored - running) <= 1e-12 * std::fabs(running));
    }
}
