// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "shortdf/diffusion.hpp"
#include "shortdf/rng.hpp"

using namespace shortdf;

namespace {

Sample one(double v) {
    Sample s = Sample::zeros(1, 1);
    s.data[0] = v;
    return s;
}

// hand-built single-step schedule with a chosen cumulative product
NoiseSchedule fixed_abar(double abar) {
    NoiseSchedule s;
    s.total_timesteps = 1;
    s.betas = {1.0 - abar};
    s.alphas = {abar};
    s.alpha_bars = {abar};
    return s;
}

bool close_rel(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace

TEST_CASE("forward_noise with a zero-noise coefficient returns x0 exactly") {
    const auto s = fixed_abar(1.0);
    const Sample out = forward_noise(one(3.25), one(17.0), 1, s);
    CHECK(out.data[0] == 3.25);
    CHECK(out.t == 1);
}

TEST_CASE("forward_noise substitution value") {
    const auto s = fixed_abar(0.25);
    const Sample out = forward_noise(one(1.0), one(2.0), 1, s);
    CHECK(out.data[0] == doctest::Approx(2.2320508075688772).epsilon(1e-12));
}

TEST_CASE("forward_noise with zero noise scales the signal only") {
    const auto s = fixed_abar(0.49);
    const Sample out = forward_noise(one(2.0), one(0.0), 1, s);
    CHECK(out.data[0] == doctest::Approx(std::sqrt(0.49) * 2.0).epsilon(1e-15));
}

TEST_CASE("estimate_x0 inverts the substitution") {
    const auto s = fixed_abar(0.25);
    const Sample out = estimate_x0(one(2.2320508075688772), one(2.0), 1, s);
    CHECK(out.data[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("estimate_x0 is linear in the prediction error") {
    const auto s = fixed_abar(0.36);
    const double delta = 0.37;
    const Sample x_t = forward_noise(one(1.5), one(-0.8), 1, s);
    const Sample exact = estimate_x0(x_t, one(-0.8), 1, s);
    const Sample shifted = estimate_x0(x_t, one(-0.8 + delta), 1, s);
    const double coeff = std::sqrt(1.0 - 0.36) / std::sqrt(0.36);
    CHECK(shifted.data[0] == doctest::Approx(exact.data[0] - coeff * delta).epsilon(1e-12));
}

TEST_CASE("round-trip estimate_x0(forward_noise(...)) over random draws") {
    const auto s = make_linear_schedule(100, 1e-3, 0.2);
    RngStream rng(11, "roundtrip");
    for (int i = 0; i < 1000; ++i) {
        const int t = rng.uniform_int(1, 100);
        Sample x0 = gaussian_sample(rng, 4, 3);
        Sample eps = gaussian_sample(rng, 4, 3);
        const Sample x_t = forward_noise(x0, eps, t, s);
        const Sample back = estimate_x0(x_t, eps, t, s);
        for (std::size_t j = 0; j < x0.data.size(); ++j) {
            CHECK(close_rel(back.data[j], x0.data[j], 1e-6));
        }
    }
}

TEST_CASE("ddim_step to k = t with the estimate pair reconstructs x_t") {
    const auto s = make_linear_schedule(50, 1e-3, 0.2);
    RngStream rng(13, "inverse-pair");
    for (int i = 0; i < 500; ++i) {
        const int t = rng.uniform_int(1, 50);
        Sample x_t = gaussian_sample(rng, 3, 2);
        Sample eps_hat = gaussian_sample(rng, 3, 2);  // arbitrary prediction
        const Sample x0_hat = estimate_x0(x_t, eps_hat, t, s);
        const Sample rebuilt = ddim_step(x0_hat, eps_hat, t, 0.0, s);
        for (std::size_t j = 0; j < x_t.data.size(); ++j) {
            CHECK(close_rel(rebuilt.data[j], x_t.data[j], 1e-6));
        }
    }
}

TEST_CASE("ddim_step to the clean-data boundary returns the estimate exactly") {
    const auto s = make_linear_schedule(10, 1e-3, 0.2);
    const Sample out = ddim_step(one(0.73), one(42.0), 0, 0.0, s);
    CHECK(out.data[0] == 0.73);
    CHECK(out.t == 0);
}

TEST_CASE("ddim_step substitution value") {
    const auto s = fixed_abar(0.72);
    const Sample out = ddim_step(one(1.0), one(0.5), 1, 0.0, s);
    // sqrt(0.72)*1 + sqrt(0.28)*0.5
    CHECK(out.data[0] == doctest::Approx(1.1131032685303162).epsilon(1e-12));
}

TEST_CASE("ddim_step is deterministic with sigma_n = 0") {
    const auto s = make_linear_schedule(20, 1e-3, 0.2);
    RngStream rng(3, "det");
    const Sample x0_hat = gaussian_sample(rng, 8, 2);
    const Sample eps_hat = gaussian_sample(rng, 8, 2);
    const Sample a = ddim_step(x0_hat, eps_hat, 7, 0.0, s);
    const Sample b = ddim_step(x0_hat, eps_hat, 7, 0.0, s);
    CHECK(a.data == b.data);
}

TEST_CASE("ddim_step rejects a noise budget beyond the schedule") {
    const auto s = fixed_abar(0.72);  // 1 - abar = 0.28
    CHECK_THROWS_AS(ddim_step(one(1.0), one(0.5), 1, 0.6, s), std::domain_error);
}

TEST_CASE("ddim_step requires fresh noise when stochastic") {
    const auto s = fixed_abar(0.5);
    CHECK_THROWS_AS(ddim_step(one(1.0), one(0.5), 1, 0.1, s), std::invalid_argument);
    const Sample fresh = one(0.25);
    const Sample out = ddim_step(one(1.0), one(0.5), 1, 0.1, s, &fresh);
    const double expect = std::sqrt(0.5) + std::sqrt(0.5 - 0.01) * 0.5 + 0.1 * 0.25;
    CHECK(out.data[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("shape mismatches are usage errors") {
    const auto s = fixed_abar(0.5);
    CHECK_THROWS_AS(forward_noise(Sample::zeros(1, 2), Sample::zeros(1, 3), 1, s),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_x0(Sample::zeros(2, 2), Sample::zeros(1, 2), 1, s),
                    std::invalid_argument);
}

TEST_CASE("non-finite inputs are rejected at the boundary") {
    const auto s = fixed_abar(0.5);
    Sample bad = one(std::nan(""));
    CHECK_THROWS_AS(forward_noise(bad, one(0.0), 1, s), std::invalid_argument);
}
