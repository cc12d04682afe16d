// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_DIFFUSION_HPP
#define SHORTDF_DIFFUSION_HPP

#include "shortdf/sample.hpp"
#include "shortdf/schedule.hpp"

namespace shortdf {

// Forward noising: sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps, tagged with t.
Sample forward_noise(const Sample& x0, const Sample& eps, int t, const NoiseSchedule& s);

// Clean-sample estimate from a noisy sample and a noise prediction:
// (x_t - sqrt(1 - abar_t) * eps_hat) / sqrt(abar_t).
Sample estimate_x0(const Sample& x_t, const Sample& eps_hat, int t, const NoiseSchedule& s);

// Deterministic or partially stochastic transition to step k:
//   sqrt(abar_k) * x0_hat + sqrt(1 - abar_k - sigma_n^2) * eps_hat + sigma_n * fresh_noise
// k = 0 goes through abar_0 == 1, so the terminal jump returns x0_hat with no
// special case. fresh_noise is required iff sigma_n > 0.
Sample ddim_step(const Sample& x0_hat, const Sample& eps_hat, int k, double sigma_n,
                 const NoiseSchedule& s, const Sample* fresh_noise = nullptr);

}  // namespace shortdf

#endif
