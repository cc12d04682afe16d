// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_SCHEDULE_HPP
#define SHORTDF_SCHEDULE_HPP

#include <string>
#include <vector>

namespace shortdf {

// Variance schedule tables. Timesteps are 1-indexed: betas[t-1] holds beta_t.
// alpha_bars are precomputed once so every module sees bit-identical
// coefficients. Index 0 is reserved for the clean-data boundary where the
// cumulative product is exactly 1.
struct NoiseSchedule {
    int total_timesteps = 0;  // T
    std::vector<double> betas;
    std::vector<double> alphas;      // 1 - beta_t
    std::vector<double> alpha_bars;  // running product of alphas
};

// Linear interpolation of beta over [beta_start, beta_end] inclusive.
// Requires T >= 1 and 0 < beta_start <= beta_end < 1.
NoiseSchedule make_linear_schedule(int total_timesteps, double beta_start, double beta_end);

// Cumulative product at timestep t; alpha_bar(s, 0) == 1 exactly.
double alpha_bar(const NoiseSchedule& s, int t);

}  // namespace shortdf

#endif
