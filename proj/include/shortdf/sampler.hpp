// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_SAMPLER_HPP
#define SHORTDF_SAMPLER_HPP

#include <cstdint>
#include <vector>

#include "shortdf/denoiser.hpp"
#include "shortdf/sample.hpp"
#include "shortdf/schedule.hpp"

namespace shortdf {

enum class StepStrategy { uniform, quadratic, explicit_list };

// Strictly decreasing timesteps k1 > ... > kn >= 1; the terminal jump to 0 is
// implicit. The number of network evaluations during sampling equals
// steps.size().
struct SamplingPath {
    std::vector<int> steps;
    StepStrategy strategy = StepStrategy::uniform;
};

// uniform: n_steps values evenly spaced over [1, T] including T, descending.
// quadratic: spacing grows quadratically toward T.
// explicit_list: validates the caller's list (strictly decreasing, in range).
SamplingPath make_step_schedule(int total_timesteps, int n_steps, StepStrategy strategy,
                                const std::vector<int>& explicit_steps = {});

// Iterated deterministic (sigma_n = 0) or partially stochastic generation:
// start from standard normal noise at the first step, refine the clean-sample
// estimate along the path, finish with the terminal jump to 0.
Sample sample(const Denoiser& model, const NoiseSchedule& s, const SamplingPath& path,
              std::size_t batch, double sigma_n, std::uint64_t seed);

}  // namespace shortdf

#endif
