// SPDX-License-Identifier: Apache-2.0
#include "shortdf/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shortdf/diffusion.hpp"
#include "shortdf/rng.hpp"

namespace shortdf {

namespace {

void validate_path(const std::vector<int>& steps, int total_timesteps) {
    if (steps.empty()) throw std::invalid_argument("sampling path: empty step list");
    int prev = total_timesteps + 1;
    for (int k : steps) {
        if (k < 1 || k > total_timesteps) {
            throw std::invalid_argument("sampling path: step " + std::to_string(k) +
                                        " outside [1, " + std::to_string(total_timesteps) + "]");
        }
        if (k >= prev) {
            throw std::invalid_argument("sampling path: steps must be strictly decreasing");
        }
        prev = k;
    }
}

}  // namespace

SamplingPath make_step_schedule(int total_timesteps, int n_steps, StepStrategy strategy,
                                const std::vector<int>& explicit_steps) {
    if (total_timesteps < 1) {
        throw std::invalid_argument("make_step_schedule: total_timesteps must be >= 1");
    }
    SamplingPath path;
    path.strategy = strategy;

    if (strategy == StepStrategy::explicit_list) {
        path.steps = explicit_steps;
        validate_path(path.steps, total_timesteps);
        return path;
    }

    if (n_steps < 1 || n_steps > total_timesteps) {
        throw std::invalid_argument("make_step_schedule: n_steps must be in [1, T]");
    }
    if (n_steps == 1) {
        path.steps = {total_timesteps};
        return path;
    }

    path.steps.resize(n_steps);
    for (int i = 0; i < n_steps; ++i) {
        double frac = static_cast<double>(n_steps - 1 - i) / (n_steps - 1);
        if (strategy == StepStrategy::quadratic) frac = frac * frac;
        path.steps[i] =
            static_cast<int>(std::llround(1.0 + (total_timesteps - 1) * frac));
    }
    if (strategy == StepStrategy::quadratic) {
        // quadratic spacing can collide on coarse schedules; enforce strict
        // descent by pushing later entries down
        for (std::size_t i = 1; i < path.steps.size(); ++i) {
            if (path.steps[i] >= path.steps[i - 1]) path.steps[i] = path.steps[i - 1] - 1;
            if (path.steps[i] < 1) {
                throw std::invalid_argument(
                    "make_step_schedule: quadratic spacing cannot fit n_steps in [1, T]");
            }
        }
    }
    validate_path(path.steps, total_timesteps);
    return path;
}

Sample sample(const Denoiser& model, const NoiseSchedule& s, const SamplingPath& path,
              std::size_t batch, double sigma_n, std::uint64_t seed) {
    validate_path(path.steps, s.total_timesteps);
    if (batch == 0) throw std::invalid_argument("sample: batch must be positive");

    RngStream rng(seed, "sampler");
    Sample x = gaussian_sample(rng, batch, model.input_dim());
    x.image = model.image_shape();
    x.t = path.steps.front();

    for (std::size_t i = 0; i < path.steps.size(); ++i) {
        const int k_cur = path.steps[i];
        const int k_next = (i + 1 < path.steps.size()) ? path.steps[i + 1] : 0;

        Sample eps_hat = model.predict(x, k_cur);
        if (!all_finite(eps_hat)) {
            throw std::runtime_error("sample: non-finite trajectory at path index " +
                                     std::to_string(i) + " (step " + std::to_string(k_cur) +
                                     ")");
        }
        Sample x0_hat = estimate_x0(x, eps_hat, k_cur, s);
        if (!all_finite(x0_hat)) {
            throw std::runtime_error("sample: non-finite trajectory at path index " +
                                     std::to_string(i) + " (step " + std::to_string(k_cur) +
                                     ")");
        }
        // the terminal jump lands on clean data, where the noise budget is zero
        const double step_sigma = (k_next == 0) ? 0.0 : sigma_n;
        if (step_sigma > 0.0) {
            Sample fresh = gaussian_sample(rng, batch, model.input_dim());
            x = ddim_step(x0_hat, eps_hat, k_next, step_sigma, s, &fresh);
        } else {
            x = ddim_step(x0_hat, eps_hat, k_next, 0.0, s);
        }
    }
    return x;
}

}  // namespace shortdf
