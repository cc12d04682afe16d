// SPDX-License-Identifier: Apache-2.0
#include "shortdf/schedule.hpp"

#include <stdexcept>
#include <string>

namespace shortdf {

NoiseSchedule make_linear_schedule(int total_timesteps, double beta_start, double beta_end) {
    if (total_timesteps < 1) {
        throw std::invalid_argument("make_linear_schedule: total_timesteps must be >= 1");
    }
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw std::invalid_argument(
            "make_linear_schedule: need 0 < beta_start <= beta_end < 1, got [" +
            std::to_string(beta_start) + ", " + std::to_string(beta_end) + "]");
    }

    NoiseSchedule s;
    s.total_timesteps = total_timesteps;
    s.betas.resize(total_timesteps);
    s.alphas.resize(total_timesteps);
    s.alpha_bars.resize(total_timesteps);

    double running = 1.0;
    for (int i = 0; i < total_timesteps; ++i) {
        double frac = total_timesteps == 1 ? 0.0
                                           : static_cast<double>(i) / (total_timesteps - 1);
        s.betas[i] = beta_start + (beta_end - beta_start) * frac;
        s.alphas[i] = 1.0 - s.betas[i];
        running *= s.alphas[i];
        s.alpha_bars[i] = running;
    }
    return s;
}

double alpha_bar(const NoiseSchedule& s, int t) {
    if (t == 0) return 1.0;
    if (t < 0 || t > s.total_timesteps) {
        throw std::invalid_argument("alpha_bar: timestep " + std::to_string(t) +
                                    " outside [0, " + std::to_string(s.total_timesteps) + "]");
    }
    return s.alpha_bars[static_cast<std::size_t>(t) - 1];
}

}  // namespace shortdf
