// SPDX-License-Identifier: Apache-2.0
#include "shortdf/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace shortdf {

namespace {

void require_timestep(int t, const NoiseSchedule& s, const char* what) {
    if (t < 1 || t > s.total_timesteps) {
        throw std::invalid_argument(std::string(what) + ": timestep " + std::to_string(t) +
                                    " outside [1, " + std::to_string(s.total_timesteps) + "]");
    }
}

}  // namespace

Sample forward_noise(const Sample& x0, const Sample& eps, int t, const NoiseSchedule& s) {
    require_same_shape(x0, eps, "forward_noise");
    require_timestep(t, s, "forward_noise");
    require_finite(x0, "forward_noise(x0)");
    require_finite(eps, "forward_noise(eps)");

    const double abar = alpha_bar(s, t);
    const double signal = std::sqrt(abar);
    const double noise = std::sqrt(1.0 - abar);

    Sample out = x0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = signal * x0.data[i] + noise * eps.data[i];
    }
    out.t = t;
    return out;
}

Sample estimate_x0(const Sample& x_t, const Sample& eps_hat, int t, const NoiseSchedule& s) {
    require_same_shape(x_t, eps_hat, "estimate_x0");
    require_timestep(t, s, "estimate_x0");
    require_finite(x_t, "estimate_x0(x_t)");
    require_finite(eps_hat, "estimate_x0(eps_hat)");

    const double abar = alpha_bar(s, t);
    const double inv_signal = 1.0 / std::sqrt(abar);
    const double noise = std::sqrt(1.0 - abar);

    Sample out = x_t;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = (x_t.data[i] - noise * eps_hat.data[i]) * inv_signal;
    }
    out.t.reset();
    return out;
}

Sample ddim_step(const Sample& x0_hat, const Sample& eps_hat, int k, double sigma_n,
                 const NoiseSchedule& s, const Sample* fresh_noise) {
    require_same_shape(x0_hat, eps_hat, "ddim_step");
    if (k < 0 || k > s.total_timesteps) {
        throw std::invalid_argument("ddim_step: timestep " + std::to_string(k) +
                                    " outside [0, " + std::to_string(s.total_timesteps) + "]");
    }
    if (sigma_n < 0.0) throw std::domain_error("ddim_step: sigma_n must be >= 0");
    require_finite(x0_hat, "ddim_step(x0_hat)");
    require_finite(eps_hat, "ddim_step(eps_hat)");

    const double abar = alpha_bar(s, k);
    const double radicand = 1.0 - abar - sigma_n * sigma_n;
    if (radicand < 0.0) {
        throw std::domain_error("ddim_step: sigma_n^2 exceeds 1 - alpha_bar(" +
                                std::to_string(k) + ")");
    }
    if (sigma_n > 0.0 && fresh_noise == nullptr) {
        throw std::invalid_argument("ddim_step: fresh_noise required when sigma_n > 0");
    }
    if (fresh_noise != nullptr) require_same_shape(x0_hat, *fresh_noise, "ddim_step(fresh_noise)");

    const double signal = std::sqrt(abar);
    const double direction = std::sqrt(radicand);

    Sample out = x0_hat;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double v = signal * x0_hat.data[i] + direction * eps_hat.data[i];
        if (sigma_n > 0.0) v += sigma_n * fresh_noise->data[i];
        out.data[i] = v;
    }
    out.t = k;
    return out;
}

}  // namespace shortdf
