// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_LOSSES_HPP
#define SHORTDF_LOSSES_HPP

#include <string>
#include <vector>

#include "shortdf/sample.hpp"

namespace shortdf {

// Noise loss form: per-sample Euclidean norm (the default) or mean squared
// error. Recorded in checkpoints so runs are self-describing.
enum class LossVariant { l2norm, mse };

std::string to_string(LossVariant v);
LossVariant loss_variant_from_string(const std::string& s);

struct LossBreakdown {
    double noise_loss = 0.0;
    double relax_loss = 0.0;
    double cond_rate = 0.0;  // fraction of batch samples with the relaxation condition true
    double total = 0.0;
    double lambda = 1.0;
};

// Batch mean of the per-sample L2 norm of (eps - eps_hat); MSE averages the
// squared differences over batch and features instead.
double noise_loss(const Sample& eps, const Sample& eps_hat, LossVariant v = LossVariant::l2norm);

// d(noise_loss)/d(eps_hat), same shape as eps_hat.
Sample noise_loss_grad(const Sample& eps, const Sample& eps_hat,
                       LossVariant v = LossVariant::l2norm);

// Per-sample L2 norm of (dist_k + edge - dist_t), zeroed where cond is false,
// batch-averaged. Gradients flow only through dist_t.
double relax_loss(const Sample& dist_t, const Sample& dist_k, const Sample& edge,
                  const std::vector<bool>& cond);

// d(relax_loss)/d(dist_t), same shape as dist_t; zero rows where cond is false.
Sample relax_loss_grad_dist_t(const Sample& dist_t, const Sample& dist_k, const Sample& edge,
                              const std::vector<bool>& cond);

double cond_rate(const std::vector<bool>& cond);

// total = lambda * noise + relax (relax already gated).
LossBreakdown total_loss(double noise, double relax, double lambda, double cond_fraction);

}  // namespace shortdf

#endif
