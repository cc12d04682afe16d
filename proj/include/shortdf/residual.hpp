// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_RESIDUAL_HPP
#define SHORTDF_RESIDUAL_HPP

#include <vector>

#include "shortdf/denoiser.hpp"
#include "shortdf/sample.hpp"
#include "shortdf/sampler.hpp"
#include "shortdf/schedule.hpp"

namespace shortdf {

// Residual bookkeeping along a reverse path k1 -> ... -> kn -> 0. The path
// residual is reported two ways: lhs walks the trajectory and measures the
// final estimation error directly; rhs telescopes the initial residual against
// the per-step residuals. They are reported side by side, not asserted equal.
struct ResidualReport {
    Sample initial_residual;
    std::vector<Sample> per_step_residuals;
    Sample path_residual_lhs;
    Sample path_residual_rhs;
};

// Per-timestep distance and edge evaluation for one (k, t) pair.
struct EdgeEvaluation {
    Sample edge;
    Sample dist_t;
    Sample dist_k;
    std::vector<bool> cond;
};

// One-jump estimation error at step t: x0 - estimate_x0(x_t, model(x_t,t), t).
Sample initial_residual(const Sample& x0, const Sample& x_t, int t, const Denoiser& model,
                        const NoiseSchedule& s);

// Residual picked up when moving from step k_i to a smaller step k_j along the
// deterministic reverse path:
//   sqrt(1-abar_kj)/sqrt(abar_kj) * (model(x_hat_kj, kj) - model(x_hat_ki, ki)).
Sample step_residual(const Sample& x_hat_ki, const Sample& x_hat_kj, int k_i, int k_j,
                     const Denoiser& model, const NoiseSchedule& s);

// Walks the full path from x_{k1} = forward_noise(x0, eps, k1) and fills all
// four report fields.
ResidualReport path_residual_report(const Sample& x0, const SamplingPath& path,
                                    const Denoiser& model, const NoiseSchedule& s,
                                    const Sample& eps);

// Structured text record for the diagnostics output: one `field mean_abs
// max_abs` line per report field, per-step residuals indexed.
std::string to_text_record(const ResidualReport& report);

// Extra reconstruction error at step k incurred by transporting the step-t
// estimate instead of the true clean data:
//   |x0 - x0_via_estimate_transform| - |x0 - x0_via_clean_transform|,
// both transforms driven by the same step-t noise prediction.
Sample edge_weight(const Sample& x0, const Sample& x_t, int t, int k,
                   const Denoiser& graph_model, const NoiseSchedule& s);

// Elementwise |initial_residual| at step t.
Sample dist(const Sample& x0, const Sample& x_noisy, int t, const Denoiser& model,
            const NoiseSchedule& s);

// Relaxation test per batch sample: mean(dist_t) > mean(dist_k) + mean(edge),
// reduced over feature dimensions. Strict comparison.
std::vector<bool> relaxation_cond(const Sample& dist_t, const Sample& dist_k,
                                  const Sample& edge);

// The two step-k transports and the edge weight, sharing one step-t graph
// model evaluation. x_k carries the clean data, x_k_hat the step-t estimate.
struct EdgeTerms {
    Sample x_k;
    Sample x_k_hat;
    Sample edge;
};

EdgeTerms edge_terms(const Sample& x0, const Sample& x_t, int t, int k,
                     const Denoiser& graph_model, const NoiseSchedule& s);

// Full relaxation evaluation with the three model roles: dist_t from the
// gradient-carrying model, edge from the delayed graph model, dist_k from the
// averaged model (the latter two act as constants).
EdgeEvaluation evaluate_edge(const Sample& x0, const Sample& x_t, int t, int k,
                             const Denoiser& dist_t_model, const Denoiser& dist_k_model,
                             const Denoiser& graph_model, const NoiseSchedule& s);

}  // namespace shortdf

#endif
