// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_TRAINER_HPP
#define SHORTDF_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shortdf/denoiser.hpp"
#include "shortdf/losses.hpp"
#include "shortdf/rng.hpp"
#include "shortdf/sample.hpp"
#include "shortdf/schedule.hpp"

namespace shortdf {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_kind_from_string(const std::string& s);

// Run hyperparameters. Everything needed to rebuild the schedule and models
// lives here so a checkpoint is self-describing.
struct TrainConfig {
    double lambda = 1.0;            // noise-loss weight
    double ema_decay = 0.999;       // alpha
    long graph_sync_interval = 100;  // n
    long total_iterations = 1000;   // N
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    // The relaxation gradient scales with sqrt(1-abar_t)/sqrt(abar_t), which
    // spans two orders of magnitude across drawn t; fixed-rate SGD cannot be
    // stable under that spread, so adam is available for runs with the relax
    // term active.
    OptimizerKind optimizer = OptimizerKind::sgd;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    LossVariant loss_variant = LossVariant::l2norm;
    bool disable_relax = false;

    int total_timesteps = 1000;  // T
    double beta_start = 1e-4;
    double beta_end = 0.02;
    std::string schedule_kind = "linear";

    ModelConfig model;

    long log_interval = 1;
    long checkpoint_interval = 0;  // 0 = final checkpoint only
};

NoiseSchedule make_schedule(const TrainConfig& cfg);

// Base carries gradients; ema smooths it; graph lags ema by the sync interval
// and prices the edges.
struct ModelTriplet {
    std::unique_ptr<Denoiser> base;
    std::unique_ptr<Denoiser> ema;
    std::unique_ptr<Denoiser> graph;

    static ModelTriplet from_base(const Denoiser& prototype);
};

struct TrainLogRecord {
    long iteration = 0;
    LossBreakdown loss;
};

std::string to_json_line(const TrainLogRecord& rec);

struct TrainState {
    long iteration = 0;
    ModelTriplet models;
    ParamSet optimizer_state;  // plain SGD keeps none; serialized regardless
    RngStream noise_rng;       // stream "noise"
    RngStream step_rng;        // stream "steps"
    std::vector<TrainLogRecord> log;
};

TrainState init_train_state(const TrainConfig& cfg);

// Loss turned non-finite; carries the dump the run aborts with.
class TrainingAbort : public std::runtime_error {
public:
    TrainingAbort(long iteration, int t, int k, double cond_fraction);

    long iteration;
    int t;
    int k;
    double cond_fraction;
};

// t uniform on [2, T], k uniform on [1, t-1].
std::pair<int, int> sample_step_pair(RngStream& rng, int total_timesteps);

// One full optimization iteration: noise loss and dist_t via the base model,
// edge via the graph model, dist_k via the ema model, gated relaxation loss,
// gradient step on the base model only, ema update, periodic graph sync.
LossBreakdown train_step(TrainState& state, const Sample& x0_batch, const TrainConfig& cfg,
                         const NoiseSchedule& s);

// Reference loop with no graph terms at all: noise loss, gradient step, ema
// update, graph sync. Draws from the same streams (the step pair is drawn and
// ignored) so ablations share every noise realization.
LossBreakdown ddim_baseline_step(TrainState& state, const Sample& x0_batch,
                                 const TrainConfig& cfg, const NoiseSchedule& s);

// theta_ema <- alpha * theta_ema + (1 - alpha) * theta, elementwise.
void ema_update(ParamSet& ema, const ParamSet& base, double alpha);

struct TrainCallbacks {
    std::function<void(const TrainState&, const TrainLogRecord&)> on_log;
    std::function<void(const TrainState&)> on_checkpoint;
};

// Runs cfg.total_iterations steps over the dataset with wrap-around batching.
// use_baseline selects the plain noise-loss loop.
TrainState run_training(const TrainConfig& cfg, const Sample& dataset, const NoiseSchedule& s,
                        const TrainCallbacks& callbacks = {}, bool use_baseline = false);

// Continue a restored state up to cfg.total_iterations.
void continue_training(TrainState& state, const TrainConfig& cfg, const Sample& dataset,
                       const NoiseSchedule& s, const TrainCallbacks& callbacks = {},
                       bool use_baseline = false);

}  // namespace shortdf

#endif
