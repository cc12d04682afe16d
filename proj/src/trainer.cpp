// SPDX-License-Identifier: Apache-2.0
#include "shortdf/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "shortdf/diffusion.hpp"
#include "shortdf/residual.hpp"

namespace shortdf {

NoiseSchedule make_schedule(const TrainConfig& cfg) {
    if (cfg.schedule_kind != "linear") {
        throw std::invalid_argument("unknown schedule kind '" + cfg.schedule_kind + "'");
    }
    return make_linear_schedule(cfg.total_timesteps, cfg.beta_start, cfg.beta_end);
}

std::string to_string(OptimizerKind k) {
    return k == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw std::invalid_argument("unknown optimizer '" + s + "' (expected sgd or adam)");
}

ModelTriplet ModelTriplet::from_base(const Denoiser& prototype) {
    ModelTriplet triplet;
    triplet.base = prototype.clone();
    triplet.ema = prototype.clone();
    triplet.graph = prototype.clone();
    return triplet;
}

std::string to_json_line(const TrainLogRecord& rec) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "{\"cond_rate\":%.17g,\"iteration\":%ld,\"noise_loss\":%.17g,"
                  "\"relax_loss\":%.17g,\"total\":%.17g}",
                  rec.loss.cond_rate, rec.iteration, rec.loss.noise_loss, rec.loss.relax_loss,
                  rec.loss.total);
    return buf;
}

TrainState init_train_state(const TrainConfig& cfg) {
    if (cfg.total_timesteps < 2) {
        throw std::invalid_argument("train config: total_timesteps must be >= 2");
    }
    if (cfg.batch_size == 0) throw std::invalid_argument("train config: batch_size must be > 0");
    if (!(cfg.ema_decay > 0.0 && cfg.ema_decay <= 1.0)) {
        throw std::invalid_argument("train config: ema_decay must be in (0, 1]");
    }
    if (cfg.graph_sync_interval < 1) {
        throw std::invalid_argument("train config: graph_sync_interval must be >= 1");
    }

    TrainState state;
    auto prototype = build_denoiser(cfg.model, cfg.seed);
    state.models = ModelTriplet::from_base(*prototype);
    state.noise_rng = RngStream(cfg.seed, "noise");
    state.step_rng = RngStream(cfg.seed, "steps");
    return state;
}

TrainingAbort::TrainingAbort(long iteration_, int t_, int k_, double cond_fraction_)
    : std::runtime_error("training aborted: non-finite loss at iteration " +
                         std::to_string(iteration_) + " (t=" + std::to_string(t_) +
                         ", k=" + std::to_string(k_) +
                         ", cond_rate=" + std::to_string(cond_fraction_) + ")"),
      iteration(iteration_),
      t(t_),
      k(k_),
      cond_fraction(cond_fraction_) {}

std::pair<int, int> sample_step_pair(RngStream& rng, int total_timesteps) {
    if (total_timesteps < 2) {
        throw std::invalid_argument("sample_step_pair: need total_timesteps >= 2");
    }
    const int t = rng.uniform_int(2, total_timesteps);
    const int k = rng.uniform_int(1, t - 1);
    return {t, k};
}

void ema_update(ParamSet& ema, const ParamSet& base, double alpha) {
    require_same_layout(ema, base, "ema_update");
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("ema_update: alpha must be in [0, 1]");
    }
    for (std::size_t i = 0; i < ema.size(); ++i) {
        auto& dst = ema[i].data;
        const auto& src = base[i].data;
        for (std::size_t j = 0; j < dst.size(); ++j) {
            dst[j] = alpha * dst[j] + (1.0 - alpha) * src[j];
        }
    }
}

namespace {

void init_adam_state(TrainState& state) {
    const ParamSet& params = state.models.base->params();
    state.optimizer_state.clear();
    for (const auto& arr : params) {
        state.optimizer_state.push_back(
            {"m:" + arr.name, arr.shape, std::vector<double>(arr.data.size(), 0.0)});
        state.optimizer_state.push_back(
            {"v:" + arr.name, arr.shape, std::vector<double>(arr.data.size(), 0.0)});
    }
}

// Applies one optimizer update to the base parameters. The update count for
// adam's bias correction is the iteration about to complete, so resumed runs
// continue the same trajectory.
void apply_update(TrainState& state, const TrainConfig& cfg, const ParamSet& grads) {
    ParamSet& params = state.models.base->params();
    if (cfg.optimizer == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& dst = params[i].data;
            const auto& g = grads[i].data;
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] -= cfg.learning_rate * g[j];
        }
        return;
    }

    if (state.optimizer_state.empty()) init_adam_state(state);
    const double step = static_cast<double>(state.iteration + 1);
    const double bias1 = 1.0 - std::pow(cfg.adam_beta1, step);
    const double bias2 = 1.0 - std::pow(cfg.adam_beta2, step);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = state.optimizer_state[2 * i].data;
        auto& v = state.optimizer_state[2 * i + 1].data;
        auto& dst = params[i].data;
        const auto& g = grads[i].data;
        for (std::size_t j = 0; j < dst.size(); ++j) {
            m[j] = cfg.adam_beta1 * m[j] + (1.0 - cfg.adam_beta1) * g[j];
            v[j] = cfg.adam_beta2 * v[j] + (1.0 - cfg.adam_beta2) * g[j] * g[j];
            const double m_hat = m[j] / bias1;
            const double v_hat = v[j] / bias2;
            dst[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    }
}

void finish_iteration(TrainState& state, const TrainConfig& cfg) {
    ema_update(state.models.ema->params(), state.models.base->params(), cfg.ema_decay);
    ++state.iteration;
    if (state.iteration % cfg.graph_sync_interval == 0) {
        state.models.graph->params() = state.models.ema->params();
    }
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

LossBreakdown train_step(TrainState& state, const Sample& x0_batch, const TrainConfig& cfg,
                         const NoiseSchedule& s) {
    const auto [t, k] = sample_step_pair(state.step_rng, cfg.total_timesteps);
    Sample eps = gaussian_sample(state.noise_rng, x0_batch.batch, x0_batch.dims);
    Sample x_t = forward_noise(x0_batch, eps, t, s);

    Denoiser::Trace trace;
    Sample eps_hat = state.models.base->forward(x_t, t, trace);
    const double noise = noise_loss(eps, eps_hat, cfg.loss_variant);
    if (!std::isfinite(noise)) {
        throw TrainingAbort(state.iteration + 1, t, k, 0.0);
    }

    double relax = 0.0;
    std::vector<bool> cond;
    Sample dist_t, dist_k, edge, residual;
    if (!cfg.disable_relax) {
        Sample x0_hat = estimate_x0(x_t, eps_hat, t, s);
        residual = Sample::zeros(x0_batch.batch, x0_batch.dims);
        dist_t = Sample::zeros(x0_batch.batch, x0_batch.dims);
        for (std::size_t i = 0; i < residual.data.size(); ++i) {
            residual.data[i] = x0_batch.data[i] - x0_hat.data[i];
            dist_t.data[i] = std::fabs(residual.data[i]);
        }

        EdgeTerms terms = edge_terms(x0_batch, x_t, t, k, *state.models.graph, s);
        dist_k = dist(x0_batch, terms.x_k, k, *state.models.ema, s);
        edge = std::move(terms.edge);
        cond = relaxation_cond(dist_t, dist_k, edge);
        relax = relax_loss(dist_t, dist_k, edge, cond);
    }

    LossBreakdown breakdown = total_loss(noise, relax, cfg.lambda, cond_rate(cond));
    if (!std::isfinite(breakdown.total) || !std::isfinite(relax)) {
        throw TrainingAbort(state.iteration + 1, t, k, breakdown.cond_rate);
    }

    // cotangent w.r.t. the base model's prediction
    Sample grad_out = noise_loss_grad(eps, eps_hat, cfg.loss_variant);
    for (auto& v : grad_out.data) v *= cfg.lambda;

    if (!cfg.disable_relax && breakdown.cond_rate > 0.0) {
        Sample grad_dist_t = relax_loss_grad_dist_t(dist_t, dist_k, edge, cond);
        // dist_t = |x0 - x0_hat| and d(x0 - x0_hat)/d(eps_hat) is the
        // signal-to-noise coefficient at t
        const double abar = alpha_bar(s, t);
        const double coeff = std::sqrt(1.0 - abar) / std::sqrt(abar);
        for (std::size_t i = 0; i < grad_out.data.size(); ++i) {
            grad_out.data[i] += grad_dist_t.data[i] * sign(residual.data[i]) * coeff;
        }
    }

    ParamSet grads = zeros_like(state.models.base->params());
    state.models.base->backward(trace, grad_out, grads);
    apply_update(state, cfg, grads);

    finish_iteration(state, cfg);
    return breakdown;
}

LossBreakdown ddim_baseline_step(TrainState& state, const Sample& x0_batch,
                                 const TrainConfig& cfg, const NoiseSchedule& s) {
    const auto [t, k] = sample_step_pair(state.step_rng, cfg.total_timesteps);
    (void)k;  // drawn to keep the stream aligned with the full trainer
    Sample eps = gaussian_sample(state.noise_rng, x0_batch.batch, x0_batch.dims);
    Sample x_t = forward_noise(x0_batch, eps, t, s);

    Denoiser::Trace trace;
    Sample eps_hat = state.models.base->forward(x_t, t, trace);
    const double noise = noise_loss(eps, eps_hat, cfg.loss_variant);

    LossBreakdown breakdown = total_loss(noise, 0.0, cfg.lambda, 0.0);
    if (!std::isfinite(breakdown.total)) {
        throw TrainingAbort(state.iteration + 1, t, k, 0.0);
    }

    Sample grad_out = noise_loss_grad(eps, eps_hat, cfg.loss_variant);
    for (auto& v : grad_out.data) v *= cfg.lambda;

    ParamSet grads = zeros_like(state.models.base->params());
    state.models.base->backward(trace, grad_out, grads);
    apply_update(state, cfg, grads);

    finish_iteration(state, cfg);
    return breakdown;
}

namespace {

Sample next_batch(const Sample& dataset, long iteration, std::size_t batch_size) {
    Sample batch = Sample::zeros(batch_size, dataset.dims);
    batch.image = dataset.image;
    const std::size_t n = dataset.batch;
    const std::size_t start =
        (static_cast<std::size_t>(iteration) * batch_size) % n;
    for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t src = (start + i) % n;
        for (std::size_t d = 0; d < dataset.dims; ++d) batch.at(i, d) = dataset.at(src, d);
    }
    return batch;
}

}  // namespace

void continue_training(TrainState& state, const TrainConfig& cfg, const Sample& dataset,
                       const NoiseSchedule& s, const TrainCallbacks& callbacks,
                       bool use_baseline) {
    if (dataset.batch == 0) throw std::invalid_argument("run_training: empty dataset");
    if (dataset.dims != state.models.base->input_dim()) {
        throw std::invalid_argument("run_training: dataset dims do not match model input");
    }
    if (cfg.graph_sync_interval > cfg.total_iterations && state.iteration == 0) {
        std::fprintf(stderr,
                     "warning: graph_sync_interval %ld exceeds total_iterations %ld; "
                     "the graph model will never sync\n",
                     cfg.graph_sync_interval, cfg.total_iterations);
    }

    while (state.iteration < cfg.total_iterations) {
        Sample batch = next_batch(dataset, state.iteration, cfg.batch_size);
        LossBreakdown loss = use_baseline ? ddim_baseline_step(state, batch, cfg, s)
                                          : train_step(state, batch, cfg, s);

        if (cfg.log_interval > 0 && state.iteration % cfg.log_interval == 0) {
            TrainLogRecord rec{state.iteration, loss};
            state.log.push_back(rec);
            if (callbacks.on_log) callbacks.on_log(state, rec);
        }
        if (cfg.checkpoint_interval > 0 && state.iteration % cfg.checkpoint_interval == 0 &&
            state.iteration < cfg.total_iterations && callbacks.on_checkpoint) {
            callbacks.on_checkpoint(state);
        }
    }
}

TrainState run_training(const TrainConfig& cfg, const Sample& dataset, const NoiseSchedule& s,
                        const TrainCallbacks& callbacks, bool use_baseline) {
    TrainState state = init_train_state(cfg);
    continue_training(state, cfg, dataset, s, callbacks, use_baseline);
    return state;
}

}  // namespace shortdf
