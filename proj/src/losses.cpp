// SPDX-License-Identifier: Apache-2.0
#include "shortdf/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace shortdf {

std::string to_string(LossVariant v) {
    return v == LossVariant::l2norm ? "l2norm" : "mse";
}

LossVariant loss_variant_from_string(const std::string& s) {
    if (s == "l2norm") return LossVariant::l2norm;
    if (s == "mse") return LossVariant::mse;
    throw std::invalid_argument("unknown loss variant '" + s + "' (expected l2norm or mse)");
}

double noise_loss(const Sample& eps, const Sample& eps_hat, LossVariant v) {
    require_same_shape(eps, eps_hat, "noise_loss");
    if (eps.batch == 0) throw std::invalid_argument("noise_loss: empty batch");

    double acc = 0.0;
    if (v == LossVariant::l2norm) {
        for (std::size_t b = 0; b < eps.batch; ++b) {
            double sq = 0.0;
            for (std::size_t d = 0; d < eps.dims; ++d) {
                const double diff = eps.at(b, d) - eps_hat.at(b, d);
                sq += diff * diff;
            }
            acc += std::sqrt(sq);
        }
        return acc / static_cast<double>(eps.batch);
    }
    for (std::size_t i = 0; i < eps.data.size(); ++i) {
        const double diff = eps.data[i] - eps_hat.data[i];
        acc += diff * diff;
    }
    return acc / static_cast<double>(eps.data.size());
}

Sample noise_loss_grad(const Sample& eps, const Sample& eps_hat, LossVariant v) {
    require_same_shape(eps, eps_hat, "noise_loss_grad");
    Sample grad = Sample::zeros(eps.batch, eps.dims);

    if (v == LossVariant::l2norm) {
        const double inv_batch = 1.0 / static_cast<double>(eps.batch);
        for (std::size_t b = 0; b < eps.batch; ++b) {
            double sq = 0.0;
            for (std::size_t d = 0; d < eps.dims; ++d) {
                const double diff = eps.at(b, d) - eps_hat.at(b, d);
                sq += diff * diff;
            }
            const double norm = std::sqrt(sq);
            if (norm == 0.0) continue;
            for (std::size_t d = 0; d < eps.dims; ++d) {
                grad.at(b, d) = (eps_hat.at(b, d) - eps.at(b, d)) / norm * inv_batch;
            }
        }
        return grad;
    }

    const double scale = 2.0 / static_cast<double>(eps.data.size());
    for (std::size_t i = 0; i < eps.data.size(); ++i) {
        grad.data[i] = scale * (eps_hat.data[i] - eps.data[i]);
    }
    return grad;
}

double relax_loss(const Sample& dist_t, const Sample& dist_k, const Sample& edge,
                  const std::vector<bool>& cond) {
    require_same_shape(dist_t, dist_k, "relax_loss");
    require_same_shape(dist_t, edge, "relax_loss");
    if (cond.size() != dist_t.batch) {
        throw std::invalid_argument("relax_loss: cond size does not match batch");
    }

    double acc = 0.0;
    for (std::size_t b = 0; b < dist_t.batch; ++b) {
        if (!cond[b]) continue;
        double sq = 0.0;
        for (std::size_t d = 0; d < dist_t.dims; ++d) {
            const double v = dist_k.at(b, d) + edge.at(b, d) - dist_t.at(b, d);
            sq += v * v;
        }
        acc += std::sqrt(sq);
    }
    return acc / static_cast<double>(dist_t.batch);
}

Sample relax_loss_grad_dist_t(const Sample& dist_t, const Sample& dist_k, const Sample& edge,
                              const std::vector<bool>& cond) {
    require_same_shape(dist_t, dist_k, "relax_loss_grad");
    require_same_shape(dist_t, edge, "relax_loss_grad");
    Sample grad = Sample::zeros(dist_t.batch, dist_t.dims);
    const double inv_batch = 1.0 / static_cast<double>(dist_t.batch);

    for (std::size_t b = 0; b < dist_t.batch; ++b) {
        if (!cond[b]) continue;
        double sq = 0.0;
        for (std::size_t d = 0; d < dist_t.dims; ++d) {
            const double v = dist_k.at(b, d) + edge.at(b, d) - dist_t.at(b, d);
            sq += v * v;
        }
        const double norm = std::sqrt(sq);
        if (norm == 0.0) continue;
        for (std::size_t d = 0; d < dist_t.dims; ++d) {
            const double v = dist_k.at(b, d) + edge.at(b, d) - dist_t.at(b, d);
            grad.at(b, d) = -v / norm * inv_batch;
        }
    }
    return grad;
}

double cond_rate(const std::vector<bool>& cond) {
    if (cond.empty()) return 0.0;
    std::size_t n = 0;
    for (bool c : cond) n += c ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(cond.size());
}

LossBreakdown total_loss(double noise, double relax, double lambda, double cond_fraction) {
    LossBreakdown out;
    out.noise_loss = noise;
    out.relax_loss = relax;
    out.cond_rate = cond_fraction;
    out.lambda = lambda;
    out.total = lambda * noise + relax;
    return out;
}

}  // namespace shortdf
