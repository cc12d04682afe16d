// SPDX-License-Identifier: Apache-2.0
#include "shortdf/residual.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "shortdf/diffusion.hpp"

namespace shortdf {

namespace {

Sample elementwise_sub(const Sample& a, const Sample& b) {
    Sample out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
    out.t.reset();
    return out;
}

Sample elementwise_abs(Sample a) {
    for (auto& v : a.data) v = std::fabs(v);
    a.t.reset();
    return a;
}

double residual_coeff(const NoiseSchedule& s, int t) {
    const double abar = alpha_bar(s, t);
    return std::sqrt(1.0 - abar) / std::sqrt(abar);
}

}  // namespace

Sample initial_residual(const Sample& x0, const Sample& x_t, int t, const Denoiser& model,
                        const NoiseSchedule& s) {
    Sample x0_hat = estimate_x0(x_t, model.predict(x_t, t), t, s);
    return elementwise_sub(x0, x0_hat);
}

Sample step_residual(const Sample& x_hat_ki, const Sample& x_hat_kj, int k_i, int k_j,
                     const Denoiser& model, const NoiseSchedule& s) {
    if (k_j >= k_i) {
        throw std::invalid_argument("step_residual: need k_j < k_i, got k_i=" +
                                    std::to_string(k_i) + " k_j=" + std::to_string(k_j));
    }
    require_same_shape(x_hat_ki, x_hat_kj, "step_residual");

    Sample eps_i = model.predict(x_hat_ki, k_i);
    Sample eps_j = model.predict(x_hat_kj, k_j);
    const double coeff = residual_coeff(s, k_j);

    Sample out = elementwise_sub(eps_j, eps_i);
    for (auto& v : out.data) v *= coeff;
    return out;
}

ResidualReport path_residual_report(const Sample& x0, const SamplingPath& path,
                                    const Denoiser& model, const NoiseSchedule& s,
                                    const Sample& eps) {
    if (path.steps.empty()) {
        throw std::invalid_argument("path_residual_report: empty path");
    }

    ResidualReport report;
    const int k1 = path.steps.front();
    Sample x = forward_noise(x0, eps, k1, s);

    Sample eps_prev = model.predict(x, k1);
    report.initial_residual = elementwise_sub(x0, estimate_x0(x, eps_prev, k1, s));

    Sample rhs = report.initial_residual;
    for (std::size_t i = 0; i + 1 < path.steps.size(); ++i) {
        const int k_cur = path.steps[i];
        const int k_next = path.steps[i + 1];
        Sample x0_hat = estimate_x0(x, eps_prev, k_cur, s);
        Sample x_next = ddim_step(x0_hat, eps_prev, k_next, 0.0, s);

        Sample eps_next = model.predict(x_next, k_next);
        const double coeff = residual_coeff(s, k_next);
        Sample step = elementwise_sub(eps_next, eps_prev);
        for (auto& v : step.data) v *= coeff;

        for (std::size_t j = 0; j < rhs.data.size(); ++j) rhs.data[j] -= step.data[j];
        report.per_step_residuals.push_back(std::move(step));

        x = std::move(x_next);
        eps_prev = std::move(eps_next);
    }

    const int k_last = path.steps.back();
    report.path_residual_lhs = elementwise_sub(x0, estimate_x0(x, eps_prev, k_last, s));
    report.path_residual_rhs = std::move(rhs);
    return report;
}

namespace {

void append_stats(std::string& out, const char* name, const Sample& values) {
    double mean_abs = 0.0, max_abs = 0.0;
    for (double v : values.data) {
        mean_abs += std::fabs(v);
        max_abs = std::max(max_abs, std::fabs(v));
    }
    if (!values.data.empty()) mean_abs /= static_cast<double>(values.data.size());
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s %.9g %.9g\n", name, mean_abs, max_abs);
    out += buf;
}

}  // namespace

std::string to_text_record(const ResidualReport& report) {
    std::string out;
    append_stats(out, "initial_residual", report.initial_residual);
    for (std::size_t i = 0; i < report.per_step_residuals.size(); ++i) {
        append_stats(out, ("step_residual[" + std::to_string(i) + "]").c_str(),
                     report.per_step_residuals[i]);
    }
    append_stats(out, "path_residual_lhs", report.path_residual_lhs);
    append_stats(out, "path_residual_rhs", report.path_residual_rhs);
    return out;
}

EdgeTerms edge_terms(const Sample& x0, const Sample& x_t, int t, int k,
                     const Denoiser& graph_model, const NoiseSchedule& s) {
    if (k >= t) {
        throw std::invalid_argument("edge_terms: need k < t, got t=" + std::to_string(t) +
                                    " k=" + std::to_string(k));
    }
    require_same_shape(x0, x_t, "edge_terms");

    Sample eps_t = graph_model.predict(x_t, t);
    Sample x0_hat_t = estimate_x0(x_t, eps_t, t, s);

    EdgeTerms terms;
    terms.x_k_hat = ddim_step(x0_hat_t, eps_t, k, 0.0, s);
    terms.x_k = ddim_step(x0, eps_t, k, 0.0, s);

    Sample est_from_hat =
        estimate_x0(terms.x_k_hat, graph_model.predict(terms.x_k_hat, k), k, s);
    Sample est_from_clean = estimate_x0(terms.x_k, graph_model.predict(terms.x_k, k), k, s);

    terms.edge = x0;
    terms.edge.t.reset();
    for (std::size_t i = 0; i < terms.edge.data.size(); ++i) {
        terms.edge.data[i] = std::fabs(x0.data[i] - est_from_hat.data[i]) -
                             std::fabs(x0.data[i] - est_from_clean.data[i]);
    }
    return terms;
}

Sample edge_weight(const Sample& x0, const Sample& x_t, int t, int k,
                   const Denoiser& graph_model, const NoiseSchedule& s) {
    return edge_terms(x0, x_t, t, k, graph_model, s).edge;
}

Sample dist(const Sample& x0, const Sample& x_noisy, int t, const Denoiser& model,
            const NoiseSchedule& s) {
    return elementwise_abs(initial_residual(x0, x_noisy, t, model, s));
}

std::vector<bool> relaxation_cond(const Sample& dist_t, const Sample& dist_k,
                                  const Sample& edge) {
    require_same_shape(dist_t, dist_k, "relaxation_cond");
    require_same_shape(dist_t, edge, "relaxation_cond");

    std::vector<bool> cond(dist_t.batch);
    for (std::size_t b = 0; b < dist_t.batch; ++b) {
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t d = 0; d < dist_t.dims; ++d) {
            lhs += dist_t.at(b, d);
            rhs += dist_k.at(b, d) + edge.at(b, d);
        }
        const double inv = 1.0 / static_cast<double>(dist_t.dims);
        cond[b] = lhs * inv > rhs * inv;
    }
    return cond;
}

EdgeEvaluation evaluate_edge(const Sample& x0, const Sample& x_t, int t, int k,
                             const Denoiser& dist_t_model, const Denoiser& dist_k_model,
                             const Denoiser& graph_model, const NoiseSchedule& s) {
    EdgeEvaluation eval;
    eval.dist_t = dist(x0, x_t, t, dist_t_model, s);
    EdgeTerms terms = edge_terms(x0, x_t, t, k, graph_model, s);
    eval.dist_k = dist(x0, terms.x_k, k, dist_k_model, s);
    eval.edge = std::move(terms.edge);
    eval.cond = relaxation_cond(eval.dist_t, eval.dist_k, eval.edge);
    return eval;
}

}  // namespace shortdf
