// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_METRICS_HPP
#define SHORTDF_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "shortdf/denoiser.hpp"
#include "shortdf/sample.hpp"
#include "shortdf/sampler.hpp"
#include "shortdf/schedule.hpp"

namespace shortdf {

enum class MetricKind { mmd_rbf, sliced_wasserstein, fid_proxy };

std::string to_string(MetricKind k);
MetricKind metric_kind_from_string(const std::string& s);

// Multi-bandwidth RBF maximum mean discrepancy (squared), clamped at 0. The
// kernel averages exp(-d^2 / (2 b^2)) over the bandwidth list. The default
// estimator is unbiased; the biased variant keeps the diagonal terms and is
// exactly 0 on identical sets.
double mmd_rbf(const Sample& samples, const Sample& reference,
               const std::vector<double>& bandwidths, bool unbiased = true);

// Mean over random unit projections of the 1D 2-Wasserstein distance between
// sorted projections. Unequal set sizes are reduced by deterministic
// subsampling of the larger set.
double sliced_wasserstein(const Sample& samples, const Sample& reference, int n_projections,
                          std::uint64_t seed);

// Frechet distance between diagonal-covariance Gaussian fits of the two sets.
// A stand-in for inception-based scores; labeled as a proxy in all outputs.
double fid_proxy(const Sample& samples, const Sample& reference);

struct NfeSweepRow {
    std::string method;
    int nfe = 0;
    double metric_value = 0.0;
    double step_seconds = 0.0;
};

struct NfeSweepReport {
    MetricKind metric_kind = MetricKind::sliced_wasserstein;
    std::vector<NfeSweepRow> rows;
};

// One method entry per loaded checkpoint; the sweep samples each at each NFE
// with the same seed, so every method starts from the same initial noise.
struct SweepEntry {
    std::string label;
    const Denoiser* model = nullptr;
    const NoiseSchedule* schedule = nullptr;
};

struct SweepConfig {
    std::size_t batch = 1000;
    std::uint64_t seed = 0;
    MetricKind metric = MetricKind::sliced_wasserstein;
    int sw_projections = 64;
    std::vector<double> bandwidths{0.25, 0.5, 1.0, 2.0};
    StepStrategy strategy = StepStrategy::uniform;
};

NfeSweepReport nfe_sweep(const std::vector<SweepEntry>& entries, const std::vector<int>& nfe_list,
                         const Sample& reference, const SweepConfig& cfg);

std::string to_csv(const NfeSweepReport& report);
NfeSweepReport parse_csv(const std::string& csv);
std::string to_aligned_table(const NfeSweepReport& report);
std::string to_svg_plot(const NfeSweepReport& report);

}  // namespace shortdf

#endif
