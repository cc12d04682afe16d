// SPDX-License-Identifier: Apache-2.0
#include "shortdf/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "shortdf/rng.hpp"

namespace shortdf {

std::string to_string(MetricKind k) {
    switch (k) {
        case MetricKind::mmd_rbf: return "mmd_rbf";
        case MetricKind::sliced_wasserstein: return "sliced_wasserstein";
        case MetricKind::fid_proxy: return "fid_proxy";
    }
    throw std::logic_error("unreachable metric kind");
}

MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "mmd_rbf") return MetricKind::mmd_rbf;
    if (s == "sliced_wasserstein") return MetricKind::sliced_wasserstein;
    if (s == "fid_proxy") return MetricKind::fid_proxy;
    throw std::invalid_argument("unknown metric kind '" + s + "'");
}

namespace {

double kernel_mean(const double* a, const double* b, std::size_t dims,
                   const std::vector<double>& bandwidths) {
    double sq = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
        const double diff = a[d] - b[d];
        sq += diff * diff;
    }
    double acc = 0.0;
    for (double bw : bandwidths) acc += std::exp(-sq / (2.0 * bw * bw));
    return acc / static_cast<double>(bandwidths.size());
}

std::vector<std::size_t> subsample_indices(std::size_t from, std::size_t count,
                                           RngStream& rng) {
    std::vector<std::size_t> idx(from);
    for (std::size_t i = 0; i < from; ++i) idx[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(from - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
}

}  // namespace

double mmd_rbf(const Sample& samples, const Sample& reference,
               const std::vector<double>& bandwidths, bool unbiased) {
    if (samples.batch == 0 || reference.batch == 0) {
        throw std::invalid_argument("mmd_rbf: empty sample set");
    }
    if (samples.dims != reference.dims) throw std::invalid_argument("mmd_rbf: dims mismatch");
    if (bandwidths.empty()) throw std::invalid_argument("mmd_rbf: need at least one bandwidth");

    const std::size_t m = samples.batch, n = reference.batch, dims = samples.dims;
    double xx = 0.0, yy = 0.0, xy = 0.0;

    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (unbiased && i == j) continue;
            xx += kernel_mean(samples.row(i), samples.row(j), dims, bandwidths);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (unbiased && i == j) continue;
            yy += kernel_mean(reference.row(i), reference.row(j), dims, bandwidths);
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            xy += kernel_mean(samples.row(i), reference.row(j), dims, bandwidths);
        }
    }

    const double mm = static_cast<double>(m), nn = static_cast<double>(n);
    double est;
    if (unbiased) {
        if (m < 2 || n < 2) throw std::invalid_argument("mmd_rbf: unbiased estimator needs >= 2 points per set");
        est = xx / (mm * (mm - 1.0)) + yy / (nn * (nn - 1.0)) - 2.0 * xy / (mm * nn);
    } else {
        est = xx / (mm * mm) + yy / (nn * nn) - 2.0 * xy / (mm * nn);
    }
    return est < 0.0 ? 0.0 : est;
}

double sliced_wasserstein(const Sample& samples, const Sample& reference, int n_projections,
                          std::uint64_t seed) {
    if (samples.batch == 0 || reference.batch == 0) {
        throw std::invalid_argument("sliced_wasserstein: empty sample set");
    }
    if (samples.dims != reference.dims) {
        throw std::invalid_argument("sliced_wasserstein: dims mismatch");
    }
    if (n_projections < 1) throw std::invalid_argument("sliced_wasserstein: need projections");

    RngStream rng(seed, "sliced-wasserstein");
    const std::size_t count = std::min(samples.batch, reference.batch);
    std::vector<std::size_t> idx_a = samples.batch == count
                                         ? std::vector<std::size_t>{}
                                         : subsample_indices(samples.batch, count, rng);
    std::vector<std::size_t> idx_b = reference.batch == count
                                         ? std::vector<std::size_t>{}
                                         : subsample_indices(reference.batch, count, rng);

    const std::size_t dims = samples.dims;
    std::vector<double> dir(dims), pa(count), pb(count);
    double acc = 0.0;

    for (int p = 0; p < n_projections; ++p) {
        double norm_sq = 0.0;
        do {
            norm_sq = 0.0;
            for (auto& v : dir) {
                v = rng.next_gaussian();
                norm_sq += v * v;
            }
        } while (norm_sq == 0.0);
        const double inv_norm = 1.0 / std::sqrt(norm_sq);

        for (std::size_t i = 0; i < count; ++i) {
            const double* ra = samples.row(idx_a.empty() ? i : idx_a[i]);
            const double* rb = reference.row(idx_b.empty() ? i : idx_b[i]);
            double da = 0.0, db = 0.0;
            for (std::size_t d = 0; d < dims; ++d) {
                da += ra[d] * dir[d];
                db += rb[d] * dir[d];
            }
            pa[i] = da * inv_norm;
            pb[i] = db * inv_norm;
        }
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());

        double sq = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double diff = pa[i] - pb[i];
            sq += diff * diff;
        }
        acc += std::sqrt(sq / static_cast<double>(count));
    }
    return acc / n_projections;
}

double fid_proxy(const Sample& samples, const Sample& reference) {
    if (samples.batch == 0 || reference.batch == 0) {
        throw std::invalid_argument("fid_proxy: empty sample set");
    }
    if (samples.dims != reference.dims) throw std::invalid_argument("fid_proxy: dims mismatch");

    const std::size_t dims = samples.dims;
    auto moments = [dims](const Sample& s) {
        std::vector<double> mean(dims, 0.0), sd(dims, 0.0);
        for (std::size_t b = 0; b < s.batch; ++b) {
            for (std::size_t d = 0; d < dims; ++d) mean[d] += s.at(b, d);
        }
        for (auto& m : mean) m /= static_cast<double>(s.batch);
        for (std::size_t b = 0; b < s.batch; ++b) {
            for (std::size_t d = 0; d < dims; ++d) {
                const double diff = s.at(b, d) - mean[d];
                sd[d] += diff * diff;
            }
        }
        for (auto& v : sd) v = std::sqrt(v / static_cast<double>(s.batch));
        return std::pair{mean, sd};
    };

    const auto [mean_a, sd_a] = moments(samples);
    const auto [mean_b, sd_b] = moments(reference);
    double acc = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
        const double dm = mean_a[d] - mean_b[d];
        const double ds = sd_a[d] - sd_b[d];
        acc += dm * dm + ds * ds;
    }
    return acc;
}

NfeSweepReport nfe_sweep(const std::vector<SweepEntry>& entries, const std::vector<int>& nfe_list,
                         const Sample& reference, const SweepConfig& cfg) {
    if (entries.empty()) throw std::invalid_argument("nfe_sweep: no method entries");
    if (nfe_list.empty()) throw std::invalid_argument("nfe_sweep: empty nfe list");

    NfeSweepReport report;
    report.metric_kind = cfg.metric;

    for (const auto& entry : entries) {
        if (!entry.model || !entry.schedule) {
            throw std::invalid_argument("nfe_sweep: entry '" + entry.label + "' not loaded");
        }
        for (int nfe : nfe_list) {
            const SamplingPath path =
                make_step_schedule(entry.schedule->total_timesteps, nfe, cfg.strategy);

            const auto start = std::chrono::steady_clock::now();
            Sample generated = sample(*entry.model, *entry.schedule, path, cfg.batch, 0.0,
                                      cfg.seed);
            const auto stop = std::chrono::steady_clock::now();
            const double seconds = std::chrono::duration<double>(stop - start).count();

            double value = 0.0;
            switch (cfg.metric) {
                case MetricKind::mmd_rbf:
                    value = mmd_rbf(generated, reference, cfg.bandwidths);
                    break;
                case MetricKind::sliced_wasserstein:
                    value = sliced_wasserstein(generated, reference, cfg.sw_projections,
                                               cfg.seed);
                    break;
                case MetricKind::fid_proxy:
                    value = fid_proxy(generated, reference);
                    break;
            }
            report.rows.push_back({entry.label, nfe, value, seconds / nfe});
        }
    }
    return report;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string to_csv(const NfeSweepReport& report) {
    std::ostringstream out;
    out << "method,nfe,metric_kind,metric_value,step_seconds\n";
    for (const auto& row : report.rows) {
        out << row.method << ',' << row.nfe << ',' << to_string(report.metric_kind) << ','
            << format_double(row.metric_value) << ',' << format_double(row.step_seconds)
            << '\n';
    }
    return out.str();
}

NfeSweepReport parse_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("parse_csv: empty input");

    NfeSweepReport report;
    bool have_kind = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string method, nfe_s, kind_s, value_s, seconds_s;
        if (!std::getline(ls, method, ',') || !std::getline(ls, nfe_s, ',') ||
            !std::getline(ls, kind_s, ',') || !std::getline(ls, value_s, ',') ||
            !std::getline(ls, seconds_s)) {
            throw std::invalid_argument("parse_csv: malformed row '" + line + "'");
        }
        if (!have_kind) {
            report.metric_kind = metric_kind_from_string(kind_s);
            have_kind = true;
        }
        report.rows.push_back(
            {method, std::stoi(nfe_s), std::stod(value_s), std::stod(seconds_s)});
    }
    return report;
}

std::string to_aligned_table(const NfeSweepReport& report) {
    std::size_t method_w = 6;
    for (const auto& row : report.rows) method_w = std::max(method_w, row.method.size());

    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-*s  %5s  %14s  %14s\n", static_cast<int>(method_w),
                  "method", "nfe", to_string(report.metric_kind).substr(0, 14).c_str(),
                  "step_seconds");
    out << buf;
    for (const auto& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%-*s  %5d  %14.6g  %14.6g\n",
                      static_cast<int>(method_w), row.method.c_str(), row.nfe,
                      row.metric_value, row.step_seconds);
        out << buf;
    }
    return out.str();
}

std::string to_svg_plot(const NfeSweepReport& report) {
    // metric vs NFE, one polyline per method, log-free linear axes
    constexpr int width = 640, height = 420, margin = 60;
    double max_nfe = 1.0, max_val = 1e-12;
    for (const auto& row : report.rows) {
        max_nfe = std::max(max_nfe, static_cast<double>(row.nfe));
        max_val = std::max(max_val, row.metric_value);
    }

    std::map<std::string, std::vector<const NfeSweepRow*>> by_method;
    for (const auto& row : report.rows) by_method[row.method].push_back(&row);

    auto sx = [&](double nfe) {
        return margin + (nfe / max_nfe) * (width - 2 * margin);
    };
    auto sy = [&](double v) {
        return height - margin - (v / max_val) * (height - 2 * margin);
    };

    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<line x1='" << margin << "' y1='" << height - margin << "' x2='" << width - margin
        << "' y2='" << height - margin << "' stroke='black'/>\n";
    out << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
        << height - margin << "' stroke='black'/>\n";
    out << "<text x='" << width / 2 << "' y='" << height - 15
        << "' text-anchor='middle' font-size='13'>NFE</text>\n";
    out << "<text x='18' y='" << height / 2 << "' text-anchor='middle' font-size='13' "
        << "transform='rotate(-90 18 " << height / 2 << ")'>" << to_string(report.metric_kind)
        << "</text>\n";

    int color = 0, legend_y = margin;
    for (const auto& [method, rows] : by_method) {
        const char* stroke = palette[color % 5];
        out << "<polyline fill='none' stroke='" << stroke << "' stroke-width='2' points='";
        auto sorted = rows;
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto* a, const auto* b) { return a->nfe < b->nfe; });
        for (const auto* row : sorted) {
            out << sx(row->nfe) << ',' << sy(row->metric_value) << ' ';
        }
        out << "'/>\n";
        for (const auto* row : sorted) {
            out << "<circle cx='" << sx(row->nfe) << "' cy='" << sy(row->metric_value)
                << "' r='3' fill='" << stroke << "'/>\n";
        }
        out << "<text x='" << width - margin + 5 << "' y='" << legend_y << "' font-size='12' fill='"
            << stroke << "'>" << method << "</text>\n";
        legend_y += 16;
        ++color;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace shortdf
