// SPDX-License-Identifier: Apache-2.0
#include "shortdf/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include "shortdf/png_io.hpp"
#include "shortdf/rng.hpp"

namespace shortdf {

std::string to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::gaussian_mixture_8: return "gaussian_mixture_8";
        case DatasetKind::swiss_roll: return "swiss_roll";
        case DatasetKind::two_moons: return "two_moons";
        case DatasetKind::tiny_images_dir: return "tiny_images_dir";
    }
    throw std::logic_error("unreachable dataset kind");
}

DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "gaussian_mixture_8") return DatasetKind::gaussian_mixture_8;
    if (s == "swiss_roll") return DatasetKind::swiss_roll;
    if (s == "two_moons") return DatasetKind::two_moons;
    if (s == "tiny_images_dir") return DatasetKind::tiny_images_dir;
    throw std::invalid_argument("unknown dataset kind '" + s + "'");
}

namespace {

Sample gaussian_mixture_8(std::size_t n, RngStream& rng) {
    Sample s = Sample::zeros(n, 2);
    constexpr double radius = 2.0;
    constexpr double component_std = 0.1;
    for (std::size_t i = 0; i < n; ++i) {
        const int mode = static_cast<int>(rng.next_below(8));
        const double angle = 2.0 * std::numbers::pi * mode / 8.0;
        s.at(i, 0) = radius * std::cos(angle) + component_std * rng.next_gaussian();
        s.at(i, 1) = radius * std::sin(angle) + component_std * rng.next_gaussian();
    }
    return s;
}

Sample swiss_roll(std::size_t n, RngStream& rng) {
    Sample s = Sample::zeros(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.next_double();
        const double theta = 1.5 * std::numbers::pi * (1.0 + 2.0 * u);
        s.at(i, 0) = theta * std::cos(theta) / 10.0 + 0.05 * rng.next_gaussian();
        s.at(i, 1) = theta * std::sin(theta) / 10.0 + 0.05 * rng.next_gaussian();
    }
    return s;
}

Sample two_moons(std::size_t n, RngStream& rng) {
    Sample s = Sample::zeros(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const bool upper = rng.next_below(2) == 0;
        const double theta = std::numbers::pi * rng.next_double();
        double x, y;
        if (upper) {
            x = std::cos(theta);
            y = std::sin(theta);
        } else {
            x = 1.0 - std::cos(theta);
            y = 0.5 - std::sin(theta);
        }
        s.at(i, 0) = x + 0.07 * rng.next_gaussian();
        s.at(i, 1) = y + 0.07 * rng.next_gaussian();
    }
    return s;
}

Sample tiny_images(const std::string& dir, std::size_t n_limit) {
    namespace fs = std::filesystem;
    if (dir.empty() || !fs::is_directory(dir)) {
        throw std::invalid_argument("tiny_images_dir: not a directory: '" + dir + "'");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::invalid_argument("tiny_images_dir: no .png files in '" + dir + "'");
    if (n_limit > 0 && files.size() > n_limit) files.resize(n_limit);

    std::vector<std::string> errors;
    Sample s;
    ImageShape shape;
    std::size_t loaded = 0;
    for (const auto& file : files) {
        PngImage img;
        try {
            img = read_png(file);
        } catch (const std::exception& e) {
            errors.push_back(e.what());
            continue;
        }
        if (loaded == 0) {
            shape = ImageShape{img.channels, img.height, img.width};
            s = Sample::zeros(files.size(), shape.flat_size());
            s.image = shape;
        } else if (img.channels != shape.channels || img.height != shape.height ||
                   img.width != shape.width) {
            errors.push_back(file.string() + ": size differs from first image");
            continue;
        }
        // interleaved rows to planar [c, h, w], scaled to [0, 1]
        double* row = s.row(loaded);
        for (std::size_t c = 0; c < shape.channels; ++c) {
            for (std::size_t y = 0; y < shape.height; ++y) {
                for (std::size_t x = 0; x < shape.width; ++x) {
                    row[(c * shape.height + y) * shape.width + x] =
                        img.pixels[(y * shape.width + x) * shape.channels + c] / 255.0;
                }
            }
        }
        ++loaded;
    }
    if (!errors.empty()) {
        std::string msg = "tiny_images_dir: " + std::to_string(errors.size()) + " unreadable file(s):";
        for (const auto& e : errors) msg += "\n  " + e;
        throw std::runtime_error(msg);
    }
    s.batch = loaded;
    s.data.resize(loaded * s.dims);
    return s;
}

Normalization fit_normalization(const Sample& raw) {
    Normalization norm;
    norm.mean.assign(raw.dims, 0.0);
    norm.scale.assign(raw.dims, 1.0);
    if (raw.batch == 0) return norm;

    for (std::size_t b = 0; b < raw.batch; ++b) {
        for (std::size_t d = 0; d < raw.dims; ++d) norm.mean[d] += raw.at(b, d);
    }
    for (auto& m : norm.mean) m /= static_cast<double>(raw.batch);

    std::vector<double> var(raw.dims, 0.0);
    for (std::size_t b = 0; b < raw.batch; ++b) {
        for (std::size_t d = 0; d < raw.dims; ++d) {
            const double diff = raw.at(b, d) - norm.mean[d];
            var[d] += diff * diff;
        }
    }
    for (std::size_t d = 0; d < raw.dims; ++d) {
        const double sd = std::sqrt(var[d] / static_cast<double>(raw.batch));
        norm.scale[d] = sd > 1e-8 ? sd : 1.0;  // constant dimensions pass through
    }
    return norm;
}

}  // namespace

Sample apply_normalization(const Sample& raw, const Normalization& norm) {
    if (norm.mean.size() != raw.dims || norm.scale.size() != raw.dims) {
        throw std::invalid_argument("apply_normalization: dimension mismatch");
    }
    Sample out = raw;
    for (std::size_t b = 0; b < raw.batch; ++b) {
        for (std::size_t d = 0; d < raw.dims; ++d) {
            out.at(b, d) = (raw.at(b, d) - norm.mean[d]) / norm.scale[d];
        }
    }
    return out;
}

Sample denormalize(const Sample& normalized, const Normalization& norm) {
    if (norm.mean.size() != normalized.dims || norm.scale.size() != normalized.dims) {
        throw std::invalid_argument("denormalize: dimension mismatch");
    }
    Sample out = normalized;
    for (std::size_t b = 0; b < normalized.batch; ++b) {
        for (std::size_t d = 0; d < normalized.dims; ++d) {
            out.at(b, d) = normalized.at(b, d) * norm.scale[d] + norm.mean[d];
        }
    }
    return out;
}

Dataset generate(const DatasetSpec& spec) {
    if (spec.n == 0 && spec.kind != DatasetKind::tiny_images_dir) {
        throw std::invalid_argument("generate: n must be positive");
    }

    RngStream rng(spec.seed, "dataset/" + to_string(spec.kind));
    Sample raw;
    switch (spec.kind) {
        case DatasetKind::gaussian_mixture_8: raw = gaussian_mixture_8(spec.n, rng); break;
        case DatasetKind::swiss_roll: raw = swiss_roll(spec.n, rng); break;
        case DatasetKind::two_moons: raw = two_moons(spec.n, rng); break;
        case DatasetKind::tiny_images_dir: raw = tiny_images(spec.images_dir, spec.n); break;
    }

    Dataset out;
    out.normalization = spec.normalization ? *spec.normalization : fit_normalization(raw);
    out.data = apply_normalization(raw, out.normalization);
    out.data.image = raw.image;
    return out;
}

}  // namespace shortdf
