// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_DATASETS_HPP
#define SHORTDF_DATASETS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shortdf/sample.hpp"

namespace shortdf {

enum class DatasetKind { gaussian_mixture_8, swiss_roll, two_moons, tiny_images_dir };

std::string to_string(DatasetKind k);
DatasetKind dataset_kind_from_string(const std::string& s);

// Per-dimension affine transform x' = (x - mean) / scale. Stored in
// checkpoints so sampler outputs can be mapped back to data space.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> scale;

    bool operator==(const Normalization&) const = default;
};

struct DatasetSpec {
    DatasetKind kind = DatasetKind::gaussian_mixture_8;
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    std::string images_dir;  // tiny_images_dir only
    std::optional<Normalization> normalization;  // reuse instead of refitting
};

struct Dataset {
    Sample data;
    Normalization normalization;
};

// Deterministic in the seed. Synthetic kinds emit [n, 2]; tiny_images_dir
// loads every PNG under the directory into [n, C*H*W]. Data is normalized
// with spec.normalization when given, otherwise with moments fitted to this
// draw (the fitted transform is returned either way).
Dataset generate(const DatasetSpec& spec);

Sample apply_normalization(const Sample& raw, const Normalization& norm);
Sample denormalize(const Sample& normalized, const Normalization& norm);

}  // namespace shortdf

#endif
