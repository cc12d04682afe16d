// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_SAMPLE_HPP
#define SHORTDF_SAMPLE_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace shortdf {

// Channel/height/width layout for image batches. 2D point sets leave it unset.
struct ImageShape {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t flat_size() const { return channels * height * width; }
    bool operator==(const ImageShape&) const = default;
};

// A batch of flattened feature vectors, row-major [batch, dims].
// Noisy batches carry the timestep they were produced at in `t`.
struct Sample {
    std::size_t batch = 0;
    std::size_t dims = 0;
    std::vector<double> data;
    std::optional<int> t;
    std::optional<ImageShape> image;

    static Sample zeros(std::size_t batch, std::size_t dims);

    double& at(std::size_t b, std::size_t d) { return data[b * dims + d]; }
    double at(std::size_t b, std::size_t d) const { return data[b * dims + d]; }
    double* row(std::size_t b) { return data.data() + b * dims; }
    const double* row(std::size_t b) const { return data.data() + b * dims; }
    std::size_t size() const { return data.size(); }

    bool shape_matches(const Sample& other) const {
        return batch == other.batch && dims == other.dims;
    }
};

// Throws std::invalid_argument naming `what` on shape mismatch.
void require_same_shape(const Sample& a, const Sample& b, const std::string& what);

// Throws std::invalid_argument if any entry is NaN or infinite.
void require_finite(const Sample& s, const std::string& what);

bool all_finite(const Sample& s);

}  // namespace shortdf

#endif
