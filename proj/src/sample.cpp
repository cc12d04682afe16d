// SPDX-License-Identifier: Apache-2.0
#include "shortdf/sample.hpp"

#include <cmath>
#include <stdexcept>

namespace shortdf {

Sample Sample::zeros(std::size_t batch, std::size_t dims) {
    Sample s;
    s.batch = batch;
    s.dims = dims;
    s.data.assign(batch * dims, 0.0);
    return s;
}

void require_same_shape(const Sample& a, const Sample& b, const std::string& what) {
    if (!a.shape_matches(b)) {
        throw std::invalid_argument(what + ": shape mismatch ([" + std::to_string(a.batch) +
                                    "," + std::to_string(a.dims) + "] vs [" +
                                    std::to_string(b.batch) + "," + std::to_string(b.dims) +
                                    "])");
    }
}

bool all_finite(const Sample& s) {
    for (double v : s.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void require_finite(const Sample& s, const std::string& what) {
    if (!all_finite(s)) {
        throw std::invalid_argument(what + ": non-finite entry in sample batch");
    }
}

}  // namespace shortdf
