// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_SAMPLE_IO_HPP
#define SHORTDF_SAMPLE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shortdf/sample.hpp"

namespace shortdf {

// Header carried by the binary sample file so every artifact names the run
// that produced it.
struct SampleFileMeta {
    std::uint64_t seed = 0;
    double sigma_n = 0.0;
    std::vector<int> path;
    std::string model_role;      // "base" | "ema"
    std::string checkpoint_id;
    std::string space = "data";  // denormalized
};

void write_sample_file(const std::filesystem::path& path, const Sample& s,
                       const SampleFileMeta& meta);

struct SampleFile {
    Sample data;
    SampleFileMeta meta;
};

SampleFile read_sample_file(const std::filesystem::path& path);

// Flat text export for 2D point sets: one `x y` line per sample, full
// precision.
void write_sample_text(const std::filesystem::path& path, const Sample& s);

// Contact sheet for image batches: samples tiled row-major onto one PNG,
// values clamped to [0, 1] then scaled to 8-bit.
void write_contact_sheet(const std::filesystem::path& path, const Sample& s);

}  // namespace shortdf

#endif
