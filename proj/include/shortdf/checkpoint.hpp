// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_CHECKPOINT_HPP
#define SHORTDF_CHECKPOINT_HPP

#include <filesystem>

#include "shortdf/datasets.hpp"
#include "shortdf/trainer.hpp"

namespace shortdf {

// Single-file archive: a JSON manifest (config, iteration, rng streams,
// normalization, array directory) followed by raw little-endian float64
// arrays. Loading a saved state resumes training bit-identically.
struct Checkpoint {
    static constexpr int kFormatVersion = 1;

    int format_version = kFormatVersion;
    TrainConfig config;
    long iteration = 0;
    ParamSet base;
    ParamSet ema;
    ParamSet graph;
    ParamSet optimizer_state;
    RngState noise_rng;
    RngState step_rng;
    Normalization normalization;
};

Checkpoint make_checkpoint(const TrainState& state, const TrainConfig& cfg,
                           const Normalization& normalization);

// Rebuilds the model triplet from the stored architecture and restores every
// parameter array and rng stream. The in-memory log starts empty; the log
// file on disk is the durable record.
TrainState restore_state(const Checkpoint& ckpt);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace shortdf

#endif
