// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_CONFIG_FILE_HPP
#define SHORTDF_CONFIG_FILE_HPP

#include <filesystem>
#include <iosfwd>
#include <string>

#include "shortdf/datasets.hpp"
#include "shortdf/trainer.hpp"

namespace shortdf {

// A full run description: training hyperparameters plus the data source.
struct RunConfig {
    TrainConfig train;
    DatasetSpec dataset;
};

// Flat `key = value` text with `#` comments. The schema is fixed; unknown
// keys are collected and rejected in one exhaustive error.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_file(const std::filesystem::path& path);

// Canonical resolved snapshot, stable key order; reparsing yields the same
// config.
std::string serialize_config(const RunConfig& cfg);

// FNV-1a hash of the canonical snapshot, hex, for run directory naming.
std::string config_hash(const RunConfig& cfg);

}  // namespace shortdf

#endif
