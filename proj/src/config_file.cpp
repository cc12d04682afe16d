// SPDX-License-Identifier: Apache-2.0
#include "shortdf/config_file.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace shortdf {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::size_t> parse_size_list(const std::string& value) {
    std::vector<std::size_t> out;
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(std::stoull(item));
    }
    return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("config key '" + key + "': expected true/false, got '" +
                                value + "'");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_size_list(const std::vector<std::size_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(values[i]);
    }
    return out;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::vector<std::string> unknown;
    std::string line;
    int lineno = 0;

    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (kv.count(key)) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": duplicate key '" + key + "'");
        }
        kv[key] = value;
    }

    RunConfig cfg;
    auto take = [&](const std::string& key) -> std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };

    if (auto* v = take("dataset")) cfg.dataset.kind = dataset_kind_from_string(*v);
    if (auto* v = take("data_n")) cfg.dataset.n = std::stoull(*v);
    if (auto* v = take("data_seed")) cfg.dataset.seed = std::stoull(*v);
    if (auto* v = take("images_dir")) cfg.dataset.images_dir = *v;

    if (auto* v = take("model")) cfg.train.model.kind = *v;
    if (auto* v = take("hidden_dims")) cfg.train.model.hidden_dims = parse_size_list(*v);
    if (auto* v = take("embed_dim")) cfg.train.model.embed_dim = std::stoull(*v);
    if (auto* v = take("embed_max_period")) cfg.train.model.embed_max_period = std::stod(*v);
    if (auto* v = take("features")) cfg.train.model.features = std::stoull(*v);

    if (auto* v = take("T")) cfg.train.total_timesteps = std::stoi(*v);
    if (auto* v = take("beta_start")) cfg.train.beta_start = std::stod(*v);
    if (auto* v = take("beta_end")) cfg.train.beta_end = std::stod(*v);
    if (auto* v = take("schedule")) cfg.train.schedule_kind = *v;

    if (auto* v = take("optimizer")) cfg.train.optimizer = optimizer_kind_from_string(*v);
    if (auto* v = take("lambda")) cfg.train.lambda = std::stod(*v);
    if (auto* v = take("ema_decay")) cfg.train.ema_decay = std::stod(*v);
    if (auto* v = take("graph_sync_interval")) cfg.train.graph_sync_interval = std::stol(*v);
    if (auto* v = take("iterations")) cfg.train.total_iterations = std::stol(*v);
    if (auto* v = take("batch_size")) cfg.train.batch_size = std::stoull(*v);
    if (auto* v = take("learning_rate")) cfg.train.learning_rate = std::stod(*v);
    if (auto* v = take("seed")) cfg.train.seed = std::stoull(*v);
    if (auto* v = take("loss_variant")) cfg.train.loss_variant = loss_variant_from_string(*v);
    if (auto* v = take("disable_relax")) cfg.train.disable_relax = parse_bool(*v, "disable_relax");
    if (auto* v = take("log_interval")) cfg.train.log_interval = std::stol(*v);
    if (auto* v = take("checkpoint_interval")) cfg.train.checkpoint_interval = std::stol(*v);

    static const char* known[] = {
        "dataset",     "data_n",        "data_seed",          "images_dir",
        "model",       "hidden_dims",   "embed_dim",          "embed_max_period", "features",
        "T",           "beta_start",    "beta_end",           "schedule",
        "optimizer",   "lambda",        "ema_decay",          "graph_sync_interval", "iterations",
        "batch_size",  "learning_rate", "seed",               "loss_variant",
        "disable_relax", "log_interval", "checkpoint_interval"};
    for (const auto& [key, value] : kv) {
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return key == k; }) == std::end(known)) {
            unknown.push_back(key);
        }
    }
    if (!unknown.empty()) {
        std::string msg = "unknown config key(s):";
        for (const auto& k : unknown) msg += " '" + k + "'";
        throw std::invalid_argument(msg);
    }
    return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config file " + path.string());
    return parse_config(f);
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "dataset = " << to_string(cfg.dataset.kind) << "\n";
    out << "data_n = " << cfg.dataset.n << "\n";
    out << "data_seed = " << cfg.dataset.seed << "\n";
    if (!cfg.dataset.images_dir.empty()) out << "images_dir = " << cfg.dataset.images_dir << "\n";
    out << "model = " << cfg.train.model.kind << "\n";
    out << "hidden_dims = " << join_size_list(cfg.train.model.hidden_dims) << "\n";
    out << "embed_dim = " << cfg.train.model.embed_dim << "\n";
    out << "embed_max_period = " << format_double(cfg.train.model.embed_max_period) << "\n";
    out << "features = " << cfg.train.model.features << "\n";
    out << "T = " << cfg.train.total_timesteps << "\n";
    out << "beta_start = " << format_double(cfg.train.beta_start) << "\n";
    out << "beta_end = " << format_double(cfg.train.beta_end) << "\n";
    out << "schedule = " << cfg.train.schedule_kind << "\n";
    out << "optimizer = " << to_string(cfg.train.optimizer) << "\n";
    out << "lambda = " << format_double(cfg.train.lambda) << "\n";
    out << "ema_decay = " << format_double(cfg.train.ema_decay) << "\n";
    out << "graph_sync_interval = " << cfg.train.graph_sync_interval << "\n";
    out << "iterations = " << cfg.train.total_iterations << "\n";
    out << "batch_size = " << cfg.train.batch_size << "\n";
    out << "learning_rate = " << format_double(cfg.train.learning_rate) << "\n";
    out << "seed = " << cfg.train.seed << "\n";
    out << "loss_variant = " << to_string(cfg.train.loss_variant) << "\n";
    out << "disable_relax = " << (cfg.train.disable_relax ? "true" : "false") << "\n";
    out << "log_interval = " << cfg.train.log_interval << "\n";
    out << "checkpoint_interval = " << cfg.train.checkpoint_interval << "\n";
    return out.str();
}

std::string config_hash(const RunConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf, 16);
}

}  // namespace shortdf
