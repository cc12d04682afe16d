// SPDX-License-Identifier: Apache-2.0
#include "shortdf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace shortdf {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'D', 'F', 'C', 'K', 'P', 'T', '\x01'};

void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

void append_f64_le(std::string& out, const std::vector<double>& values) {
    for (double d : values) put_u64_le(out, std::bit_cast<std::uint64_t>(d));
}

json rng_to_json(const RngState& st) {
    json j;
    j["s"] = st.s;
    j["has_gauss"] = st.has_gauss;
    j["gauss"] = st.gauss;
    return j;
}

RngState rng_from_json(const json& j) {
    RngState st;
    const auto& s = j.at("s");
    for (std::size_t i = 0; i < 4; ++i) st.s[i] = s.at(i).get<std::uint64_t>();
    st.has_gauss = j.at("has_gauss").get<bool>();
    st.gauss = j.at("gauss").get<double>();
    return st;
}

json model_config_to_json(const ModelConfig& m) {
    json j;
    j["kind"] = m.kind;
    j["input_dim"] = m.input_dim;
    j["hidden_dims"] = m.hidden_dims;
    j["embed_dim"] = m.embed_dim;
    j["embed_max_period"] = m.embed_max_period;
    j["image"] = {{"channels", m.image.channels},
                  {"height", m.image.height},
                  {"width", m.image.width}};
    j["features"] = m.features;
    return j;
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig m;
    m.kind = j.at("kind").get<std::string>();
    m.input_dim = j.at("input_dim").get<std::size_t>();
    m.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
    m.embed_dim = j.at("embed_dim").get<std::size_t>();
    m.embed_max_period = j.at("embed_max_period").get<double>();
    m.image.channels = j.at("image").at("channels").get<std::size_t>();
    m.image.height = j.at("image").at("height").get<std::size_t>();
    m.image.width = j.at("image").at("width").get<std::size_t>();
    m.features = j.at("features").get<std::size_t>();
    return m;
}

json config_to_json(const TrainConfig& cfg) {
    json j;
    j["lambda"] = cfg.lambda;
    j["ema_decay"] = cfg.ema_decay;
    j["graph_sync_interval"] = cfg.graph_sync_interval;
    j["total_iterations"] = cfg.total_iterations;
    j["batch_size"] = cfg.batch_size;
    j["learning_rate"] = cfg.learning_rate;
    j["optimizer"] = to_string(cfg.optimizer);
    j["adam_beta1"] = cfg.adam_beta1;
    j["adam_beta2"] = cfg.adam_beta2;
    j["adam_eps"] = cfg.adam_eps;
    j["seed"] = cfg.seed;
    j["loss_variant"] = to_string(cfg.loss_variant);
    j["disable_relax"] = cfg.disable_relax;
    j["total_timesteps"] = cfg.total_timesteps;
    j["beta_start"] = cfg.beta_start;
    j["beta_end"] = cfg.beta_end;
    j["schedule_kind"] = cfg.schedule_kind;
    j["model"] = model_config_to_json(cfg.model);
    j["log_interval"] = cfg.log_interval;
    j["checkpoint_interval"] = cfg.checkpoint_interval;
    return j;
}

TrainConfig config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.lambda = j.at("lambda").get<double>();
    cfg.ema_decay = j.at("ema_decay").get<double>();
    cfg.graph_sync_interval = j.at("graph_sync_interval").get<long>();
    cfg.total_iterations = j.at("total_iterations").get<long>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.optimizer = optimizer_kind_from_string(j.at("optimizer").get<std::string>());
    cfg.adam_beta1 = j.at("adam_beta1").get<double>();
    cfg.adam_beta2 = j.at("adam_beta2").get<double>();
    cfg.adam_eps = j.at("adam_eps").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.loss_variant = loss_variant_from_string(j.at("loss_variant").get<std::string>());
    cfg.disable_relax = j.at("disable_relax").get<bool>();
    cfg.total_timesteps = j.at("total_timesteps").get<int>();
    cfg.beta_start = j.at("beta_start").get<double>();
    cfg.beta_end = j.at("beta_end").get<double>();
    cfg.schedule_kind = j.at("schedule_kind").get<std::string>();
    cfg.model = model_config_from_json(j.at("model"));
    cfg.log_interval = j.at("log_interval").get<long>();
    cfg.checkpoint_interval = j.at("checkpoint_interval").get<long>();
    return cfg;
}

void append_arrays(json& directory, std::string& payload, const std::string& prefix,
                   const ParamSet& params) {
    for (const auto& arr : params) {
        json entry;
        entry["name"] = prefix + "/" + arr.name;
        entry["shape"] = arr.shape;
        entry["dtype"] = "f64";
        directory.push_back(entry);
        append_f64_le(payload, arr.data);
    }
}

}  // namespace

Checkpoint make_checkpoint(const TrainState& state, const TrainConfig& cfg,
                           const Normalization& normalization) {
    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.iteration = state.iteration;
    ckpt.base = state.models.base->params();
    ckpt.ema = state.models.ema->params();
    ckpt.graph = state.models.graph->params();
    ckpt.optimizer_state = state.optimizer_state;
    ckpt.noise_rng = state.noise_rng.state();
    ckpt.step_rng = state.step_rng.state();
    ckpt.normalization = normalization;
    return ckpt;
}

TrainState restore_state(const Checkpoint& ckpt) {
    TrainState state = init_train_state(ckpt.config);
    state.iteration = ckpt.iteration;

    require_same_layout(state.models.base->params(), ckpt.base, "restore_state(base)");
    require_same_layout(state.models.ema->params(), ckpt.ema, "restore_state(ema)");
    require_same_layout(state.models.graph->params(), ckpt.graph, "restore_state(graph)");
    state.models.base->params() = ckpt.base;
    state.models.ema->params() = ckpt.ema;
    state.models.graph->params() = ckpt.graph;
    state.optimizer_state = ckpt.optimizer_state;

    state.noise_rng.set_state(ckpt.noise_rng);
    state.step_rng.set_state(ckpt.step_rng);
    return state;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    json manifest;
    manifest["format_version"] = ckpt.format_version;
    manifest["iteration"] = ckpt.iteration;
    manifest["config"] = config_to_json(ckpt.config);
    manifest["rng"] = {{"noise", rng_to_json(ckpt.noise_rng)},
                       {"steps", rng_to_json(ckpt.step_rng)}};
    manifest["normalization"] = {{"mean", ckpt.normalization.mean},
                                 {"scale", ckpt.normalization.scale}};

    json directory = json::array();
    std::string payload;
    append_arrays(directory, payload, "base", ckpt.base);
    append_arrays(directory, payload, "ema", ckpt.ema);
    append_arrays(directory, payload, "graph", ckpt.graph);
    append_arrays(directory, payload, "opt", ckpt.optimizer_state);
    manifest["arrays"] = std::move(directory);

    const std::string manifest_text = manifest.dump();
    std::string out(kMagic, sizeof(kMagic));
    put_u64_le(out, manifest_text.size());
    out += manifest_text;
    out += payload;

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (bytes.size() < sizeof(kMagic) + 8 ||
        std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("load_checkpoint: " + path.string() +
                                 " is not a checkpoint file");
    }
    const std::uint64_t manifest_len =
        get_u64_le(reinterpret_cast<const unsigned char*>(bytes.data()) + sizeof(kMagic));
    const std::size_t manifest_off = sizeof(kMagic) + 8;
    if (manifest_off + manifest_len > bytes.size()) {
        throw std::runtime_error("load_checkpoint: truncated manifest in " + path.string());
    }

    const json manifest = json::parse(bytes.substr(manifest_off, manifest_len));
    const int version = manifest.at("format_version").get<int>();
    if (version != Checkpoint::kFormatVersion) {
        throw std::runtime_error("load_checkpoint: unsupported format_version " +
                                 std::to_string(version) + " in " + path.string() +
                                 " (expected " + std::to_string(Checkpoint::kFormatVersion) +
                                 ")");
    }

    Checkpoint ckpt;
    ckpt.format_version = version;
    ckpt.iteration = manifest.at("iteration").get<long>();
    ckpt.config = config_from_json(manifest.at("config"));
    ckpt.noise_rng = rng_from_json(manifest.at("rng").at("noise"));
    ckpt.step_rng = rng_from_json(manifest.at("rng").at("steps"));
    ckpt.normalization.mean = manifest.at("normalization").at("mean").get<std::vector<double>>();
    ckpt.normalization.scale =
        manifest.at("normalization").at("scale").get<std::vector<double>>();

    std::size_t offset = manifest_off + manifest_len;
    for (const auto& entry : manifest.at("arrays")) {
        const std::string full_name = entry.at("name").get<std::string>();
        const auto slash = full_name.find('/');
        if (slash == std::string::npos) {
            throw std::runtime_error("load_checkpoint: malformed array name " + full_name);
        }
        if (entry.at("dtype").get<std::string>() != "f64") {
            throw std::runtime_error("load_checkpoint: unsupported dtype for " + full_name);
        }

        NamedArray arr;
        arr.name = full_name.substr(slash + 1);
        arr.shape = entry.at("shape").get<std::vector<std::size_t>>();
        std::size_t count = 1;
        for (auto d : arr.shape) count *= d;
        if (offset + count * 8 > bytes.size()) {
            throw std::runtime_error("load_checkpoint: truncated array payload in " +
                                     path.string());
        }
        arr.data.resize(count);
        const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + offset;
        for (std::size_t i = 0; i < count; ++i) {
            arr.data[i] = std::bit_cast<double>(get_u64_le(p + i * 8));
        }
        offset += count * 8;

        const std::string group = full_name.substr(0, slash);
        if (group == "base") ckpt.base.push_back(std::move(arr));
        else if (group == "ema") ckpt.ema.push_back(std::move(arr));
        else if (group == "graph") ckpt.graph.push_back(std::move(arr));
        else if (group == "opt") ckpt.optimizer_state.push_back(std::move(arr));
        else throw std::runtime_error("load_checkpoint: unknown array group " + group);
    }
    return ckpt;
}

}  // namespace shortdf
