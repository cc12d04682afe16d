// SPDX-License-Identifier: Apache-2.0
//
// shortdf command line: train / sample / eval / diagnose.

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "shortdf/checkpoint.hpp"
#include "shortdf/config_file.hpp"
#include "shortdf/datasets.hpp"
#include "shortdf/diffusion.hpp"
#include "shortdf/metrics.hpp"
#include "shortdf/residual.hpp"
#include "shortdf/sample_io.hpp"
#include "shortdf/sampler.hpp"
#include "shortdf/step_graph.hpp"
#include "shortdf/trainer.hpp"

namespace fs = std::filesystem;
using namespace shortdf;

namespace {

// Exclusive lock file; one writer per run directory.
class RunLock {
public:
    explicit RunLock(const fs::path& dir) : path_(dir / "lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            throw std::runtime_error("run directory is locked by another process: " +
                                     path_.string());
        }
    }
    ~RunLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

std::string timestamp_for_dirname() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&tt));
    return buf;
}

void infer_model_dims(RunConfig& cfg, const Dataset& data) {
    cfg.train.model.input_dim = data.data.dims;
    if (cfg.train.model.kind == "conv") {
        if (!data.data.image) {
            throw std::invalid_argument("conv model requires an image dataset");
        }
        cfg.train.model.image = *data.data.image;
    }
}

std::string checkpoint_name(long iteration) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "ckpt_%08ld.sdck", iteration);
    return buf;
}

std::unique_ptr<Denoiser> model_from_checkpoint(const Checkpoint& ckpt,
                                                const std::string& role) {
    auto model = build_denoiser(ckpt.config.model, ckpt.config.seed);
    const ParamSet* params = nullptr;
    if (role == "base") params = &ckpt.base;
    else if (role == "ema") params = &ckpt.ema;
    else if (role == "graph") params = &ckpt.graph;
    else throw std::invalid_argument("unknown model role '" + role + "'");
    require_same_layout(model->params(), *params, "model_from_checkpoint");
    model->params() = *params;
    return model;
}

int run_train(const std::string& config_path, const std::string& resume_path,
              const std::string& out_dir, std::optional<std::uint64_t> seed_override,
              std::optional<long> iterations_override, bool disable_relax, bool baseline) {
    RunConfig cfg;
    TrainState state;
    Normalization normalization;

    if (!resume_path.empty()) {
        Checkpoint ckpt = load_checkpoint(resume_path);
        cfg.train = ckpt.config;
        normalization = ckpt.normalization;
        state = restore_state(ckpt);
        // the data source is not stored inside the checkpoint config; require
        // the config file alongside for dataset identity
        if (config_path.empty()) {
            throw std::invalid_argument("--resume also needs --config for the data source");
        }
        RunConfig file_cfg = parse_config_file(config_path);
        cfg.dataset = file_cfg.dataset;
        cfg.dataset.normalization = normalization;
    } else {
        cfg = parse_config_file(config_path);
    }

    if (seed_override) cfg.train.seed = *seed_override;
    if (iterations_override) cfg.train.total_iterations = *iterations_override;
    if (disable_relax) cfg.train.disable_relax = true;

    Dataset data = generate(cfg.dataset);
    if (resume_path.empty()) {
        infer_model_dims(cfg, data);
        normalization = data.normalization;
    }

    const NoiseSchedule schedule = make_schedule(cfg.train);

    fs::path run_dir = out_dir.empty()
                           ? fs::path("runs") / (config_hash(cfg) + "-" + timestamp_for_dirname())
                           : fs::path(out_dir);
    fs::create_directories(run_dir);
    RunLock lock(run_dir);

    {
        std::ofstream snapshot(run_dir / "config.resolved", std::ios::trunc);
        snapshot << serialize_config(cfg);
    }

    std::ofstream log_file(run_dir / "train_log.jsonl", std::ios::trunc);
    if (!log_file) throw std::runtime_error("cannot open training log in " + run_dir.string());

    TrainCallbacks callbacks;
    callbacks.on_log = [&](const TrainState&, const TrainLogRecord& rec) {
        log_file << to_json_line(rec) << "\n";
    };
    callbacks.on_checkpoint = [&](const TrainState& st) {
        save_checkpoint(make_checkpoint(st, cfg.train, normalization),
                        run_dir / checkpoint_name(st.iteration));
    };

    if (resume_path.empty()) {
        state = init_train_state(cfg.train);
    }

    try {
        continue_training(state, cfg.train, data.data, schedule, callbacks, baseline);
    } catch (const TrainingAbort& abort) {
        log_file.flush();
        std::cerr << abort.what() << "\n";
        return 3;
    }

    const fs::path final_path = run_dir / checkpoint_name(state.iteration);
    save_checkpoint(make_checkpoint(state, cfg.train, normalization), final_path);
    std::error_code ec;
    fs::remove(run_dir / "ckpt_final.sdck", ec);
    fs::copy_file(final_path, run_dir / "ckpt_final.sdck", fs::copy_options::overwrite_existing);

    std::cout << "run dir: " << run_dir.string() << "\n";
    std::cout << "final checkpoint: " << final_path.string() << "\n";
    return 0;
}

int run_sample(const std::string& checkpoint_path, int nfe, const std::string& strategy,
               const std::string& explicit_steps, std::size_t batch, std::uint64_t seed,
               double sigma, const std::string& role, const std::string& out_dir) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    if (nfe > ckpt.config.total_timesteps) {
        std::cerr << "requested NFE " << nfe << " exceeds schedule length "
                  << ckpt.config.total_timesteps << "\n";
        return 2;
    }

    auto model = model_from_checkpoint(ckpt, role);
    const NoiseSchedule schedule = make_schedule(ckpt.config);

    SamplingPath path;
    if (!explicit_steps.empty()) {
        std::vector<int> steps;
        std::istringstream ss(explicit_steps);
        std::string item;
        while (std::getline(ss, item, ',')) steps.push_back(std::stoi(item));
        path = make_step_schedule(ckpt.config.total_timesteps, static_cast<int>(steps.size()),
                                  StepStrategy::explicit_list, steps);
    } else {
        const StepStrategy st =
            strategy == "quadratic" ? StepStrategy::quadratic : StepStrategy::uniform;
        path = make_step_schedule(ckpt.config.total_timesteps, nfe, st);
    }

    Sample generated = sample(*model, schedule, path, batch, sigma, seed);
    Sample in_data_space = denormalize(generated, ckpt.normalization);
    in_data_space.image = generated.image;

    fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    fs::create_directories(dir);
    char stem[64];
    std::snprintf(stem, sizeof(stem), "samples_nfe%d_seed%llu", static_cast<int>(path.steps.size()),
                  static_cast<unsigned long long>(seed));

    SampleFileMeta meta;
    meta.seed = seed;
    meta.sigma_n = sigma;
    meta.path = path.steps;
    meta.model_role = role;
    meta.checkpoint_id = fs::path(checkpoint_path).filename().string();
    write_sample_file(dir / (std::string(stem) + ".bin"), in_data_space, meta);
    if (in_data_space.dims == 2) {
        write_sample_text(dir / (std::string(stem) + ".txt"), in_data_space);
    }
    if (in_data_space.image) {
        write_contact_sheet(dir / (std::string(stem) + ".png"), in_data_space);
    }

    std::cout << "model evaluations: " << path.steps.size() << "\n";
    std::cout << "wrote " << (dir / (std::string(stem) + ".bin")).string() << "\n";
    return 0;
}

int run_eval(const std::vector<std::string>& checkpoint_paths,
             const std::vector<std::string>& labels, const std::string& nfe_csv,
             const std::string& metric, std::size_t batch, std::uint64_t seed,
             const std::string& role, const std::string& ref_kind, std::size_t ref_n,
             std::uint64_t ref_seed, int projections, const std::string& out_dir) {
    if (checkpoint_paths.empty()) {
        std::cerr << "eval needs at least one --checkpoint\n";
        return 2;
    }

    std::vector<Checkpoint> checkpoints;
    for (const auto& path : checkpoint_paths) checkpoints.push_back(load_checkpoint(path));

    std::vector<int> nfe_list;
    {
        std::istringstream ss(nfe_csv);
        std::string item;
        while (std::getline(ss, item, ',')) nfe_list.push_back(std::stoi(item));
    }

    // reference drawn in the training data space, then normalized with the
    // first checkpoint's transform so metrics compare like with like
    DatasetSpec ref_spec;
    ref_spec.kind = dataset_kind_from_string(ref_kind);
    ref_spec.n = ref_n;
    ref_spec.seed = ref_seed;
    ref_spec.normalization = checkpoints.front().normalization;
    Dataset reference = generate(ref_spec);

    std::vector<std::unique_ptr<Denoiser>> models;
    std::vector<NoiseSchedule> schedules;
    std::vector<SweepEntry> entries;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        models.push_back(model_from_checkpoint(checkpoints[i], role));
        schedules.push_back(make_schedule(checkpoints[i].config));
    }
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const std::string label = i < labels.size()
                                      ? labels[i]
                                      : fs::path(checkpoint_paths[i]).stem().string();
        entries.push_back({label, models[i].get(), &schedules[i]});
    }

    SweepConfig cfg;
    cfg.batch = batch;
    cfg.seed = seed;
    cfg.metric = metric_kind_from_string(metric);
    cfg.sw_projections = projections;

    NfeSweepReport report = nfe_sweep(entries, nfe_list, reference.data, cfg);

    fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "sweep.csv", std::ios::trunc);
        f << to_csv(report);
    }
    {
        std::ofstream f(dir / "sweep.txt", std::ios::trunc);
        f << to_aligned_table(report);
    }
    {
        std::ofstream f(dir / "sweep.svg", std::ios::trunc);
        f << to_svg_plot(report);
    }
    std::cout << to_aligned_table(report);
    return 0;
}

int run_diagnose(const std::string& checkpoint_path, int pairs, std::size_t batch,
                 std::uint64_t seed, bool perfect_predictor, int oracle_graphs,
                 const std::string& dataset_kind, std::size_t data_n) {
    std::unique_ptr<Denoiser> base, ema, graph;
    NoiseSchedule schedule;
    Dataset data;

    if (!checkpoint_path.empty()) {
        Checkpoint ckpt = load_checkpoint(checkpoint_path);
        base = model_from_checkpoint(ckpt, "base");
        ema = model_from_checkpoint(ckpt, "ema");
        graph = model_from_checkpoint(ckpt, "graph");
        schedule = make_schedule(ckpt.config);

        DatasetSpec spec;
        spec.kind = dataset_kind_from_string(dataset_kind);
        spec.n = data_n;
        spec.seed = seed + 1;
        spec.normalization = ckpt.normalization;
        data = generate(spec);
    } else {
        DatasetSpec spec;
        spec.kind = dataset_kind_from_string(dataset_kind);
        spec.n = data_n;
        spec.seed = seed + 1;
        data = generate(spec);
        schedule = make_linear_schedule(100, 1e-3, 0.2);
        base = make_mlp_denoiser(data.data.dims, {32, 32}, 16, seed);
        ema = base->clone();
        graph = base->clone();
    }

    RngStream step_rng(seed, "diagnose/steps");
    RngStream noise_rng(seed, "diagnose/noise");

    double mean_dist_t = 0.0, mean_edge = 0.0, mean_cond = 0.0;
    double mean_lhs = 0.0, mean_rhs = 0.0;
    for (int i = 0; i < pairs; ++i) {
        const auto [t, k] = sample_step_pair(step_rng, schedule.total_timesteps);

        Sample x0 = Sample::zeros(batch, data.data.dims);
        for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t src = noise_rng.next_below(data.data.batch);
            for (std::size_t d = 0; d < data.data.dims; ++d) x0.at(b, d) = data.data.at(src, d);
        }
        Sample eps = gaussian_sample(noise_rng, batch, data.data.dims);
        Sample x_t = forward_noise(x0, eps, t, schedule);

        std::unique_ptr<Denoiser> oracle;
        const Denoiser* d_t = base.get();
        const Denoiser* d_k = ema.get();
        const Denoiser* d_g = graph.get();
        if (perfect_predictor) {
            oracle = make_fixed_output_denoiser(eps);
            d_t = d_k = d_g = oracle.get();
        }

        EdgeEvaluation eval = evaluate_edge(x0, x_t, t, k, *d_t, *d_k, *d_g, schedule);
        double dt = 0.0, eg = 0.0;
        for (double v : eval.dist_t.data) dt += v;
        for (double v : eval.edge.data) eg += v;
        mean_dist_t += dt / static_cast<double>(eval.dist_t.size());
        mean_edge += eg / static_cast<double>(eval.edge.size());
        mean_cond += cond_rate(eval.cond);

        // two-hop residual walk across the same pair
        SamplingPath path;
        path.steps = {t, k};
        path.strategy = StepStrategy::explicit_list;
        ResidualReport rr = path_residual_report(x0, path, *d_t, schedule, eps);
        double lhs = 0.0, rhs = 0.0;
        for (double v : rr.path_residual_lhs.data) lhs += std::fabs(v);
        for (double v : rr.path_residual_rhs.data) rhs += std::fabs(v);
        mean_lhs += lhs / static_cast<double>(rr.path_residual_lhs.size());
        mean_rhs += rhs / static_cast<double>(rr.path_residual_rhs.size());
        if (i + 1 == pairs) {
            std::printf("last pair (t=%d, k=%d) residual record:\n%s", t, k,
                        to_text_record(rr).c_str());
        }
    }

    std::printf("pairs sampled:        %d\n", pairs);
    std::printf("mean |R(t,0)|:        %.6g\n", mean_dist_t / pairs);
    std::printf("mean edge(k,t):       %.6g\n", mean_edge / pairs);
    std::printf("cond firing rate:     %.6g\n", mean_cond / pairs);
    std::printf("mean |path lhs|:      %.6g\n", mean_lhs / pairs);
    std::printf("mean |path rhs|:      %.6g\n", mean_rhs / pairs);

    // discrete relaxation self-test against the exhaustive oracle
    int matched = 0;
    for (int g = 0; g < oracle_graphs; ++g) {
        StepGraph dag = make_random_dag(3 + static_cast<int>(g % 48), 0.3, 1.0, 2.0,
                                        seed + static_cast<std::uint64_t>(g));
        const auto truth = exact_shortest(dag);
        const auto relaxed =
            relaxation_fixpoint(dag, SweepOrder::topological, 1 + static_cast<int>(dag.edges.size()));
        bool ok = relaxed.converged;
        if (ok) {
            for (const auto& [node, value] : truth) {
                if (std::fabs(relaxed.dist.at(node) - value) > 1e-12) {
                    ok = false;
                    break;
                }
            }
        }
        matched += ok ? 1 : 0;
    }
    std::printf("oracle self-test:     %d/%d graphs matched\n", matched, oracle_graphs);
    return matched == oracle_graphs ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shortest-path diffusion laboratory"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "run the multi-state training loop");
    std::string config_path, resume_path, out_dir;
    std::optional<std::uint64_t> seed_override;
    std::optional<long> iterations_override;
    bool disable_relax = false, baseline = false;
    train->add_option("--config", config_path, "config file");
    train->add_option("--resume", resume_path, "checkpoint to resume from");
    train->add_option("--out", out_dir, "run directory (default runs/<hash>-<time>)");
    train->add_option("--seed", seed_override, "override config seed");
    train->add_option("--iterations", iterations_override, "override iteration count");
    train->add_flag("--disable-relax", disable_relax, "train with the noise loss only");
    train->add_flag("--ddim-baseline", baseline,
                    "use the reference noise-loss-only loop (shares rng streams)");

    // sample
    auto* smp = app.add_subcommand("sample", "generate from a checkpoint");
    std::string s_checkpoint, s_strategy = "uniform", s_steps, s_role = "base", s_out;
    int s_nfe = 10;
    std::size_t s_batch = 1000;
    std::uint64_t s_seed = 0;
    double s_sigma = 0.0;
    smp->add_option("--checkpoint", s_checkpoint, "checkpoint file")->required();
    smp->add_option("--nfe", s_nfe, "number of model evaluations");
    smp->add_option("--strategy", s_strategy, "uniform | quadratic");
    smp->add_option("--steps", s_steps, "explicit comma-separated step list");
    smp->add_option("--batch", s_batch, "number of samples");
    smp->add_option("--seed", s_seed, "sampling seed");
    smp->add_option("--sigma", s_sigma, "stochasticity sigma_n");
    smp->add_option("--model", s_role, "base | ema");
    smp->add_option("--out", s_out, "output directory");

    // eval
    auto* ev = app.add_subcommand("eval", "NFE sweep over checkpoints");
    std::vector<std::string> e_checkpoints, e_labels;
    std::string e_nfe = "1,2,5,10", e_metric = "sliced_wasserstein", e_role = "base";
    std::string e_ref_kind = "gaussian_mixture_8", e_out;
    std::size_t e_batch = 1000, e_ref_n = 2000;
    std::uint64_t e_seed = 0, e_ref_seed = 9001;
    int e_projections = 64;
    ev->add_option("--checkpoint", e_checkpoints, "checkpoint file (repeatable)")->required();
    ev->add_option("--label", e_labels, "method label per checkpoint");
    ev->add_option("--nfe", e_nfe, "comma-separated NFE list");
    ev->add_option("--metric", e_metric, "mmd_rbf | sliced_wasserstein | fid_proxy");
    ev->add_option("--batch", e_batch, "samples per row");
    ev->add_option("--seed", e_seed, "sampling seed (shared across methods)");
    ev->add_option("--model", e_role, "base | ema");
    ev->add_option("--reference-kind", e_ref_kind, "reference dataset kind");
    ev->add_option("--reference-n", e_ref_n, "reference set size");
    ev->add_option("--reference-seed", e_ref_seed, "reference seed (disjoint from training)");
    ev->add_option("--projections", e_projections, "sliced-wasserstein projections");
    ev->add_option("--out", e_out, "output directory");

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "residual diagnostics and oracle self-test");
    std::string d_checkpoint, d_dataset = "gaussian_mixture_8";
    int d_pairs = 16, d_oracle = 1000;
    std::size_t d_batch = 64, d_n = 1024;
    std::uint64_t d_seed = 0;
    bool d_perfect = false;
    diag->add_option("--checkpoint", d_checkpoint, "checkpoint file (fresh model if absent)");
    diag->add_option("--pairs", d_pairs, "number of (t, k) pairs to sample");
    diag->add_option("--batch", d_batch, "batch per pair");
    diag->add_option("--seed", d_seed, "rng seed");
    diag->add_flag("--perfect-predictor", d_perfect, "inject the true noise as the prediction");
    diag->add_option("--oracle-graphs", d_oracle, "random DAG count for the self-test");
    diag->add_option("--dataset", d_dataset, "data source kind");
    diag->add_option("--data-n", d_n, "data source size");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            if (config_path.empty() && resume_path.empty()) {
                std::cerr << "train needs --config (or --resume with --config)\n";
                return 2;
            }
            return run_train(config_path, resume_path, out_dir, seed_override,
                             iterations_override, disable_relax, baseline);
        }
        if (smp->parsed()) {
            return run_sample(s_checkpoint, s_nfe, s_strategy, s_steps, s_batch, s_seed,
                              s_sigma, s_role, s_out);
        }
        if (ev->parsed()) {
            return run_eval(e_checkpoints, e_labels, e_nfe, e_metric, e_batch, e_seed, e_role,
                            e_ref_kind, e_ref_n, e_ref_seed, e_projections, e_out);
        }
        if (diag->parsed()) {
            return run_diagnose(d_checkpoint, d_pairs, d_batch, d_seed, d_perfect, d_oracle,
                                d_dataset, d_n);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
