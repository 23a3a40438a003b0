#include "modadd/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "modadd/parallel.hpp"
#include "modadd/structure_table.hpp"
#include "modadd/viz.hpp"

namespace modadd {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ostream& out(std::ostream* log) {
    static std::ostream null_stream(nullptr);
    return log ? *log : null_stream;
}

std::string epoch_tag(int epoch) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", epoch);
    return buf;
}

CommandResult failure(int code, std::string message) {
    return CommandResult{code, {}, std::move(message)};
}

std::optional<PairDataset> manifest_split(const CommandContext& ctx, const ExperimentConfig& config) {
    if (!ctx.config_path) {
        return std::nullopt;
    }
    const json j = read_json(*ctx.config_path);
    if (!j.is_object() || !j.contains("split") || !j.contains("run_id")) {
        return std::nullopt;
    }
    // Only replay the stored split if the seed still matches the manifest.
    if (j.value("seed", config.train.seed) != config.train.seed) {
        return std::nullopt;
    }
    PairDataset ds;
    ds.modulus = config.train.model.modulus;
    ds.train = pairs_from_json(j["split"]["train"]);
    ds.val = pairs_from_json(j["split"]["val"]);
    return ds;
}

void write_sweep_report(const fs::path& dir, std::span<const RunRecord> records) {
    const std::vector<StructureRow> rows = structure_table(records);
    write_text(dir / "report.csv", structure_table_csv(rows));
    write_text(dir / "report.json", structure_table_json(rows).dump(2) + "\n");
}

std::vector<fs::path> run_dirs(const fs::path& sweep_dir) {
    std::vector<fs::path> dirs;
    const fs::path runs = sweep_dir / "runs";
    if (!fs::is_directory(runs)) {
        return dirs;
    }
    for (const auto& entry : fs::directory_iterator(runs)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

}  // namespace

ExperimentConfig resolve_config(const CommandContext& ctx) {
    ExperimentConfig config = ctx.config_path ? load_experiment(*ctx.config_path) : ExperimentConfig{};
    apply(config, ctx.overrides);
    config.validate();
    return config;
}

CommandResult cmd_train(const CommandContext& ctx) {
    const ExperimentConfig config = resolve_config(ctx);
    const std::optional<PairDataset> split = manifest_split(ctx, config);
    const fs::path dir = fs::path(config.output_dir) / run_id("train", config);
    out(ctx.log) << "train: wd=" << config.train.optim.weight_decay << " seed=" << config.train.seed << " -> "
                 << dir.string() << "\n";

    const TrainTrace trace = train_run(config.train, split);
    const RunRecord record = make_record(config.train, trace, config.circle_threshold);
    write_train_run(dir, config, trace, record);
    if (trace.failure) {
        return CommandResult{exit_code::kNumerical, dir, *trace.failure};
    }
    out(ctx.log) << "train: val_acc=" << record.final_val_accuracy << " circle=" << record.structure.is_circle
                 << " imperfections=" << record.structure.imperfections << "\n";
    return CommandResult{exit_code::kOk, dir, {}};
}

CommandResult cmd_sweep(const CommandContext& ctx) {
    const ExperimentConfig config = resolve_config(ctx);
    const fs::path dir = fs::path(config.output_dir) / ("sweep-" + run_id("sweep", config));
    fs::create_directories(dir / "runs");
    json sweep_manifest;
    sweep_manifest["tool"] = "modadd";
    sweep_manifest["version"] = kToolVersion;
    sweep_manifest["kind"] = "sweep";
    sweep_manifest["config"] = to_json(config);
    write_text(dir / "sweep.json", sweep_manifest.dump(2) + "\n");

    const std::vector<std::uint64_t> seeds = config.sweep.seeds();
    out(ctx.log) << "sweep: " << config.sweep.weight_decays.size() << " weight decays x " << seeds.size()
                 << " seeds -> " << dir.string() << "\n";
    const RunObserver observer = [&](const TrainTrace& trace, RunRecord& record) {
        ExperimentConfig run_config = config;
        run_config.train = record.config;
        run_config.sim.seed = record.config.seed;
        record.artifact_dir = dir / "runs" / run_id("train", run_config);
        write_train_run(record.artifact_dir, run_config, trace, record);
    };
    const std::vector<RunRecord> records = sweep(config.train, config.sweep.weight_decays, seeds, ctx.jobs,
                                                 observer, config.circle_threshold);
    write_sweep_report(dir, records);
    const auto failed = std::count_if(records.begin(), records.end(), [](const RunRecord& r) { return r.failure; });
    if (failed > 0) {
        out(ctx.log) << "sweep: " << failed << " run(s) diverged; see their manifests\n";
    }
    return CommandResult{exit_code::kOk, dir, {}};
}

CommandResult cmd_simulate(const CommandContext& ctx) {
    const ExperimentConfig config = resolve_config(ctx);
    const fs::path dir = fs::path(config.output_dir) / ("sim-" + run_id("simulate", config));
    out(ctx.log) << "simulate: f_a=" << config.sim.alignment << " seed=" << config.sim.seed << " -> " << dir.string()
                 << "\n";
    const SimResult sim = simulate(config.sim, true);

    fs::create_directories(dir / "figures");
    write_text(dir / "positions.csv", matrix_csv(sim.final_state));
    std::string trajectory = "step,particle";
    for (int d = 0; d < config.sim.dim; ++d) {
        trajectory += ",c" + std::to_string(d);
    }
    trajectory += "\n";
    char buf[40];
    for (std::size_t s = 0; s < sim.trajectory.size(); ++s) {
        const ParticleState& state = sim.trajectory[s];
        for (std::size_t i = 0; i < state.rows; ++i) {
            trajectory += std::to_string(s) + "," + std::to_string(i);
            for (double v : state.row(i)) {
                std::snprintf(buf, sizeof buf, ",%.17g", v);
                trajectory += buf;
            }
            trajectory += "\n";
        }
    }
    write_text(dir / "trajectory.csv", trajectory);

    json manifest;
    manifest["tool"] = "modadd";
    manifest["version"] = kToolVersion;
    manifest["kind"] = "simulate";
    manifest["run_id"] = run_id("simulate", config);
    manifest["config"] = to_json(config);
    manifest["seed"] = config.sim.seed;
    manifest["artifacts"] = {{"positions", "positions.csv"}, {"trajectory", "trajectory.csv"}};
    manifest["status"] = sim.failure ? "aborted" : "ok";
    if (sim.failure) {
        manifest["failure"] = *sim.failure;
    } else {
        const CircleTest circle = test_circle(sim.final_state, config.circle_threshold);
        manifest["summary"] = {{"steps_completed", sim.steps_completed},
                               {"is_circle", circle.circle},
                               {"circle_ratio", circle.ratio},
                               {"imperfections", count_imperfections(sim.final_state)}};
        if (config.sim.dim == 2) {
            json figures = json::array();
            for (std::size_t s : {std::size_t{0}, sim.trajectory.size() - 1}) {
                const fs::path file = dir / "figures" / ("particles_" + epoch_tag(static_cast<int>(s)) + ".svg");
                write_text(file, render_scatter(scatter_spec(sim.trajectory[s], "particles step " + std::to_string(s))));
                figures.push_back(fs::relative(file, dir).generic_string());
            }
            manifest["artifacts"]["figures"] = figures;
        }
    }
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    if (sim.failure) {
        return CommandResult{exit_code::kNumerical, dir, *sim.failure};
    }
    return CommandResult{exit_code::kOk, dir, {}};
}

CommandResult cmd_sim_sweep(const CommandContext& ctx) {
    const ExperimentConfig config = resolve_config(ctx);
    const fs::path dir = fs::path(config.output_dir) / ("simsweep-" + run_id("sim-sweep", config));
    const std::vector<std::uint64_t> seeds = config.sweep.seeds();
    out(ctx.log) << "sim-sweep: " << config.sweep.alignment_values.size() << " f_a values x " << seeds.size()
                 << " seeds -> " << dir.string() << "\n";
    const SimSweepResult result =
        sim_sweep(config.sweep.alignment_values, seeds, config.sim, ctx.jobs, config.circle_threshold);

    std::string runs = "f_a,seed,aborted,is_circle,imperfections\n";
    for (const SimRunSummary& r : result.runs) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.4g,%llu,%d,%d,%d\n", r.alignment, static_cast<unsigned long long>(r.seed),
                      r.aborted ? 1 : 0, r.is_circle ? 1 : 0, r.imperfections);
        runs += buf;
    }
    write_text(dir / "runs.csv", runs);
    write_text(dir / "report.csv", sim_table_csv(result.rows));
    json report;
    report["config"] = to_json(config);
    report["rows"] = sim_table_json(result.rows);
    write_text(dir / "report.json", report.dump(2) + "\n");
    return CommandResult{exit_code::kOk, dir, {}};
}

CommandResult cmd_render(const fs::path& run_dir, const std::string& kind, std::ostream* log) {
    const RunPaths paths{run_dir};
    if (!fs::exists(paths.manifest())) {
        return failure(exit_code::kUsage, "no manifest.json in " + run_dir.string() + "; run 'train' or 'simulate' first");
    }
    const json manifest = read_json(paths.manifest());
    const ExperimentConfig config = experiment_from_json(manifest.at("config"));
    const bool is_sim = manifest.value("kind", "train") == "simulate";
    const bool all = kind == "all";
    if (!all && kind != "embeddings" && kind != "classifier" && kind != "projections") {
        return failure(exit_code::kUsage, "unknown render kind '" + kind +
                                              "' (expected embeddings, classifier, projections or all)");
    }
    fs::create_directories(paths.figures());
    std::size_t written = 0;

    if (is_sim) {
        if (kind == "classifier") {
            return failure(exit_code::kUsage, "classifier plots need a training run, not a simulation");
        }
        const fs::path positions = run_dir / "positions.csv";
        if (!fs::exists(positions)) {
            return failure(exit_code::kUsage, "missing positions.csv; run 'simulate' first");
        }
        const Matrix state = read_matrix_csv(positions);
        const std::string tag = epoch_tag(config.sim.steps);
        if (state.cols == 2 && (all || kind == "embeddings")) {
            write_text(paths.figures() / ("particles_" + tag + ".svg"), render_scatter(scatter_spec(state)));
            ++written;
        }
        if (kind == "projections" && state.cols < 3) {
            return failure(exit_code::kUsage, "projections need D >= 3; this simulation has D = " +
                                                  std::to_string(state.cols));
        }
        if (state.cols >= 3 && (all || kind == "projections")) {
            const auto docs = render_projections(state, static_cast<int>(state.rows));
            for (std::size_t k = 0; k < docs.size(); ++k) {
                write_text(paths.figures() / ("projections_" + tag + "_" + std::to_string(k) + ".svg"), docs[k]);
                ++written;
            }
        }
        out(log) << "render: wrote " << written << " figure(s) to " << paths.figures().string() << "\n";
        return CommandResult{exit_code::kOk, paths.figures(), {}};
    }

    const int dim = config.train.model.embed_dim;
    const int classes = config.train.model.modulus;
    if (kind == "projections" && dim < 3) {
        return failure(exit_code::kUsage,
                       "projections need embeddings with D >= 3; this run has D = " + std::to_string(dim));
    }
    if (kind == "classifier" && dim != 2) {
        return failure(exit_code::kUsage, "classifier maps need D = 2; this run has D = " + std::to_string(dim));
    }

    if (all || kind == "embeddings" || kind == "projections") {
        const json& snapshot_files = manifest.at("artifacts").at("snapshots");
        if (snapshot_files.empty()) {
            return failure(exit_code::kUsage, "run has no embedding snapshots; rerun 'train'");
        }
        for (const json& file : snapshot_files) {
            const fs::path path = run_dir / file.get<std::string>();
            if (!fs::exists(path)) {
                return failure(exit_code::kUsage, "missing snapshot " + path.string() + "; rerun 'train'");
            }
            const Matrix embedding = read_matrix_csv(path);
            const std::string stem = path.stem().string();  // epoch_NNNN
            const std::string tag = stem.substr(stem.find('_') + 1);
            if (dim == 2 && (all || kind == "embeddings")) {
                write_text(paths.figures() / ("embeddings_" + tag + ".svg"),
                           render_scatter(scatter_spec(embedding, "epoch " + tag)));
                ++written;
            }
            if (dim >= 3 && (all || kind == "projections")) {
                const auto docs = render_projections(embedding, classes, "epoch " + tag);
                for (std::size_t k = 0; k < docs.size(); ++k) {
                    write_text(paths.figures() / ("projections_" + tag + "_" + std::to_string(k) + ".svg"), docs[k]);
                    ++written;
                }
            }
        }
    }

    if (dim == 2 && (all || kind == "classifier")) {
        ModelParams params;
        try {
            params = read_final_params(paths);
        } catch (const std::runtime_error& e) {
            return failure(exit_code::kUsage, e.what());
        }
        const std::vector<Pair> train = pairs_from_json(manifest.at("split").at("train"));
        RasterSpec spec;
        spec.classes = classes;
        spec.overlay = pair_sum_points(params.embedding, train);
        const Bounds b = padded_bounds(spec.overlay);
        spec.raster = classifier_map(params, Region{b.x_min, b.x_max, b.y_min, b.y_max}, 256);
        const Image image = render_classifier(spec);
        const std::string tag = epoch_tag(config.train.epochs);
        write_text(paths.figures() / ("classifier_" + tag + ".ppm"), encode_ppm(image));
        write_text(paths.figures() / ("classifier_" + tag + ".png"), encode_png(image));
        written += 2;
    }
    out(log) << "render: wrote " << written << " figure(s) to " << paths.figures().string() << "\n";
    return CommandResult{exit_code::kOk, paths.figures(), {}};
}

CommandResult cmd_magnitudes(const fs::path& sweep_dir, std::ostream* log) {
    const std::vector<fs::path> dirs = run_dirs(sweep_dir);
    if (dirs.empty()) {
        return failure(exit_code::kUsage, "no finished runs under " + (sweep_dir / "runs").string());
    }
    std::map<double, std::vector<MagnitudeStats>> groups;
    for (const fs::path& dir : dirs) {
        const json manifest = read_json(RunPaths{dir}.manifest());
        if (manifest.value("status", "ok") != "ok") {
            out(log) << "magnitudes: skipping diverged run " << dir.filename().string() << "\n";
            continue;
        }
        const double wd = manifest.at("config").at("optimizer").at("weight_decay").get<double>();
        groups[wd].push_back(magnitude_stats(read_final_params(RunPaths{dir})));
    }
    std::string csv = "weight_decay,runs,W_h,b_h,W_o,b_o\n";
    json rows = json::array();
    for (const auto& [wd, stats] : groups) {
        if (stats.empty()) {
            out(log) << "magnitudes: weight decay " << wd << " has no finished runs, skipped\n";
            continue;
        }
        MagnitudeStats mean;
        for (const MagnitudeStats& s : stats) {
            mean.hidden_weight += s.hidden_weight;
            mean.hidden_bias += s.hidden_bias;
            mean.output_weight += s.output_weight;
            mean.output_bias += s.output_bias;
        }
        const double n = static_cast<double>(stats.size());
        mean.hidden_weight /= n;
        mean.hidden_bias /= n;
        mean.output_weight /= n;
        mean.output_bias /= n;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.4g,%zu,%.6g,%.6g,%.6g,%.6g\n", wd, stats.size(), mean.hidden_weight,
                      mean.hidden_bias, mean.output_weight, mean.output_bias);
        csv += buf;
        rows.push_back({{"weight_decay", wd},
                        {"runs", stats.size()},
                        {"W_h", mean.hidden_weight},
                        {"b_h", mean.hidden_bias},
                        {"W_o", mean.output_weight},
                        {"b_o", mean.output_bias}});
    }
    write_text(sweep_dir / "magnitudes.csv", csv);
    write_text(sweep_dir / "magnitudes.json", rows.dump(2) + "\n");
    out(log) << "magnitudes: " << rows.size() << " weight decay group(s)\n";
    return CommandResult{exit_code::kOk, sweep_dir / "magnitudes.csv", {}};
}

CommandResult cmd_report(const fs::path& sweep_dir, std::ostream* log) {
    const std::vector<fs::path> dirs = run_dirs(sweep_dir);
    if (dirs.empty()) {
        return failure(exit_code::kUsage, "no finished runs under " + (sweep_dir / "runs").string());
    }
    double threshold = kCircleThreshold;
    if (fs::exists(sweep_dir / "sweep.json")) {
        threshold = experiment_from_json(read_json(sweep_dir / "sweep.json").at("config")).circle_threshold;
    }
    std::vector<RunRecord> records;
    for (const fs::path& dir : dirs) {
        records.push_back(load_run_record(dir, threshold));
    }
    write_sweep_report(sweep_dir, records);
    out(log) << "report: " << records.size() << " runs summarized in " << (sweep_dir / "report.csv").string() << "\n";
    return CommandResult{exit_code::kOk, sweep_dir / "report.csv", {}};
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Modular-addition embedding lab: train, simulate, analyze and render"};
    app.require_subcommand(1);

    CommandContext ctx;
    ctx.log = &std::cerr;
    ctx.jobs = default_jobs();
    std::string config_path;
    std::uint64_t seed = 0;
    double weight_decay = 0.0;
    double alignment = 0.0;
    int epochs = 0;
    int steps = 0;
    std::string out_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file or run manifest");
        sub->add_option("--seed", seed, "Run seed (training and simulation)");
        sub->add_option("--weight-decay", weight_decay, "Decoupled weight decay");
        sub->add_option("--fa", alignment, "Alignment force constant f_a");
        sub->add_option("--epochs", epochs, "Training epochs");
        sub->add_option("--steps", steps, "Simulation steps");
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--jobs", ctx.jobs, "Worker threads for sweeps");
    };
    CLI::App* train = app.add_subcommand("train", "Train one model");
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Train weight decay x seed grid and build the structure table");
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "Run one particle simulation");
    CLI::App* sim_sweep_cmd = app.add_subcommand("sim-sweep", "Run f_a x seed particle simulations");
    for (CLI::App* sub : {train, sweep_cmd, simulate_cmd, sim_sweep_cmd}) {
        add_common(sub);
    }
    std::string target_dir;
    std::string kind = "all";
    CLI::App* render = app.add_subcommand("render", "Render figures for a run directory");
    render->add_option("run_dir", target_dir, "Run directory")->required();
    render->add_option("--kind", kind, "embeddings | classifier | projections | all");
    CLI::App* magnitudes = app.add_subcommand("magnitudes", "Mean |W_h|, |b_h|, |W_o|, |b_o| per weight decay");
    magnitudes->add_option("sweep_dir", target_dir, "Sweep directory")->required();
    CLI::App* report = app.add_subcommand("report", "Rebuild the structure table of a sweep directory");
    report->add_option("sweep_dir", target_dir, "Sweep directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_code::kOk : exit_code::kUsage;
    }

    auto given = [](CLI::App* sub, const char* flag) { return sub->count(flag) > 0; };
    CLI::App* active = app.get_subcommands().front();
    if (active != render && active != magnitudes && active != report) {
        if (given(active, "--config")) {
            ctx.config_path = config_path;
        }
        if (given(active, "--seed")) {
            ctx.overrides.seed = seed;
        }
        if (given(active, "--weight-decay")) {
            ctx.overrides.weight_decay = weight_decay;
        }
        if (given(active, "--fa")) {
            ctx.overrides.alignment = alignment;
        }
        if (given(active, "--epochs")) {
            ctx.overrides.epochs = epochs;
        }
        if (given(active, "--steps")) {
            ctx.overrides.steps = steps;
        }
        if (given(active, "--out")) {
            ctx.overrides.output_dir = out_dir;
        }
    }

    CommandResult result;
    try {
        if (active == train) {
            result = cmd_train(ctx);
        } else if (active == sweep_cmd) {
            result = cmd_sweep(ctx);
        } else if (active == simulate_cmd) {
            result = cmd_simulate(ctx);
        } else if (active == sim_sweep_cmd) {
            result = cmd_sim_sweep(ctx);
        } else if (active == render) {
            result = cmd_render(target_dir, kind, &std::cerr);
        } else if (active == magnitudes) {
            result = cmd_magnitudes(target_dir, &std::cerr);
        } else {
            result = cmd_report(target_dir, &std::cerr);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_code::kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kUsage;
    } catch (const DivergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_code::kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kUsage;
    }
    if (!result.message.empty()) {
        std::cerr << (result.code == exit_code::kNumerical ? "numerical failure: " : "error: ") << result.message
                  << "\n";
    }
    if (result.code == exit_code::kOk && !result.output.empty()) {
        std::cout << result.output.string() << "\n";
    }
    return result.code;
}

}  // namespace modadd
