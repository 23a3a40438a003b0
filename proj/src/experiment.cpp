#include "modadd/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace modadd {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::uint64_t> SweepConfig::seeds() const {
    std::vector<std::uint64_t> out;
    for (int i = 0; i < seed_count; ++i) {
        out.push_back(seed_start + static_cast<std::uint64_t>(i));
    }
    return out;
}

void ExperimentConfig::validate() const {
    try {
        train.validate();
        sim.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(circle_threshold > 1.0)) {
        throw ConfigError("analysis.circle_threshold must be > 1");
    }
    if (sweep.weight_decays.empty() || sweep.alignment_values.empty() || sweep.seed_count < 1) {
        throw ConfigError("sweep lists must be non-empty and seed_count >= 1");
    }
}

void apply(ExperimentConfig& config, const Overrides& o) {
    if (o.seed) {
        config.train.seed = *o.seed;
        config.sim.seed = *o.seed;
    }
    if (o.weight_decay) {
        config.train.optim.weight_decay = *o.weight_decay;
    }
    if (o.alignment) {
        config.sim.alignment = *o.alignment;
    }
    if (o.epochs) {
        config.train.epochs = *o.epochs;
    }
    if (o.steps) {
        config.sim.steps = *o.steps;
    }
    if (o.output_dir) {
        config.output_dir = *o.output_dir;
    }
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["model"] = {{"N", c.train.model.modulus}, {"D", c.train.model.embed_dim}, {"H", c.train.model.hidden}};
    j["optimizer"] = {{"learning_rate", c.train.optim.learning_rate},
                      {"weight_decay", c.train.optim.weight_decay},
                      {"beta1", c.train.optim.beta1},
                      {"beta2", c.train.optim.beta2},
                      {"epsilon", c.train.optim.epsilon}};
    j["trainer"] = {{"epochs", c.train.epochs},
                    {"snapshot_every", c.train.snapshot_every},
                    {"seed", c.train.seed},
                    {"train_fraction", c.train.train_fraction}};
    j["analysis"] = {{"circle_threshold", c.circle_threshold}};
    j["simulation"] = {{"N", c.sim.modulus},
                       {"D", c.sim.dim},
                       {"g_r", c.sim.repulsion},
                       {"g_a", c.sim.attraction},
                       {"f_a", c.sim.alignment},
                       {"steps", c.sim.steps},
                       {"step_size", c.sim.step_size},
                       {"seed", c.sim.seed},
                       {"target_total_variance", c.sim.total_variance_target()},
                       {"step_rule", c.sim.step_rule == StepRule::kProportional ? "proportional" : "fixed_length"}};
    j["sweep"] = {{"weight_decays", c.sweep.weight_decays},
                  {"f_a_values", c.sweep.alignment_values},
                  {"seed_start", c.sweep.seed_start},
                  {"seed_count", c.sweep.seed_count}};
    j["output_dir"] = c.output_dir;
    return j;
}

namespace {

void check_keys(const json& section, const std::string& name, std::initializer_list<const char*> allowed) {
    if (!section.is_object()) {
        throw ConfigError("config section '" + name + "' must be an object");
    }
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : section.items()) {
        if (!keys.contains(item.key())) {
            throw ConfigError("unknown config key '" + name + "." + item.key() + "'");
        }
    }
}

template <class T>
void read(const json& section, const char* key, T& out, const std::string& where) {
    if (!section.contains(key)) {
        return;
    }
    try {
        out = section.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
    }
}

}  // namespace

ExperimentConfig experiment_from_json(const json& j) {
    ExperimentConfig c;
    check_keys(j, "<root>", {"model", "optimizer", "trainer", "analysis", "simulation", "sweep", "output_dir"});
    if (j.contains("model")) {
        const json& s = j["model"];
        check_keys(s, "model", {"N", "D", "H"});
        read(s, "N", c.train.model.modulus, "model");
        read(s, "D", c.train.model.embed_dim, "model");
        read(s, "H", c.train.model.hidden, "model");
    }
    if (j.contains("optimizer")) {
        const json& s = j["optimizer"];
        check_keys(s, "optimizer", {"learning_rate", "weight_decay", "beta1", "beta2", "epsilon"});
        read(s, "learning_rate", c.train.optim.learning_rate, "optimizer");
        read(s, "weight_decay", c.train.optim.weight_decay, "optimizer");
        read(s, "beta1", c.train.optim.beta1, "optimizer");
        read(s, "beta2", c.train.optim.beta2, "optimizer");
        read(s, "epsilon", c.train.optim.epsilon, "optimizer");
    }
    if (j.contains("trainer")) {
        const json& s = j["trainer"];
        check_keys(s, "trainer", {"epochs", "snapshot_every", "seed", "train_fraction"});
        read(s, "epochs", c.train.epochs, "trainer");
        read(s, "snapshot_every", c.train.snapshot_every, "trainer");
        read(s, "seed", c.train.seed, "trainer");
        read(s, "train_fraction", c.train.train_fraction, "trainer");
    }
    if (j.contains("analysis")) {
        const json& s = j["analysis"];
        check_keys(s, "analysis", {"circle_threshold"});
        read(s, "circle_threshold", c.circle_threshold, "analysis");
    }
    if (j.contains("simulation")) {
        const json& s = j["simulation"];
        check_keys(s, "simulation",
                   {"N", "D", "g_r", "g_a", "f_a", "steps", "step_size", "seed", "target_total_variance", "step_rule"});
        read(s, "N", c.sim.modulus, "simulation");
        read(s, "D", c.sim.dim, "simulation");
        read(s, "g_r", c.sim.repulsion, "simulation");
        read(s, "g_a", c.sim.attraction, "simulation");
        read(s, "f_a", c.sim.alignment, "simulation");
        read(s, "steps", c.sim.steps, "simulation");
        read(s, "step_size", c.sim.step_size, "simulation");
        read(s, "seed", c.sim.seed, "simulation");
        if (s.contains("target_total_variance") && !s["target_total_variance"].is_null()) {
            double v = 0.0;
            read(s, "target_total_variance", v, "simulation");
            c.sim.target_total_variance = v;
        }
        if (s.contains("step_rule")) {
            std::string rule;
            read(s, "step_rule", rule, "simulation");
            if (rule == "proportional") {
                c.sim.step_rule = StepRule::kProportional;
            } else if (rule == "fixed_length") {
                c.sim.step_rule = StepRule::kFixedLength;
            } else {
                throw ConfigError("simulation.step_rule must be 'proportional' or 'fixed_length'");
            }
        }
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        check_keys(s, "sweep", {"weight_decays", "f_a_values", "seed_start", "seed_count"});
        read(s, "weight_decays", c.sweep.weight_decays, "sweep");
        read(s, "f_a_values", c.sweep.alignment_values, "sweep");
        read(s, "seed_start", c.sweep.seed_start, "sweep");
        read(s, "seed_count", c.sweep.seed_count, "sweep");
    }
    read(j, "output_dir", c.output_dir, "");
    c.validate();
    return c;
}

ExperimentConfig load_experiment(const fs::path& path) {
    if (!fs::is_regular_file(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    if (j.is_object() && j.contains("config") && j.contains("run_id")) {
        return experiment_from_json(j["config"]);
    }
    return experiment_from_json(j);
}

std::string run_id(const std::string& kind, const ExperimentConfig& config) {
    json j = to_json(config);
    j.erase("output_dir");
    const std::string text = kind + "\n" + j.dump();
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

json pairs_to_json(std::span<const Pair> pairs) {
    json out = json::array();
    for (const Pair& p : pairs) {
        out.push_back({p.a, p.b});
    }
    return out;
}

std::vector<Pair> pairs_from_json(const json& j) {
    std::vector<Pair> out;
    for (const json& item : j) {
        out.push_back({item.at(0).get<int>(), item.at(1).get<int>()});
    }
    return out;
}

std::string matrix_csv(const Matrix& m) {
    std::string out = "row";
    for (std::size_t c = 0; c < m.cols; ++c) {
        out += ",c" + std::to_string(c);
    }
    out += "\n";
    char buf[40];
    for (std::size_t r = 0; r < m.rows; ++r) {
        out += std::to_string(r);
        for (std::size_t c = 0; c < m.cols; ++c) {
            std::snprintf(buf, sizeof buf, ",%.17g", m(r, c));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

Matrix read_matrix_csv(const fs::path& path) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("empty tensor file " + path.string());
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> values;
        std::istringstream fields(line);
        std::string field;
        std::getline(fields, field, ',');  // row index
        while (std::getline(fields, field, ',')) {
            values.push_back(std::strtod(field.c_str(), nullptr));
        }
        rows.push_back(std::move(values));
    }
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols) {
            throw std::runtime_error("ragged tensor file " + path.string());
        }
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

std::string metrics_csv(std::span<const EpochMetrics> metrics) {
    std::string out = "epoch,loss,train_acc,val_acc\n";
    char buf[96];
    for (const EpochMetrics& m : metrics) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", m.epoch, m.loss, m.train_accuracy, m.val_accuracy);
        out += buf;
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json read_json(const fs::path& path) {
    return json::parse(read_text(path));
}

fs::path RunPaths::snapshot(int epoch) const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%04d.csv", epoch);
    return snapshots() / buf;
}

fs::path RunPaths::final_tensor(std::string_view name) const {
    return final_dir() / (std::string(name) + ".csv");
}

json write_train_run(const fs::path& dir, const ExperimentConfig& config, const TrainTrace& trace,
                     const RunRecord& record) {
    const RunPaths paths{dir};
    fs::create_directories(dir);
    write_text(paths.metrics(), metrics_csv(trace.metrics));
    json snapshot_files = json::array();
    for (const Snapshot& s : trace.snapshots) {
        write_text(paths.snapshot(s.epoch), matrix_csv(s.embedding));
        snapshot_files.push_back(fs::relative(paths.snapshot(s.epoch), dir).generic_string());
    }
    json final_files = json::object();
    const auto tensors = trace.final_params.tensors();
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        write_text(paths.final_tensor(kTensorNames[t]), matrix_csv(*tensors[t]));
        final_files[std::string(kTensorNames[t])] =
            fs::relative(paths.final_tensor(kTensorNames[t]), dir).generic_string();
    }

    json manifest;
    manifest["tool"] = "modadd";
    manifest["version"] = kToolVersion;
    manifest["kind"] = "train";
    manifest["run_id"] = run_id("train", config);
    manifest["config"] = to_json(config);
    manifest["seed"] = config.train.seed;
    manifest["split"] = {{"train", pairs_to_json(trace.dataset.train)}, {"val", pairs_to_json(trace.dataset.val)}};
    manifest["artifacts"] = {{"metrics", "metrics.csv"}, {"snapshots", snapshot_files}, {"final", final_files}};
    manifest["status"] = trace.failure ? "diverged" : "ok";
    if (trace.failure) {
        manifest["failure"] = *trace.failure;
    }
    json summary;
    summary["epochs_completed"] = trace.metrics.size();
    if (!trace.metrics.empty()) {
        summary["final_loss"] = trace.metrics.back().loss;
        summary["final_train_accuracy"] = record.final_train_accuracy;
        summary["final_val_accuracy"] = record.final_val_accuracy;
    }
    if (!trace.failure) {
        summary["is_circle"] = record.structure.is_circle;
        summary["circle_ratio"] = record.structure.circle_ratio;
        summary["imperfections"] = record.structure.imperfections;
    }
    summary["magnitudes"] = {{"W_h", record.magnitudes.hidden_weight},
                             {"b_h", record.magnitudes.hidden_bias},
                             {"W_o", record.magnitudes.output_weight},
                             {"b_o", record.magnitudes.output_bias}};
    manifest["summary"] = std::move(summary);
    write_text(paths.manifest(), manifest.dump(2) + "\n");
    return manifest;
}

ModelParams read_final_params(const RunPaths& paths) {
    ModelParams params;
    const auto tensors = params.tensors();
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        const fs::path file = paths.final_tensor(kTensorNames[t]);
        if (!fs::exists(file)) {
            throw std::runtime_error("missing " + file.string() + " (run 'train' first)");
        }
        *tensors[t] = read_matrix_csv(file);
    }
    return params;
}

RunRecord load_run_record(const fs::path& dir, double circle_threshold) {
    const RunPaths paths{dir};
    const json manifest = read_json(paths.manifest());
    const ExperimentConfig config = experiment_from_json(manifest.at("config"));
    RunRecord record;
    record.config = config.train;
    record.artifact_dir = dir;
    if (manifest.value("status", "ok") != "ok") {
        record.failure = manifest.value("failure", "diverged");
    }
    const json& summary = manifest.at("summary");
    record.final_val_accuracy = summary.value("final_val_accuracy", 0.0);
    record.final_train_accuracy = summary.value("final_train_accuracy", 0.0);
    const ModelParams params = read_final_params(paths);
    record.magnitudes = magnitude_stats(params);
    if (!record.failure) {
        record.structure = analyze_structure(params.embedding, record.final_val_accuracy, circle_threshold);
    }
    return record;
}

}  // namespace modadd
