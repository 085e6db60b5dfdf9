// gcnh: command line driver for training runs, grid searches and the
// experiment tables (synthetic sweep, ablation, aggregation comparison,
// depth study, benchmark, beta report, homophily, synthetic data export).
//
// Exit codes: 0 success, 1 runtime failure (including non-finite losses),
// 2 missing input or bad arguments.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gcnh/error.hpp"
#include "gcnh/experiments.hpp"
#include "gcnh/io_json.hpp"
#include "gcnh/kernels.hpp"
#include "gcnh/model.hpp"
#include "gcnh/synth.hpp"
#include "gcnh/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gcnh;

namespace {

// Missing inputs map to exit code 2.
struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string data;
    std::string out = ".";
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string grid_file;
    std::string config_file;
    std::string kernels = "auto";
};

// Synthetic graph options for commands that fall back to generated data.
struct SynthOptions {
    std::string pool;
    double homophily = 0.1;
    std::size_t graphs = 1;
    std::size_t nodes = 1490;
};

Dataset load_required(const std::string& dir) {
    if (dir.empty()) {
        throw MissingInput("--data is required");
    }
    if (!fs::is_directory(dir)) {
        throw MissingInput("dataset directory not found: " + dir);
    }
    try {
        return load_dataset(dir);
    } catch (const MissingFileError& e) {
        throw MissingInput(e.what());
    }
}

json read_json_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw MissingInput("cannot open " + path);
    }
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) {
        throw IoError("cannot write " + path.string());
    }
    std::cout << "wrote " << path.string() << '\n';
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::shared_ptr<const FeaturePool> make_pool(const std::string& dir) {
    if (dir.empty()) {
        return std::make_shared<FeaturePool>(make_surrogate_pool({}));
    }
    return std::make_shared<FeaturePool>(pool_from_dataset(load_required(dir)));
}

SynthConfig synth_base(const SynthOptions& s) {
    SynthConfig base;
    base.num_nodes = s.nodes;
    base.feature_pool = make_pool(s.pool);
    base.num_classes = base.feature_pool->labels.num_classes;
    return base;
}

// --data if given, otherwise `graphs` synthetic graphs at one homophily level.
std::vector<Dataset> datasets_for(const Common& c, const SynthOptions& s) {
    std::vector<Dataset> out;
    if (!c.data.empty()) {
        out.push_back(load_required(c.data));
        return out;
    }
    for (auto& g : make_sweep_graphs({s.homophily}, s.graphs, synth_base(s), c.seed)) {
        out.push_back(std::move(g.dataset));
    }
    return out;
}

// {"model": {...}, "train": {...}}; either part may be omitted.
HyperGrid::Point read_config(const Common& c) {
    HyperGrid::Point p;
    if (!c.config_file.empty()) {
        const json j = read_json_file(c.config_file);
        if (j.contains("model")) p.model = model_config_from_json(j["model"]);
        if (j.contains("train")) p.train = train_config_from_json(j["train"]);
    }
    p.train.seed = c.seed;
    return p;
}

void add_common(CLI::App* cmd, Common& c, bool data_required_hint = false) {
    cmd->add_option("--data", c.data, data_required_hint ? "Dataset directory" : "Dataset directory (optional)");
    cmd->add_option("--out", c.out, "Output directory");
    cmd->add_option("--seed", c.seed, "Base random seed");
    cmd->add_option("--workers", c.workers, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    cmd->add_option("--grid-file", c.grid_file, "Hyperparameter grid JSON");
    cmd->add_option("--config-file", c.config_file, "Model/train config JSON");
    cmd->add_option("--kernels", c.kernels, "Kernel backend: auto, scalar or avx2");
}

void add_synth(CLI::App* cmd, SynthOptions& s) {
    cmd->add_option("--pool", s.pool, "Dataset whose features seed synthetic graphs");
    cmd->add_option("--homophily", s.homophily, "Target homophily of synthetic graphs")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--graphs", s.graphs, "Synthetic graphs to average over")->check(CLI::PositiveNumber);
    cmd->add_option("--nodes", s.nodes, "Nodes per synthetic graph");
}

std::vector<const Dataset*> pointers(const std::vector<Dataset>& ds) {
    std::vector<const Dataset*> out;
    for (const auto& d : ds) out.push_back(&d);
    return out;
}

void print_variants(const std::vector<VariantResult>& rows) {
    for (const auto& r : rows) {
        std::printf("%-32s %.4f +- %.4f\n", r.label.c_str(), r.mean_test, r.std_test);
    }
}

int cmd_train(const Common& c, std::size_t split) {
    const Dataset ds = load_required(c.data);
    const auto p = read_config(c);
    if (split >= ds.splits.size()) {
        throw InputError("split " + std::to_string(split) + " out of range (" +
                         std::to_string(ds.splits.size()) + " splits)");
    }
    const RunResult r = train(ds, ds.splits[split], p.model, p.train);
    json run = to_json(r, false);
    run["dataset"] = ds.name;
    run["split"] = split;
    run["model"] = to_json(p.model);
    run["train"] = to_json(p.train);
    write_json(fs::path(c.out) / "run.json", run);
    write_json(fs::path(c.out) / "timings.json",
               {{"schema_version", kResultSchemaVersion}, {"epoch_times_ms", r.epoch_times_ms}});
    save_checkpoint(r.best_model, fs::path(c.out) / "checkpoint.json");
    std::cout << "wrote " << (fs::path(c.out) / "checkpoint.json").string() << '\n';
    std::printf("test accuracy %.4f (best epoch %zu)\n", r.test_accuracy, r.best_epoch);
    return 0;
}

int cmd_grid(const Common& c) {
    const Dataset ds = load_required(c.data);
    const HyperGrid grid = c.grid_file.empty() ? published_grid(ds.name, ds.num_nodes())
                                               : hyper_grid_from_json(read_json_file(c.grid_file));
    const GridResult r = grid_search(ds, grid, c.seed, c.workers);
    std::ostringstream csv;
    write_grid_csv(csv, r);
    write_file(fs::path(c.out) / "grid.csv", csv.str());
    const auto& best = r.best();
    write_json(fs::path(c.out) / "best.json",
               {{"schema_version", kResultSchemaVersion},
                {"dataset", ds.name},
                {"config_index", r.best_index},
                {"model", to_json(r.points[r.best_index].model)},
                {"train", to_json(r.points[r.best_index].train)},
                {"mean_val_accuracy", best.mean_val},
                {"mean_test_accuracy", best.mean_test},
                {"std_test_accuracy", best.std_test},
                {"param_count", r.param_counts[r.best_index]}});
    std::printf("best config %zu of %zu: test %.4f +- %.4f\n", r.best_index, r.points.size(),
                best.mean_test, best.std_test);
    return 0;
}

std::vector<SweepModel> sweep_models(const Common& c, std::size_t nodes) {
    auto models = default_sweep_models(nodes);
    if (!c.grid_file.empty()) {
        // {"MLP": grid, "GCN": grid, "GCNH": grid}; listed models replace defaults.
        const json j = read_json_file(c.grid_file);
        for (auto& m : models) {
            if (j.contains(m.label)) m.grid = hyper_grid_from_json(j[m.label]);
        }
    }
    return models;
}

int cmd_synth_sweep(const Common& c, SynthOptions s, std::size_t replicates) {
    s.pool = c.data;
    const auto graphs = make_sweep_graphs(default_homophily_grid(), replicates, synth_base(s), c.seed);
    const SweepResult r = run_sweep(graphs, sweep_models(c, s.nodes), c.seed, c.workers);
    std::ostringstream csv;
    write_sweep_csv(csv, r);
    write_file(fs::path(c.out) / "sweep.csv", csv.str());
    write_json(fs::path(c.out) / "sweep.json", to_json(r));
    for (const auto& row : r.summary) {
        std::printf("h=%.1f %-5s %.4f\n", row.target, row.model.c_str(), row.mean_test);
    }
    return 0;
}

Variant variant_from(const HyperGrid::Point& p) { return {"", p.model, p.train}; }

int cmd_ablation(const Common& c, const SynthOptions& s) {
    const auto ds = datasets_for(c, s);
    const auto p = read_config(c);
    const auto rows = compare_variants(pointers(ds), ablation_variants(variant_from(p), variant_from(p)), c.workers);
    write_json(fs::path(c.out) / "ablation.json", to_json(rows));
    print_variants(rows);
    return 0;
}

int cmd_agg_compare(const Common& c, const SynthOptions& s) {
    const auto ds = datasets_for(c, s);
    const auto rows = compare_variants(pointers(ds), aggregation_variants(variant_from(read_config(c))), c.workers);
    write_json(fs::path(c.out) / "agg_compare.json", to_json(rows));
    print_variants(rows);
    return 0;
}

int cmd_oversmoothing(const Common& c, const SynthOptions& s, const std::vector<std::size_t>& depths) {
    const auto ds = datasets_for(c, s);
    const HyperGrid grid = c.grid_file.empty() ? oversmoothing_grid()
                                               : hyper_grid_from_json(read_json_file(c.grid_file));
    const auto rows = run_oversmoothing(ds.front(), grid, {Architecture::GCN, Architecture::GCNH}, depths,
                                        c.seed, c.workers);
    write_json(fs::path(c.out) / "oversmoothing.json", to_json(rows));
    for (const auto& r : rows) {
        std::printf("%-5s layers=%zu test %.4f\n", std::string(to_string(r.architecture)).c_str(), r.num_layers,
                    r.mean_test);
    }
    return 0;
}

int cmd_bench(const Common& c, BenchConfig config) {
    const Dataset ds = load_required(c.data);
    config.seed = c.seed;
    const BenchResult r = run_bench(ds, config);
    write_json(fs::path(c.out) / "bench.json", to_json(r, true));
    for (const auto& row : r.rows) {
        std::printf("%-4s params %zu  total %.2f s  epoch %.3f ms\n", std::string(to_string(row.aggregation)).c_str(),
                    row.param_count, row.total_ms / 1000.0, row.mean_epoch_ms);
    }
    return 0;
}

int cmd_beta_report(const Common& c, const std::vector<std::string>& datasets, SynthOptions s,
                    std::size_t replicates, bool sweep) {
    BetaReport report;
    if (sweep) {
        HyperGrid grid = published_grid("syn-cora", s.nodes);
        grid.num_layers = {1};
        if (!c.grid_file.empty()) grid = hyper_grid_from_json(read_json_file(c.grid_file));
        const auto graphs = make_sweep_graphs(default_homophily_grid(), replicates, synth_base(s), c.seed);
        report = beta_report_from_sweep(run_sweep(graphs, {{"GCNH", grid}}, c.seed, c.workers));
    }
    for (const auto& dir : datasets) {
        const Dataset ds = load_required(dir);
        HyperGrid::Point p = read_config(c);
        if (c.config_file.empty()) {
            try {
                p = published_best_config(ds.name, ds.num_nodes(), c.seed);
                p.model.num_layers = 1;
            } catch (const InputError&) {
                // no preset: keep the default single-layer configuration
            }
        }
        p.model.architecture = Architecture::GCNH;
        const auto rows = compare_variants({&ds}, {variant_from(p)}, c.workers);
        report.points.push_back({ds.name, edge_homophily(ds.graph, ds.labels).edge_homophily, rows.front().mean_betas});
    }
    write_json(fs::path(c.out) / "beta_report.json", to_json(report));
    for (const auto& pt : report.points) {
        std::printf("%-16s h=%.3f beta=%s\n", pt.dataset.c_str(), pt.homophily,
                    pt.betas.empty() ? "-" : std::to_string(pt.betas.front()).c_str());
    }
    if (report.spearman_beta_vs_heterophily) {
        std::printf("spearman(beta, 1-h) = %.4f\n", *report.spearman_beta_vs_heterophily);
    }
    return 0;
}

int cmd_homophily(const Common& c) {
    const Dataset ds = load_required(c.data);
    const json j = homophily_json(ds);
    write_json(fs::path(c.out) / "homophily.json", j);
    std::printf("edge homophily %.6f over %zu edges\n", j["edge_homophily"].get<double>(), ds.graph.num_edges());
    return 0;
}

int cmd_gen_synth(const Common& c, SynthOptions s, std::size_t replicates) {
    s.pool = c.data;
    const auto graphs = make_sweep_graphs(default_homophily_grid(), replicates, synth_base(s), c.seed);
    const json manifest = write_sweep_graphs(graphs, c.out);
    for (const auto& g : manifest["graphs"]) {
        std::printf("%s target %.2f achieved %.4f\n", g["name"].get<std::string>().c_str(),
                    g["target_homophily"].get<double>(), g["achieved_homophily"].get<double>());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GCNH node classification experiments"};
    app.require_subcommand(1);

    Common common;
    SynthOptions synth;
    std::size_t split = 0;
    std::size_t replicates = 3;
    std::vector<std::size_t> depths{1, 2, 4, 8};
    BenchConfig bench;
    std::vector<std::string> beta_datasets;
    bool no_sweep = false;

    auto* train_cmd = app.add_subcommand("train", "Train one model on one split");
    add_common(train_cmd, common, true);
    train_cmd->add_option("--split", split, "Split index");

    auto* grid_cmd = app.add_subcommand("grid", "Grid search over all splits");
    add_common(grid_cmd, common, true);

    auto* sweep_cmd = app.add_subcommand("synth-sweep", "MLP/GCN/GCNH accuracy across homophily levels");
    add_common(sweep_cmd, common);
    sweep_cmd->add_option("--replicates", replicates, "Graphs per homophily level")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--nodes", synth.nodes, "Nodes per graph");

    auto* ablation_cmd = app.add_subcommand("ablation", "GCN vs GCNH with fixed and learned beta");
    add_common(ablation_cmd, common);
    add_synth(ablation_cmd, synth);

    auto* agg_cmd = app.add_subcommand("agg-compare", "GCNH with SUM, MEAN and MAX aggregation");
    add_common(agg_cmd, common);
    add_synth(agg_cmd, synth);

    auto* depth_cmd = app.add_subcommand("oversmoothing", "Accuracy against depth for GCN and GCNH");
    add_common(depth_cmd, common);
    add_synth(depth_cmd, synth);
    depth_cmd->add_option("--depths", depths, "Layer counts");

    auto* bench_cmd = app.add_subcommand("bench", "Training time and parameter count");
    add_common(bench_cmd, common, true);
    bench_cmd->add_option("--epochs", bench.epochs, "Epochs per run");
    bench_cmd->add_option("--runs", bench.runs, "Runs (cycling through the splits)");

    auto* beta_cmd = app.add_subcommand("beta-report", "Learned beta per dataset and over the synthetic sweep");
    add_common(beta_cmd, common);
    beta_cmd->add_option("--dataset", beta_datasets, "Additional dataset directories");
    beta_cmd->add_option("--pool", synth.pool, "Dataset whose features seed synthetic graphs");
    beta_cmd->add_option("--replicates", replicates, "Graphs per homophily level")->check(CLI::PositiveNumber);
    beta_cmd->add_flag("--no-sweep", no_sweep, "Skip the synthetic sweep");

    auto* hom_cmd = app.add_subcommand("homophily", "Edge homophily and class edge matrix");
    add_common(hom_cmd, common, true);

    auto* gen_cmd = app.add_subcommand("gen-synth", "Write the synthetic sweep graphs to disk");
    add_common(gen_cmd, common);
    gen_cmd->add_option("--replicates", replicates, "Graphs per homophily level")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--nodes", synth.nodes, "Nodes per graph");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!kernels::select(common.kernels)) {
            throw MissingInput("kernel backend unavailable: " + common.kernels);
        }
        if (*train_cmd) return cmd_train(common, split);
        if (*grid_cmd) return cmd_grid(common);
        if (*sweep_cmd) return cmd_synth_sweep(common, synth, replicates);
        if (*ablation_cmd) {
            if (ablation_cmd->count("--graphs") == 0) synth.graphs = 5;
            return cmd_ablation(common, synth);
        }
        if (*agg_cmd) return cmd_agg_compare(common, synth);
        if (*depth_cmd) {
            if (depth_cmd->count("--homophily") == 0) synth.homophily = 0.9;
            return cmd_oversmoothing(common, synth, depths);
        }
        if (*bench_cmd) return cmd_bench(common, bench);
        if (*beta_cmd) {
            if (!common.data.empty()) beta_datasets.insert(beta_datasets.begin(), common.data);
            return cmd_beta_report(common, beta_datasets, synth, replicates, !no_sweep);
        }
        if (*hom_cmd) return cmd_homophily(common);
        if (*gen_cmd) return cmd_gen_synth(common, synth, replicates);
    } catch (const MissingInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
