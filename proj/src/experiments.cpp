#include "gcnh/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "gcnh/error.hpp"
#include "gcnh/io_json.hpp"

namespace gcnh {

using nlohmann::json;

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
            ++j;
        }
        const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            r[idx[k]] = mean_rank;
        }
        i = j + 1;
    }
    return r;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) {
        return 0.0;
    }
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) {
        ss += (x - m) * (x - m);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Element-wise mean of equally long vectors; empty input gives empty output.
std::vector<double> mean_vectors(const std::vector<std::vector<double>>& vs) {
    if (vs.empty() || vs.front().empty()) {
        return {};
    }
    std::vector<double> out(vs.front().size(), 0.0);
    for (const auto& v : vs) {
        for (std::size_t i = 0; i < out.size() && i < v.size(); ++i) {
            out[i] += v[i];
        }
    }
    for (double& x : out) {
        x /= static_cast<double>(vs.size());
    }
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? ";" : "") + format_double(v[i]);
    }
    return s;
}

json point_json(const HyperGrid::Point& p) {
    return {{"model", to_json(p.model)}, {"train", to_json(p.train)}};
}

} // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InputError("spearman: need two equally long samples of size >= 2");
    }
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double mx = mean_of(rx), my = mean_of(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw UndefinedRatioError("spearman: constant sample");
    }
    return sxy / std::sqrt(sxx * syy);
}

std::vector<SweepGraph> make_sweep_graphs(const std::vector<double>& targets,
                                          std::size_t replicates, const SynthConfig& base,
                                          std::uint64_t seed) {
    std::vector<SynthReport> reports;
    auto datasets = homophily_sweep_generate(targets, replicates, base, seed, &reports);
    std::vector<SweepGraph> out;
    out.reserve(datasets.size());
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        out.push_back({targets[i / replicates], i % replicates, reports[i], std::move(datasets[i])});
    }
    return out;
}

std::vector<SweepModel> default_sweep_models(std::size_t num_nodes) {
    return {{"MLP", baseline_synth_grid(Architecture::MLP)},
            {"GCN", baseline_synth_grid(Architecture::GCN)},
            {"GCNH", published_grid("syn-cora", num_nodes)}};
}

double SweepResult::mean_test(double target, const std::string& model) const {
    for (const auto& s : summary) {
        if (s.target == target && s.model == model) {
            return s.mean_test;
        }
    }
    throw InputError("sweep has no entry for model '" + model + "' at h=" + format_double(target));
}

SweepResult run_sweep(const std::vector<SweepGraph>& graphs, const std::vector<SweepModel>& models,
                      std::uint64_t seed, std::size_t workers) {
    if (models.empty()) {
        throw InputError("run_sweep: no models");
    }
    SweepResult out;
    out.rows.resize(graphs.size() * models.size());
    parallel_for(out.rows.size(), workers, [&](std::size_t task) {
        const SweepGraph& g = graphs[task / models.size()];
        const SweepModel& m = models[task % models.size()];
        const GridResult grid = grid_search(g.dataset, m.grid, seed, 1);
        const ProtocolResult& best = grid.best();
        std::vector<std::vector<double>> betas;
        for (const auto& run : best.runs) {
            betas.push_back(run.betas);
        }
        SweepRow& row = out.rows[task];
        row.target = g.target;
        row.achieved = g.report.achieved_homophily;
        row.replicate = g.replicate;
        row.model = m.label;
        row.config_index = grid.best_index;
        row.val_accuracy = best.mean_val;
        row.test_accuracy = best.mean_test;
        row.betas = mean_vectors(betas);
    });

    std::vector<double> targets;
    for (const auto& g : graphs) {
        if (std::find(targets.begin(), targets.end(), g.target) == targets.end()) {
            targets.push_back(g.target);
        }
    }
    for (double t : targets) {
        for (const auto& m : models) {
            SweepSummary s;
            s.target = t;
            s.model = m.label;
            std::vector<double> achieved, test;
            std::vector<std::vector<double>> betas;
            for (const auto& r : out.rows) {
                if (r.target == t && r.model == m.label) {
                    achieved.push_back(r.achieved);
                    test.push_back(r.test_accuracy);
                    betas.push_back(r.betas);
                }
            }
            s.mean_achieved = mean_of(achieved);
            s.mean_test = mean_of(test);
            s.mean_betas = mean_vectors(betas);
            out.summary.push_back(std::move(s));
        }
    }
    return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "schema_version,target_homophily,replicate,achieved_homophily,model,config_index,"
           "val_accuracy,test_accuracy,betas\n";
    for (const auto& r : result.rows) {
        out << kResultSchemaVersion << ',' << format_double(r.target) << ',' << r.replicate << ','
            << format_double(r.achieved) << ',' << r.model << ',' << r.config_index << ','
            << format_double(r.val_accuracy) << ',' << format_double(r.test_accuracy) << ','
            << join_doubles(r.betas) << '\n';
    }
}

json to_json(const SweepResult& result) {
    json rows = json::array();
    for (const auto& r : result.rows) {
        rows.push_back({{"target_homophily", r.target},
                        {"replicate", r.replicate},
                        {"achieved_homophily", r.achieved},
                        {"model", r.model},
                        {"config_index", r.config_index},
                        {"val_accuracy", r.val_accuracy},
                        {"test_accuracy", r.test_accuracy},
                        {"betas", r.betas}});
    }
    json summary = json::array();
    for (const auto& s : result.summary) {
        summary.push_back({{"target_homophily", s.target},
                           {"model", s.model},
                           {"mean_achieved_homophily", s.mean_achieved},
                           {"mean_test_accuracy", s.mean_test},
                           {"mean_betas", s.mean_betas}});
    }
    return {{"schema_version", kResultSchemaVersion}, {"rows", rows}, {"summary", summary}};
}

json write_sweep_graphs(const std::vector<SweepGraph>& graphs, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    json entries = json::array();
    for (const auto& g : graphs) {
        save_dataset(g.dataset, dir / g.dataset.name);
        entries.push_back({{"name", g.dataset.name},
                           {"target_homophily", g.target},
                           {"replicate", g.replicate},
                           {"achieved_homophily", g.report.achieved_homophily},
                           {"fallback_edges", g.report.fallback_edges},
                           {"num_nodes", g.dataset.num_nodes()},
                           {"num_edges", g.dataset.graph.num_edges()}});
    }
    json manifest{{"schema_version", kResultSchemaVersion}, {"graphs", entries}};
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    f << manifest.dump(2) << '\n';
    if (!f) {
        throw IoError("cannot write " + (dir / "manifest.json").string());
    }
    return manifest;
}

BetaReport beta_report_from_sweep(const SweepResult& sweep, const std::string& gcnh_label) {
    BetaReport report;
    for (const auto& r : sweep.rows) {
        if (r.model == gcnh_label) {
            report.points.push_back({sweep_dataset_name(r.target, r.replicate), r.achieved, r.betas});
        }
    }
    std::vector<double> beta, heterophily;
    for (const auto& s : sweep.summary) {
        if (s.model == gcnh_label && !s.mean_betas.empty()) {
            beta.push_back(s.mean_betas.front());
            heterophily.push_back(1.0 - s.target);
        }
    }
    if (beta.size() >= 2) {
        report.spearman_beta_vs_heterophily = spearman(beta, heterophily);
    }
    return report;
}

json to_json(const BetaReport& report) {
    json points = json::array();
    for (const auto& p : report.points) {
        points.push_back({{"dataset", p.dataset}, {"edge_homophily", p.homophily}, {"betas", p.betas}});
    }
    json j{{"schema_version", kResultSchemaVersion}, {"points", points}};
    j["spearman_beta_vs_one_minus_h"] =
        report.spearman_beta_vs_heterophily ? json(*report.spearman_beta_vs_heterophily) : json(nullptr);
    return j;
}

std::vector<Variant> ablation_variants(const Variant& gcn, const Variant& gcnh) {
    Variant base = gcn;
    base.model.architecture = Architecture::GCN;
    base.label = "GCN";
    Variant fixed = gcnh;
    fixed.model.architecture = Architecture::GCNH;
    fixed.model.share_mlps = false;
    fixed.model.beta_trainable = false;
    fixed.model.beta_fixed_value = 0.5;
    fixed.label = "GCNH separate MLPs, beta=0.5";
    Variant full = gcnh;
    full.model.architecture = Architecture::GCNH;
    full.model.share_mlps = false;
    full.model.beta_trainable = true;
    full.model.beta_fixed_value.reset();
    full.label = "GCNH";
    return {base, fixed, full};
}

std::vector<Variant> aggregation_variants(const Variant& gcnh) {
    std::vector<Variant> out;
    for (auto mode : {AggregationMode::Sum, AggregationMode::Mean, AggregationMode::Max}) {
        Variant v = gcnh;
        v.model.architecture = Architecture::GCNH;
        v.model.aggregation = mode;
        v.label = "GCNH-" + std::string(to_string(mode));
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<VariantResult> compare_variants(const std::vector<const Dataset*>& datasets,
                                            const std::vector<Variant>& variants,
                                            std::size_t workers) {
    if (datasets.empty()) {
        throw InputError("compare_variants: no datasets");
    }
    std::vector<VariantResult> out;
    for (const auto& v : variants) {
        VariantResult r;
        r.label = v.label;
        r.model = v.model;
        r.train = v.train;
        std::vector<std::vector<double>> betas;
        for (std::size_t d = 0; d < datasets.size(); ++d) {
            TrainConfig tc = v.train;
            tc.seed = v.train.seed + 1000 * d;
            const ProtocolResult p = run_protocol(*datasets[d], v.model, tc, workers);
            for (const auto& run : p.runs) {
                r.test_accuracies.push_back(run.test_accuracy);
                betas.push_back(run.betas);
            }
        }
        r.mean_test = mean_of(r.test_accuracies);
        r.std_test = sample_std(r.test_accuracies);
        r.mean_betas = mean_vectors(betas);
        out.push_back(std::move(r));
    }
    return out;
}

json to_json(const std::vector<VariantResult>& rows) {
    json a = json::array();
    for (const auto& r : rows) {
        a.push_back({{"label", r.label},
                     {"model", to_json(r.model)},
                     {"train", to_json(r.train)},
                     {"mean_test_accuracy", r.mean_test},
                     {"std_test_accuracy", r.std_test},
                     {"test_accuracies", r.test_accuracies},
                     {"mean_betas", r.mean_betas}});
    }
    return {{"schema_version", kResultSchemaVersion}, {"rows", a}};
}

HyperGrid oversmoothing_grid() {
    HyperGrid g;
    g.batch_sizes = {std::size_t{300}};
    g.epochs = {300, 500};
    g.hidden_sizes = {16, 32, 64};
    g.dropout_rates = {0.0, 0.5};
    return g;
}

std::vector<DepthRow> run_oversmoothing(const Dataset& dataset, const HyperGrid& grid,
                                        const std::vector<Architecture>& architectures,
                                        const std::vector<std::size_t>& depths, std::uint64_t seed,
                                        std::size_t workers) {
    std::vector<DepthRow> out;
    for (auto arch : architectures) {
        for (std::size_t depth : depths) {
            HyperGrid g = grid;
            g.architectures = {arch};
            g.num_layers = {depth};
            const GridResult r = grid_search(dataset, g, seed, workers);
            out.push_back({arch, depth, r.points[r.best_index], r.best().mean_val, r.best().mean_test});
        }
    }
    return out;
}

json to_json(const std::vector<DepthRow>& rows) {
    json a = json::array();
    for (const auto& r : rows) {
        a.push_back({{"architecture", std::string(to_string(r.architecture))},
                     {"num_layers", r.num_layers},
                     {"chosen", point_json(r.chosen)},
                     {"mean_val_accuracy", r.mean_val},
                     {"mean_test_accuracy", r.mean_test}});
    }
    return {{"schema_version", kResultSchemaVersion}, {"rows", a}};
}

BenchResult run_bench(const Dataset& dataset, const BenchConfig& config) {
    if (dataset.splits.empty() || config.runs == 0) {
        throw InputError("bench: need at least one split and one run");
    }
    BenchResult out{dataset.name, dataset.num_nodes(), dataset.graph.num_edges(), config, {}};
    const GraphInputs inputs = GraphInputs::from(dataset);
    for (auto mode : config.aggregations) {
        ModelConfig mc;
        mc.architecture = Architecture::GCNH;
        mc.num_layers = config.num_layers;
        mc.hidden_size = config.hidden_size;
        mc.aggregation = mode;
        BenchRow row;
        row.aggregation = mode;
        std::vector<double> tests;
        std::size_t epochs = 0;
        for (std::size_t r = 0; r < config.runs; ++r) {
            TrainConfig tc;
            tc.epochs = config.epochs;
            tc.seed = config.seed + r;
            const auto res = train(dataset, inputs, dataset.splits[r % dataset.splits.size()], mc, tc);
            row.param_count = res.param_count;
            tests.push_back(res.test_accuracy);
            row.total_ms += std::accumulate(res.epoch_times_ms.begin(), res.epoch_times_ms.end(), 0.0);
            epochs += res.epoch_times_ms.size();
        }
        row.mean_test = mean_of(tests);
        row.mean_epoch_ms = row.total_ms / static_cast<double>(epochs);
        out.rows.push_back(row);
    }
    return out;
}

double mean_epoch_ms(const Dataset& dataset, const ModelConfig& model, const TrainConfig& train_config) {
    if (dataset.splits.empty()) {
        throw InputError("mean_epoch_ms: dataset has no splits");
    }
    const auto res = train(dataset, dataset.splits.front(), model, train_config);
    return mean_of(res.epoch_times_ms);
}

json to_json(const BenchResult& result, bool include_timings) {
    json rows = json::array();
    for (const auto& r : result.rows) {
        json row{{"aggregation", std::string(to_string(r.aggregation))},
                 {"param_count", r.param_count},
                 {"mean_test_accuracy", r.mean_test}};
        if (include_timings) {
            row["total_train_seconds"] = r.total_ms / 1000.0;
            row["mean_epoch_ms"] = r.mean_epoch_ms;
        }
        rows.push_back(std::move(row));
    }
    return {{"schema_version", kResultSchemaVersion},
            {"dataset", result.dataset},
            {"num_nodes", result.num_nodes},
            {"num_edges", result.num_edges},
            {"epochs", result.config.epochs},
            {"runs", result.config.runs},
            {"num_layers", result.config.num_layers},
            {"hidden_size", result.config.hidden_size},
            {"rows", rows}};
}

json homophily_json(const Dataset& dataset) {
    const HomophilyReport rep = edge_homophily(dataset.graph, dataset.labels);
    const auto counts = class_edge_matrix(dataset.graph, dataset.labels);
    const std::size_t k = dataset.num_classes();
    json matrix = json::array();
    for (std::size_t a = 0; a < k; ++a) {
        matrix.push_back(std::vector<std::size_t>(counts.begin() + static_cast<std::ptrdiff_t>(a * k),
                                                  counts.begin() + static_cast<std::ptrdiff_t>((a + 1) * k)));
    }
    return {{"schema_version", kResultSchemaVersion},
            {"dataset", dataset.name},
            {"num_nodes", dataset.num_nodes()},
            {"num_edges", dataset.graph.num_edges()},
            {"num_classes", k},
            {"edge_homophily", rep.edge_homophily},
            {"same_label_edges", rep.same_label_edges},
            {"total_edges", rep.total_edges},
            {"class_edge_matrix", matrix}};
}

} // namespace gcnh
