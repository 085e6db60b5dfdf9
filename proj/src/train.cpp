#include "gcnh/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "gcnh/error.hpp"
#include "gcnh/io_json.hpp"
#include "gcnh/optim.hpp"
#include "gcnh/rng.hpp"

namespace gcnh {

using nlohmann::json;

void TrainConfig::validate() const {
    if (epochs < 1) {
        throw InputError("train config: epochs must be >= 1");
    }
    if (batch_size && *batch_size < 1) {
        throw InputError("train config: batch_size must be >= 1");
    }
    if (!(learning_rate > 0.0) || !(weight_decay >= 0.0)) {
        throw InputError("train config: learning_rate must be > 0 and weight_decay >= 0");
    }
}

double evaluate(const Model& model, const GraphInputs& inputs, const LabelVector& labels,
                std::span<const NodeId> mask) {
    if (mask.empty()) {
        throw InputError("evaluate: empty mask");
    }
    const auto pred = predict(infer_logits(model, inputs));
    std::size_t correct = 0;
    for (NodeId u : mask) {
        correct += pred.predicted[u] == labels[u] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(mask.size());
}

namespace {

enum : std::uint64_t { kStreamModel = 1, kStreamTraining = 2 };

} // namespace

RunResult train(const Dataset& dataset, const GraphInputs& inputs, const SplitMask& split,
                const ModelConfig& model_config, const TrainConfig& train_config) {
    model_config.validate();
    train_config.validate();
    split.validate(dataset.num_nodes());

    Model model = init_model(model_config, dataset.num_features(), dataset.num_classes(),
                             mix_seed(train_config.seed, kStreamModel));
    Rng rng(mix_seed(train_config.seed, kStreamTraining));
    std::vector<Tensor> params = model.trainable();
    AdamState adam;
    const AdamConfig adam_config{train_config.learning_rate, train_config.weight_decay};

    // Only training labels may reach the loss; validation labels are read
    // through evaluate(). Test labels are touched once, after training.
    const std::size_t batch = train_config.batch_size.value_or(split.train.size());
    std::vector<NodeId> order = split.train;

    RunResult result;
    result.param_count = count_params(model);
    result.best_val_accuracy = -1.0;
    for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        rng.shuffle(std::span<NodeId>(order));
        double loss_sum = 0.0;
        double last_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += batch, ++batch_index) {
            const std::size_t stop = std::min(order.size(), start + batch);
            // The shuffle picks batch membership; the loss sums in index order.
            std::vector<NodeId> nodes(order.begin() + static_cast<std::ptrdiff_t>(start),
                                      order.begin() + static_cast<std::ptrdiff_t>(stop));
            std::sort(nodes.begin(), nodes.end());
            for (Tensor& p : params) {
                p.zero_grad();
            }
            Tape tape;
            const Tensor logits = forward(tape, model, inputs, true, DropoutSeed{rng.next()});
            const Tensor loss = softmax_nll(tape, logits, dataset.labels, nodes);
            const double value = loss.item();
            if (!std::isfinite(value)) {
                throw NonFiniteError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batch_index));
            }
            tape.backward(loss);
            for (const Tensor& p : params) {
                if (!p.grad().all_finite()) {
                    throw NonFiniteError("non-finite gradient at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch_index));
                }
            }
            adam_step(params, adam, adam_config);
            loss_sum += value * static_cast<double>(nodes.size());
            last_loss = value;
        }
        // A single batch reports its loss as is, avoiding the scale round trip.
        const double epoch_loss = batch_index == 1 ? last_loss : loss_sum / static_cast<double>(order.size());
        const double val_acc = evaluate(model, inputs, dataset.labels, split.val);
        const auto t1 = std::chrono::steady_clock::now();
        result.epoch_times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        result.history.push_back({epoch_loss, val_acc});
        if (val_acc > result.best_val_accuracy) {
            result.best_val_accuracy = val_acc;
            result.best_epoch = epoch;
            result.best_model = model.clone();
        }
    }
    result.test_accuracy = evaluate(result.best_model, inputs, dataset.labels, split.test);
    if (model_config.architecture == Architecture::GCNH) {
        result.betas = extract_betas(result.best_model);
    }
    return result;
}

RunResult train(const Dataset& dataset, const SplitMask& split, const ModelConfig& model_config,
                const TrainConfig& train_config) {
    const GraphInputs inputs = GraphInputs::from(dataset);
    return train(dataset, inputs, split, model_config, train_config);
}

namespace {

void summarize(ProtocolResult& out) {
    const auto k = static_cast<double>(out.runs.size());
    double test = 0.0, val = 0.0;
    for (const auto& r : out.runs) {
        test += r.test_accuracy;
        val += r.best_val_accuracy;
    }
    out.mean_test = test / k;
    out.mean_val = val / k;
    double ss = 0.0;
    for (const auto& r : out.runs) {
        ss += (r.test_accuracy - out.mean_test) * (r.test_accuracy - out.mean_test);
    }
    out.std_test = out.runs.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
}

} // namespace

ProtocolResult run_protocol(const Dataset& dataset, const ModelConfig& model_config,
                            const TrainConfig& train_config, std::size_t workers) {
    if (dataset.splits.empty()) {
        throw InputError("run_protocol: dataset has no splits");
    }
    const GraphInputs inputs = GraphInputs::from(dataset);
    ProtocolResult out;
    out.runs.resize(dataset.splits.size());
    parallel_for(dataset.splits.size(), workers, [&](std::size_t s) {
        TrainConfig tc = train_config;
        tc.seed = train_config.seed + s;
        out.runs[s] = train(dataset, inputs, dataset.splits[s], model_config, tc);
    });
    summarize(out);
    return out;
}

std::size_t HyperGrid::size() const {
    return architectures.size() * num_layers.size() * batch_sizes.size() * epochs.size() *
           hidden_sizes.size() * dropout_rates.size() * aggregations.size() * share_mlps.size() *
           betas.size() * learning_rates.size() * weight_decays.size();
}

std::vector<HyperGrid::Point> HyperGrid::expand(std::uint64_t seed) const {
    std::vector<Point> out;
    out.reserve(size());
    for (auto arch : architectures)
    for (auto layers : num_layers)
    for (auto bs : batch_sizes)
    for (auto ep : epochs)
    for (auto hid : hidden_sizes)
    for (auto dr : dropout_rates)
    for (auto agg : aggregations)
    for (bool share : share_mlps)
    for (const auto& beta : betas)
    for (auto lr : learning_rates)
    for (auto wd : weight_decays) {
        Point p;
        p.model.architecture = arch;
        p.model.num_layers = layers;
        p.model.hidden_size = hid;
        p.model.dropout_rate = dr;
        p.model.aggregation = agg;
        p.model.share_mlps = share;
        p.model.beta_fixed_value = beta;
        p.model.beta_trainable = !beta.has_value();
        p.train.batch_size = bs;
        p.train.epochs = ep;
        p.train.learning_rate = lr;
        p.train.weight_decay = wd;
        p.train.seed = seed;
        out.push_back(p);
    }
    return out;
}

GridResult grid_search(const Dataset& dataset, const HyperGrid& grid, std::uint64_t seed,
                       std::size_t workers) {
    GridResult out;
    out.points = grid.expand(seed);
    if (out.points.empty()) {
        throw InputError("grid_search: empty grid");
    }
    const std::size_t splits = dataset.splits.size();
    if (splits == 0) {
        throw InputError("grid_search: dataset has no splits");
    }
    const GraphInputs inputs = GraphInputs::from(dataset);
    out.results.resize(out.points.size());
    for (auto& r : out.results) {
        r.runs.resize(splits);
    }
    parallel_for(out.points.size() * splits, workers, [&](std::size_t task) {
        const std::size_t c = task / splits;
        const std::size_t s = task % splits;
        TrainConfig tc = out.points[c].train;
        tc.seed += s;
        out.results[c].runs[s] = train(dataset, inputs, dataset.splits[s], out.points[c].model, tc);
    });
    for (std::size_t c = 0; c < out.points.size(); ++c) {
        summarize(out.results[c]);
        out.param_counts.push_back(
            expected_param_count(out.points[c].model, dataset.num_features(), dataset.num_classes()));
    }
    for (std::size_t c = 1; c < out.points.size(); ++c) {
        const auto& cand = out.results[c];
        const auto& best = out.results[out.best_index];
        if (cand.mean_val > best.mean_val ||
            (cand.mean_val == best.mean_val && out.param_counts[c] < out.param_counts[out.best_index])) {
            out.best_index = c;
        }
    }
    return out;
}

namespace {

struct PublishedRow {
    const char* name;
    std::vector<std::size_t> layers;
    std::vector<std::optional<std::size_t>> batches;  // nullopt = |V|
    std::vector<std::size_t> epochs;
    std::vector<std::size_t> hidden;
    std::vector<double> dropout;
    // Index into each list of the reported best value; -1 for syn-cora.
    int best_layers, best_batch, best_epochs, best_hidden, best_dropout;
};

const std::vector<PublishedRow>& published_rows() {
    using B = std::optional<std::size_t>;
    const B full = std::nullopt;
    static const std::vector<PublishedRow> rows{
        {"cornell", {1, 2, 3}, {B{50}, full}, {100, 200, 300}, {16, 32, 64}, {0.0, 0.25, 0.5}, 0, 0, 2, 0, 1},
        {"texas", {1, 2, 3}, {B{50}, full}, {100, 200, 300}, {16, 32, 64}, {0.0, 0.25, 0.5}, 0, 1, 2, 1, 1},
        {"wisconsin", {1, 2, 3}, {B{50}, full}, {100, 200, 300}, {16, 32, 64}, {0.0, 0.3, 0.6}, 1, 0, 2, 1, 1},
        {"film", {1, 2, 3}, {B{300}, B{500}, full}, {150}, {16, 32, 64}, {0.0, 0.3, 0.6}, 1, 1, 0, 1, 2},
        {"chameleon", {1, 2, 3}, {B{300}, B{600}, full}, {500, 1000, 1500}, {16, 32, 64}, {0.0, 0.25, 0.5}, 0, 0, 1, 1, 0},
        {"squirrel", {1, 2, 3}, {B{300}, B{1400}, full}, {500, 1000, 1500}, {16, 32, 64}, {0.0, 0.25, 0.5}, 0, 1, 2, 1, 0},
        {"cora", {1, 2, 3}, {B{150}, B{300}, full}, {300}, {16, 32, 64}, {0.0, 0.25, 0.5, 0.75}, 1, 0, 0, 2, 3},
        {"citeseer", {1, 2, 3}, {B{150}, B{300}, full}, {300}, {16, 32, 64}, {0.0, 0.25, 0.5, 0.75}, 0, 1, 0, 0, 1},
        {"syn-cora", {1, 2, 3}, {B{300}, full}, {300}, {16, 32}, {0.0, 0.25, 0.5}, -1, -1, -1, -1, -1},
    };
    return rows;
}

const PublishedRow& find_row(std::string_view dataset) {
    std::string key(dataset);
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (key == "actor") {
        key = "film";
    }
    for (const auto& row : published_rows()) {
        if (key == row.name) {
            return row;
        }
    }
    throw InputError("no hyperparameter preset for dataset '" + std::string(dataset) + "'");
}

std::optional<std::size_t> resolve_batch(std::optional<std::size_t> b, std::size_t num_nodes) {
    return b ? b : std::optional<std::size_t>(num_nodes);
}

} // namespace

HyperGrid published_grid(std::string_view dataset, std::size_t num_nodes) {
    const PublishedRow& row = find_row(dataset);
    HyperGrid g;
    g.num_layers = row.layers;
    g.batch_sizes.clear();
    for (auto b : row.batches) {
        g.batch_sizes.push_back(resolve_batch(b, num_nodes));
    }
    g.epochs = row.epochs;
    g.hidden_sizes = row.hidden;
    g.dropout_rates = row.dropout;
    return g;
}

HyperGrid::Point published_best_config(std::string_view dataset, std::size_t num_nodes, std::uint64_t seed) {
    const PublishedRow& row = find_row(dataset);
    if (row.best_layers < 0) {
        throw InputError("no single best configuration is reported for '" + std::string(dataset) + "'");
    }
    HyperGrid::Point p;
    p.model.architecture = Architecture::GCNH;
    p.model.num_layers = row.layers[static_cast<std::size_t>(row.best_layers)];
    p.model.hidden_size = row.hidden[static_cast<std::size_t>(row.best_hidden)];
    p.model.dropout_rate = row.dropout[static_cast<std::size_t>(row.best_dropout)];
    p.train.batch_size = resolve_batch(row.batches[static_cast<std::size_t>(row.best_batch)], num_nodes);
    p.train.epochs = row.epochs[static_cast<std::size_t>(row.best_epochs)];
    p.train.seed = seed;
    return p;
}

HyperGrid baseline_synth_grid(Architecture arch) {
    HyperGrid g;
    g.architectures = {arch};
    g.num_layers = {1, 2, 3};
    g.epochs = {100};
    g.hidden_sizes = {16, 32};
    return g;
}

json to_json(const TrainConfig& config) {
    json j;
    j["learning_rate"] = config.learning_rate;
    j["weight_decay"] = config.weight_decay;
    j["epochs"] = config.epochs;
    j["batch_size"] = config.batch_size ? json(*config.batch_size) : json("full");
    j["seed"] = config.seed;
    return j;
}

namespace {

std::optional<std::size_t> batch_from_json(const json& v) {
    if (v.is_string()) {
        if (v.get<std::string>() == "full") {
            return std::nullopt;
        }
        throw InputError("batch_size must be an integer or \"full\"");
    }
    if (v.is_null()) {
        return std::nullopt;
    }
    return v.get<std::size_t>();
}

std::optional<double> beta_from_json(const json& v) {
    if (v.is_string()) {
        if (v.get<std::string>() == "learned") {
            return std::nullopt;
        }
        throw InputError("beta must be a number or \"learned\"");
    }
    if (v.is_null()) {
        return std::nullopt;
    }
    return v.get<double>();
}

template <typename T, typename Conv>
void read_list(const json& j, const char* key, std::vector<T>& dst, Conv conv) {
    if (!j.contains(key)) {
        return;
    }
    const json& v = j[key];
    dst.clear();
    if (v.is_array()) {
        for (const auto& e : v) {
            dst.push_back(conv(e));
        }
    } else {
        dst.push_back(conv(v));
    }
    if (dst.empty()) {
        throw InputError(std::string("grid: '") + key + "' is empty");
    }
}

} // namespace

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    try {
        if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
        if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
        if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
        if (j.contains("batch_size")) c.batch_size = batch_from_json(j["batch_size"]);
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw InputError(std::string("train config: ") + e.what());
    }
    c.validate();
    return c;
}

json to_json(const RunResult& r, bool include_timings) {
    json j;
    j["schema_version"] = kResultSchemaVersion;
    j["test_accuracy"] = r.test_accuracy;
    j["best_val_accuracy"] = r.best_val_accuracy;
    j["best_epoch"] = r.best_epoch;
    j["betas"] = r.betas;
    j["param_count"] = r.param_count;
    json hist = json::array();
    for (const auto& e : r.history) {
        hist.push_back({{"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy}});
    }
    j["history"] = std::move(hist);
    if (include_timings) {
        j["epoch_times_ms"] = r.epoch_times_ms;
    }
    return j;
}

json to_json(const HyperGrid& g) {
    json j;
    auto names = [](const auto& v, auto fn) {
        json a = json::array();
        for (const auto& e : v) a.push_back(fn(e));
        return a;
    };
    j["architecture"] = names(g.architectures, [](Architecture a) { return std::string(to_string(a)); });
    j["num_layers"] = g.num_layers;
    j["batch_size"] = names(g.batch_sizes, [](auto b) { return b ? json(*b) : json("full"); });
    j["epochs"] = g.epochs;
    j["hidden_size"] = g.hidden_sizes;
    j["dropout_rate"] = g.dropout_rates;
    j["aggregation"] = names(g.aggregations, [](AggregationMode m) { return std::string(to_string(m)); });
    j["share_mlps"] = g.share_mlps;
    j["beta"] = names(g.betas, [](auto b) { return b ? json(*b) : json("learned"); });
    j["learning_rate"] = g.learning_rates;
    j["weight_decay"] = g.weight_decays;
    return j;
}

HyperGrid hyper_grid_from_json(const json& j) {
    if (!j.is_object()) {
        throw InputError("grid file must hold a JSON object");
    }
    static const std::set<std::string> known{"architecture", "num_layers",   "batch_size", "epochs",
                                             "hidden_size",  "dropout_rate", "aggregation", "share_mlps",
                                             "beta",         "learning_rate", "weight_decay"};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw InputError("grid file: unknown field '" + key + "'");
        }
    }
    HyperGrid g;
    try {
        read_list(j, "architecture", g.architectures,
                  [](const json& v) { return parse_architecture(v.get<std::string>()); });
        read_list(j, "num_layers", g.num_layers, [](const json& v) { return v.get<std::size_t>(); });
        read_list(j, "batch_size", g.batch_sizes, batch_from_json);
        read_list(j, "epochs", g.epochs, [](const json& v) { return v.get<std::size_t>(); });
        read_list(j, "hidden_size", g.hidden_sizes, [](const json& v) { return v.get<std::size_t>(); });
        read_list(j, "dropout_rate", g.dropout_rates, [](const json& v) { return v.get<double>(); });
        read_list(j, "aggregation", g.aggregations,
                  [](const json& v) { return parse_aggregation(v.get<std::string>()); });
        read_list(j, "share_mlps", g.share_mlps, [](const json& v) { return v.get<bool>(); });
        read_list(j, "beta", g.betas, beta_from_json);
        read_list(j, "learning_rate", g.learning_rates, [](const json& v) { return v.get<double>(); });
        read_list(j, "weight_decay", g.weight_decays, [](const json& v) { return v.get<double>(); });
    } catch (const json::exception& e) {
        throw InputError(std::string("grid file: ") + e.what());
    }
    for (const auto& p : g.expand(0)) {
        p.model.validate();
        p.train.validate();
    }
    return g;
}

std::string grid_csv_header() {
    return "schema_version,config_index,architecture,num_layers,hidden_size,dropout_rate,aggregation,"
           "share_mlps,beta,batch_size,epochs,learning_rate,weight_decay,split,seed,val_accuracy,"
           "test_accuracy,best_epoch,param_count,betas";
}

void write_grid_csv(std::ostream& out, const GridResult& result) {
    out << grid_csv_header() << '\n';
    for (std::size_t c = 0; c < result.points.size(); ++c) {
        const auto& p = result.points[c];
        for (std::size_t s = 0; s < result.results[c].runs.size(); ++s) {
            const auto& run = result.results[c].runs[s];
            std::string betas;
            for (std::size_t i = 0; i < run.betas.size(); ++i) {
                betas += (i ? ";" : "") + format_double(run.betas[i]);
            }
            out << kResultSchemaVersion << ',' << c << ',' << to_string(p.model.architecture) << ','
                << p.model.num_layers << ',' << p.model.hidden_size << ','
                << format_double(p.model.dropout_rate) << ',' << to_string(p.model.aggregation) << ','
                << (p.model.share_mlps ? "true" : "false") << ','
                << (p.model.beta_fixed_value ? format_double(*p.model.beta_fixed_value) : "learned") << ','
                << (p.train.batch_size ? std::to_string(*p.train.batch_size) : "full") << ','
                << p.train.epochs << ',' << format_double(p.train.learning_rate) << ','
                << format_double(p.train.weight_decay) << ',' << s << ',' << (p.train.seed + s) << ','
                << format_double(run.best_val_accuracy) << ',' << format_double(run.test_accuracy) << ','
                << run.best_epoch << ',' << run.param_count << ',' << betas << '\n';
        }
    }
}

} // namespace gcnh
