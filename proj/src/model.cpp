#include "gcnh/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gcnh/error.hpp"
#include "gcnh/io_json.hpp"
#include "gcnh/rng.hpp"

namespace gcnh {

using nlohmann::json;

std::string_view to_string(Architecture arch) {
    switch (arch) {
    case Architecture::GCNH:
        return "GCNH";
    case Architecture::GCN:
        return "GCN";
    case Architecture::MLP:
        return "MLP";
    }
    return "?";
}

Architecture parse_architecture(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "GCNH") return Architecture::GCNH;
    if (upper == "GCN") return Architecture::GCN;
    if (upper == "MLP") return Architecture::MLP;
    throw InputError("unknown architecture '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
    if (num_layers < 1) {
        throw InputError("model config: num_layers must be >= 1");
    }
    if (hidden_size < 1) {
        throw InputError("model config: hidden_size must be >= 1");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw InputError("model config: dropout_rate must be in [0, 1)");
    }
    if (beta_fixed_value) {
        if (beta_trainable) {
            throw InputError("model config: a fixed beta cannot also be trainable");
        }
        if (!(*beta_fixed_value >= 0.0 && *beta_fixed_value <= 1.0)) {
            throw InputError("model config: fixed beta must be in [0, 1]");
        }
    }
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

namespace {

// Stream roles for parameter initialization.
enum : std::uint64_t { kRoleCenter = 1, kRoleNeighbor = 2, kRoleClassifier = 3 };
constexpr std::uint64_t kClassifierLayer = 1u << 20;

Tensor glorot(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed, std::uint64_t layer,
              std::uint64_t role) {
    Rng rng(mix_seed(seed, layer, role));
    const double bound = glorot_bound(fan_in, fan_out);
    Matrix w(fan_in, fan_out);
    for (double& v : w.values()) {
        v = rng.uniform(-bound, bound);
    }
    return Tensor::parameter(std::move(w));
}

Tensor zeros_param(std::size_t cols) { return Tensor::parameter(Matrix(1, cols)); }

Tensor copy_tensor(const Tensor& t) {
    return t.requires_grad() ? Tensor::parameter(t.value()) : Tensor::constant(t.value());
}

Rng branch_rng(DropoutSeed seed, std::size_t layer, std::uint64_t branch) {
    return Rng(mix_seed(seed.value, layer, branch));
}

Tensor dense_act(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
    return leaky_relu(tape, add_row_bias(tape, matmul(tape, x, w), b));
}

} // namespace

Model init_model(const ModelConfig& config, std::size_t input_dim, std::size_t num_classes,
                 std::uint64_t seed) {
    config.validate();
    if (input_dim < 1 || num_classes < 1) {
        throw InputError("init_model: dimensions must be >= 1");
    }
    Model m;
    m.config = config;
    m.input_dim = input_dim;
    m.num_classes = num_classes;
    m.seed = seed;

    std::size_t in = input_dim;
    const std::size_t hidden = config.hidden_size;
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        if (config.architecture == Architecture::GCNH) {
            GCNHLayerParams p;
            p.w1 = glorot(in, hidden, seed, l, kRoleCenter);
            p.b1 = zeros_param(hidden);
            if (config.share_mlps) {
                p.w2 = p.w1;
                p.b2 = p.b1;
            } else {
                p.w2 = glorot(in, hidden, seed, l, kRoleNeighbor);
                p.b2 = zeros_param(hidden);
            }
            p.raw_beta = config.beta_trainable ? Tensor::parameter(Matrix(1, 1))
                                               : Tensor::constant(Matrix(1, 1));
            m.gcnh_layers.push_back(std::move(p));
        } else {
            m.layers.push_back({glorot(in, hidden, seed, l, kRoleCenter), zeros_param(hidden)});
        }
        in = hidden;
    }
    m.classifier = {glorot(in, num_classes, seed, kClassifierLayer, kRoleClassifier),
                    zeros_param(num_classes)};
    return m;
}

std::vector<Tensor> Model::trainable() const {
    std::vector<Tensor> out;
    auto add = [&](const Tensor& t) {
        if (!t.requires_grad()) {
            return;
        }
        for (const Tensor& existing : out) {
            if (existing.same(t)) {
                return;
            }
        }
        out.push_back(t);
    };
    for (const auto& p : gcnh_layers) {
        add(p.w1);
        add(p.b1);
        add(p.w2);
        add(p.b2);
        add(p.raw_beta);
    }
    for (const auto& p : layers) {
        add(p.w);
        add(p.b);
    }
    add(classifier.w);
    add(classifier.b);
    return out;
}

std::vector<std::pair<std::string, Tensor>> Model::named_tensors() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t l = 0; l < gcnh_layers.size(); ++l) {
        const auto& p = gcnh_layers[l];
        const std::string pre = "layer" + std::to_string(l) + ".";
        out.emplace_back(pre + "w1", p.w1);
        out.emplace_back(pre + "b1", p.b1);
        if (!config.share_mlps) {
            out.emplace_back(pre + "w2", p.w2);
            out.emplace_back(pre + "b2", p.b2);
        }
        out.emplace_back(pre + "raw_beta", p.raw_beta);
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        out.emplace_back(pre + "w", layers[l].w);
        out.emplace_back(pre + "b", layers[l].b);
    }
    out.emplace_back("classifier.w", classifier.w);
    out.emplace_back("classifier.b", classifier.b);
    return out;
}

Model Model::clone() const {
    Model m;
    m.config = config;
    m.input_dim = input_dim;
    m.num_classes = num_classes;
    m.seed = seed;
    for (const auto& p : gcnh_layers) {
        GCNHLayerParams q;
        q.w1 = copy_tensor(p.w1);
        q.b1 = copy_tensor(p.b1);
        if (p.w2.same(p.w1)) {
            q.w2 = q.w1;
            q.b2 = q.b1;
        } else {
            q.w2 = copy_tensor(p.w2);
            q.b2 = copy_tensor(p.b2);
        }
        q.raw_beta = copy_tensor(p.raw_beta);
        m.gcnh_layers.push_back(std::move(q));
    }
    for (const auto& p : layers) {
        m.layers.push_back({copy_tensor(p.w), copy_tensor(p.b)});
    }
    m.classifier = {copy_tensor(classifier.w), copy_tensor(classifier.b)};
    return m;
}

GraphInputs GraphInputs::from(const Graph& graph, const Matrix& features) {
    GraphInputs in;
    in.graph = &graph;
    in.adjacency = normalized_adjacency(graph);
    in.features = Tensor::constant(features);
    return in;
}

GraphInputs GraphInputs::from(const Dataset& dataset) {
    return from(dataset.graph, dataset.features);
}

Tensor layer_beta(Tape& tape, const GCNHLayerParams& params, const ModelConfig& config) {
    if (config.beta_fixed_value) {
        return Tensor::constant(Matrix(1, 1, *config.beta_fixed_value));
    }
    return sigmoid_scalar(tape, params.raw_beta);
}

Tensor gcnh_layer_forward(Tape& tape, const Tensor& h, const Graph& graph,
                          const GCNHLayerParams& params, const ModelConfig& config, bool training,
                          DropoutSeed seed, std::size_t layer_index) {
    if (h.rows() != graph.num_nodes()) {
        throw ShapeError("gcnh_layer_forward: input rows != graph nodes");
    }
    Rng center_rng = branch_rng(seed, layer_index, 0);
    Rng neighbor_rng = branch_rng(seed, layer_index, 1);
    const Tensor z_self =
        dense_act(tape, dropout(tape, h, config.dropout_rate, training, center_rng), params.w1, params.b1);
    const Tensor z_pre = dense_act(tape, dropout(tape, h, config.dropout_rate, training, neighbor_rng),
                                   params.w2, params.b2);
    const Tensor z_nbr = neighbor_aggregate(tape, graph, z_pre, config.aggregation);
    return convex_mix(tape, z_self, z_nbr, layer_beta(tape, params, config));
}

Tensor gcn_layer_forward(Tape& tape, const Tensor& h, const NormalizedAdjacency& adjacency,
                         const LinearParams& params, double dropout_rate, bool training,
                         DropoutSeed seed, std::size_t layer_index) {
    Rng rng = branch_rng(seed, layer_index, 0);
    const Tensor xw = matmul(tape, dropout(tape, h, dropout_rate, training, rng), params.w);
    return leaky_relu(tape, add_row_bias(tape, propagate(tape, adjacency, xw), params.b));
}

Tensor forward(Tape& tape, const Model& model, const GraphInputs& inputs, bool training,
               DropoutSeed seed) {
    if (inputs.features.cols() != model.input_dim) {
        throw ShapeError("forward: feature width " + std::to_string(inputs.features.cols()) +
                         " != model input " + std::to_string(model.input_dim));
    }
    const auto& cfg = model.config;
    Tensor h = inputs.features;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        switch (cfg.architecture) {
        case Architecture::GCNH:
            h = gcnh_layer_forward(tape, h, *inputs.graph, model.gcnh_layers[l], cfg, training, seed, l);
            break;
        case Architecture::GCN:
            h = gcn_layer_forward(tape, h, inputs.adjacency, model.layers[l], cfg.dropout_rate,
                                  training, seed, l);
            break;
        case Architecture::MLP: {
            Rng rng = branch_rng(seed, l, 0);
            h = dense_act(tape, dropout(tape, h, cfg.dropout_rate, training, rng), model.layers[l].w,
                          model.layers[l].b);
            break;
        }
        }
    }
    return add_row_bias(tape, matmul(tape, h, model.classifier.w), model.classifier.b);
}

Matrix infer_logits(const Model& model, const GraphInputs& inputs) {
    // Recording would only hold memory; parameters are swapped for constants.
    Model frozen = model.clone();
    auto freeze = [](Tensor& t) { t = Tensor::constant(t.value()); };
    for (auto& p : frozen.gcnh_layers) {
        const bool shared = p.w2.same(p.w1);
        freeze(p.w1);
        freeze(p.b1);
        if (shared) {
            p.w2 = p.w1;
            p.b2 = p.b1;
        } else {
            freeze(p.w2);
            freeze(p.b2);
        }
        freeze(p.raw_beta);
    }
    for (auto& p : frozen.layers) {
        freeze(p.w);
        freeze(p.b);
    }
    freeze(frozen.classifier.w);
    freeze(frozen.classifier.b);
    Tape tape;
    return forward(tape, frozen, inputs, false).value();
}

PredictionOutput predict(const Matrix& logits) {
    PredictionOutput out;
    out.class_probs = softmax_rows(logits);
    out.predicted.resize(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto row = out.class_probs.row(r);
        out.predicted[r] =
            static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

std::vector<double> extract_betas(const Model& model) {
    if (model.config.architecture != Architecture::GCNH) {
        throw InputError("extract_betas: model is not GCNH");
    }
    std::vector<double> betas;
    for (const auto& p : model.gcnh_layers) {
        if (model.config.beta_fixed_value) {
            betas.push_back(*model.config.beta_fixed_value);
        } else {
            betas.push_back(1.0 / (1.0 + std::exp(-p.raw_beta.item())));
        }
    }
    return betas;
}

std::size_t count_params(const Model& model) {
    std::size_t total = 0;
    for (const Tensor& t : model.trainable()) {
        total += t.value().size();
    }
    return total;
}

std::size_t expected_param_count(const ModelConfig& config, std::size_t input_dim,
                                 std::size_t num_classes) {
    const std::size_t h = config.hidden_size;
    std::size_t total = 0;
    std::size_t in = input_dim;
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        const std::size_t block = in * h + h;
        if (config.architecture == Architecture::GCNH) {
            total += config.share_mlps ? block : 2 * block;
            total += config.beta_trainable ? 1 : 0;
        } else {
            total += block;
        }
        in = h;
    }
    return total + in * num_classes + num_classes;
}

std::string checkpoint_to_json(const Model& model) {
    json doc;
    doc["format"] = "gcnh-checkpoint";
    doc["version"] = kCheckpointVersion;
    doc["config"] = to_json(model.config);
    doc["input_dim"] = model.input_dim;
    doc["num_classes"] = model.num_classes;
    doc["seed"] = model.seed;
    json tensors = json::array();
    for (const auto& [name, t] : model.named_tensors()) {
        tensors.push_back({{"name", name},
                           {"rows", t.rows()},
                           {"cols", t.cols()},
                           {"data", std::vector<double>(t.value().values().begin(), t.value().values().end())}});
    }
    doc["tensors"] = std::move(tensors);
    return doc.dump();
}

Model checkpoint_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("checkpoint: ") + e.what());
    }
    if (doc.value("format", "") != "gcnh-checkpoint") {
        throw IoError("checkpoint: not a gcnh checkpoint");
    }
    if (doc.value("version", 0) != kCheckpointVersion) {
        throw IoError("checkpoint: unsupported version");
    }
    const ModelConfig config = model_config_from_json(doc.at("config"));
    Model model = init_model(config, doc.at("input_dim").get<std::size_t>(),
                             doc.at("num_classes").get<std::size_t>(), doc.at("seed").get<std::uint64_t>());
    auto named = model.named_tensors();
    const auto& stored = doc.at("tensors");
    if (stored.size() != named.size()) {
        throw IoError("checkpoint: tensor count mismatch");
    }
    for (std::size_t i = 0; i < named.size(); ++i) {
        auto& [name, t] = named[i];
        const auto& entry = stored[i];
        if (entry.at("name").get<std::string>() != name || entry.at("rows").get<std::size_t>() != t.rows() ||
            entry.at("cols").get<std::size_t>() != t.cols()) {
            throw IoError("checkpoint: tensor '" + name + "' does not match the config");
        }
        const auto data = entry.at("data").get<std::vector<double>>();
        if (data.size() != t.value().size()) {
            throw IoError("checkpoint: tensor '" + name + "' has wrong length");
        }
        std::copy(data.begin(), data.end(), t.value().data());
    }
    return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << checkpoint_to_json(model) << '\n';
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFileError("cannot read checkpoint " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_json(ss.str());
}

} // namespace gcnh
