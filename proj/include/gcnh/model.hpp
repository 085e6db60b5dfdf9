#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gcnh/dataset.hpp"
#include "gcnh/graph.hpp"
#include "gcnh/tensor.hpp"

namespace gcnh {

enum class Architecture { GCNH, GCN, MLP };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);

struct ModelConfig {
    Architecture architecture = Architecture::GCNH;
    std::size_t num_layers = 1;
    std::size_t hidden_size = 16;
    double dropout_rate = 0.0;
    AggregationMode aggregation = AggregationMode::Sum;
    bool beta_trainable = true;
    /// When set, beta is this constant and never trained.
    std::optional<double> beta_fixed_value;
    /// Ablation: the neighbor MLP reuses the center-node MLP weights.
    bool share_mlps = false;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct GCNHLayerParams {
    Tensor w1, b1;
    Tensor w2, b2;  // same handles as w1/b1 when MLPs are shared
    Tensor raw_beta;  // pre-sigmoid; a constant when beta is not trained
};

/// Weight and bias of a GCN, MLP or classifier layer.
struct LinearParams {
    Tensor w, b;
};

class Model {
public:
    ModelConfig config;
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;
    std::uint64_t seed = 0;

    std::vector<GCNHLayerParams> gcnh_layers;  // GCNH only
    std::vector<LinearParams> layers;          // GCN and MLP
    LinearParams classifier;

    /// Distinct trainable tensors in a fixed order (shared tensors once).
    std::vector<Tensor> trainable() const;

    /// Every tensor with a stable name, for checkpoints.
    std::vector<std::pair<std::string, Tensor>> named_tensors() const;

    /// Deep copy of all parameter values (gradients are not copied).
    Model clone() const;
};

/// Glorot-uniform weights, zero biases, raw beta 0. Each tensor draws from
/// its own stream keyed by (seed, layer, role), so an MLP and a GCNH of the
/// same shape and seed share W1/b1 and the classifier bit-for-bit.
Model init_model(const ModelConfig& config, std::size_t input_dim, std::size_t num_classes,
                 std::uint64_t seed);

/// Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
double glorot_bound(std::size_t fan_in, std::size_t fan_out);

/// Everything a forward pass reads from a dataset; build once per dataset.
struct GraphInputs {
    const Graph* graph = nullptr;
    NormalizedAdjacency adjacency;
    Tensor features;

    static GraphInputs from(const Dataset& dataset);
    static GraphInputs from(const Graph& graph, const Matrix& features);
};

/// Dropout randomness for one forward pass. Layer l, branch b draws from the
/// stream mix_seed(seed, l, b), independent of beta and of other branches.
struct DropoutSeed {
    std::uint64_t value = 0;
};

/// One GCNH layer: (1 - beta) * AGG_{v in N(u)} s(drop(H) W2 + b2)_v + beta * s(drop(H) W1 + b1)_u.
Tensor gcnh_layer_forward(Tape& tape, const Tensor& h, const Graph& graph,
                          const GCNHLayerParams& params, const ModelConfig& config, bool training,
                          DropoutSeed seed, std::size_t layer_index);

/// One GCN layer: s(A_hat drop(H) W + b).
Tensor gcn_layer_forward(Tape& tape, const Tensor& h, const NormalizedAdjacency& adjacency,
                         const LinearParams& params, double dropout_rate, bool training,
                         DropoutSeed seed, std::size_t layer_index);

/// Beta of a GCNH layer as a 1x1 tensor on the tape.
Tensor layer_beta(Tape& tape, const GCNHLayerParams& params, const ModelConfig& config);

/// Logits (n x |C|): the architecture's layers followed by the linear classifier.
Tensor forward(Tape& tape, const Model& model, const GraphInputs& inputs, bool training,
               DropoutSeed seed = {});

/// Evaluation-mode logits without keeping gradients.
Matrix infer_logits(const Model& model, const GraphInputs& inputs);

struct PredictionOutput {
    Matrix class_probs;
    std::vector<std::int32_t> predicted;
};

/// Row-wise softmax and argmax (ties resolve to the lowest class index).
PredictionOutput predict(const Matrix& logits);

/// Beta per layer, in layer order. Throws InputError for non-GCNH models.
std::vector<double> extract_betas(const Model& model);

std::size_t count_params(const Model& model);

/// Closed-form parameter count, independent of any model instance.
std::size_t expected_param_count(const ModelConfig& config, std::size_t input_dim,
                                 std::size_t num_classes);

// Checkpoints: a JSON document holding the config, dims, seed and every
// tensor. Doubles are written in shortest round-trip form, so reading a
// checkpoint back reproduces each value bit-for-bit.
inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_json(const Model& model);
Model checkpoint_from_json(std::string_view text);
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

} // namespace gcnh
