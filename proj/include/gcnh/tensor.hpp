#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tensor is a shared handle to a value matrix plus (optionally) a gradient
// buffer. Operations take a Tape, compute their output eagerly and, when any
// input needs a gradient, append a backward closure to the tape.
// Tape::backward replays those closures in exact reverse order.
//
// Parameters are Tensors created with Tensor::parameter; they outlive the
// tapes that reference them and accumulate gradients until zero_grad().

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "gcnh/graph.hpp"
#include "gcnh/matrix.hpp"
#include "gcnh/rng.hpp"

namespace gcnh {

class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Matrix value);
    static Tensor parameter(Matrix value);

    bool defined() const noexcept { return static_cast<bool>(node_); }
    bool requires_grad() const noexcept { return node_->requires_grad; }
    std::size_t rows() const noexcept { return node_->value.rows(); }
    std::size_t cols() const noexcept { return node_->value.cols(); }

    const Matrix& value() const noexcept { return node_->value; }
    Matrix& value() noexcept { return node_->value; }
    /// Gradient buffer; empty for tensors that do not require gradients.
    /// Writable through const handles: the handle, not the storage, is const.
    Matrix& grad() const noexcept { return node_->grad; }

    void zero_grad() const;
    /// Scalar value of a 1x1 tensor.
    double item() const { return node_->value[0]; }

    /// Identity comparison: true when both handles share storage.
    bool same(const Tensor& other) const noexcept { return node_ == other.node_; }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
    };

    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    std::shared_ptr<Node> node_;

    friend class Tape;
};

class Tape {
public:
    /// Backward closure: receives the gradient of the op's output.
    using BackwardFn = std::function<void(const Matrix& out_grad)>;

    /// Registers an op output. When `requires_grad` is false the closure is
    /// dropped and the output is a constant.
    Tensor record(Matrix value, bool requires_grad, BackwardFn backward);

    /// Seeds d(loss)/d(loss) = 1 and propagates to every recorded input.
    /// `loss` must be a 1x1 tensor produced on this tape.
    void backward(const Tensor& loss);

    std::size_t size() const noexcept { return entries_.size(); }

private:
    struct Entry {
        std::shared_ptr<Tensor::Node> output;
        BackwardFn backward;
    };
    std::vector<Entry> entries_;
};

enum class AggregationMode { Sum, Mean, Max };

std::string_view to_string(AggregationMode mode);
/// Accepts "sum", "mean", "max" (case-insensitive). Throws InputError.
AggregationMode parse_aggregation(std::string_view name);

/// Default LeakyReLU negative slope.
inline constexpr double kLeakySlope = 0.01;

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor add_row_bias(Tape& tape, const Tensor& x, const Tensor& bias);
Tensor leaky_relu(Tape& tape, const Tensor& x, double slope = kLeakySlope);
Tensor sigmoid_scalar(Tape& tape, const Tensor& raw);

/// Inverted dropout. Identity when `training` is false or rate == 0.
Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, Rng& rng);

/// Row u of the result is the SUM / MEAN / MAX of rows v in N(u).
/// Isolated nodes yield a zero row. MAX routes gradients to the lowest-index
/// maximizing neighbor per coordinate.
Tensor neighbor_aggregate(Tape& tape, const Graph& graph, const Tensor& x, AggregationMode mode);

/// Â x for a normalized adjacency operator (symmetric).
Tensor propagate(Tape& tape, const NormalizedAdjacency& adj, const Tensor& x);

/// (1 - beta) * neighbors + beta * self, beta a 1x1 tensor.
Tensor convex_mix(Tape& tape, const Tensor& self, const Tensor& neighbors, const Tensor& beta);

/// Mean over `mask` of -log softmax(logits_u)[y_u]; a 1x1 tensor.
Tensor softmax_nll(Tape& tape, const Tensor& logits, const LabelVector& labels,
                   std::span<const NodeId> mask);

/// Row-wise softmax without recording.
Matrix softmax_rows(const Matrix& logits);

} // namespace gcnh
