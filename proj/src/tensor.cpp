#include "gcnh/tensor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "gcnh/error.hpp"
#include "gcnh/kernels.hpp"

namespace gcnh {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw ShapeError("Matrix: " + std::to_string(data_.size()) + " values for " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            t(c, r) = (*this)(r, c);
        }
    }
    return t;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::constant(Matrix value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Tensor(std::move(node));
}

Tensor Tensor::parameter(Matrix value) {
    auto node = std::make_shared<Node>();
    node->grad = Matrix(value.rows(), value.cols());
    node->value = std::move(value);
    node->requires_grad = true;
    return Tensor(std::move(node));
}

void Tensor::zero_grad() const {
    if (node_->requires_grad) {
        node_->grad.fill(0.0);
    }
}

Tensor Tape::record(Matrix value, bool requires_grad, BackwardFn backward) {
    auto node = std::make_shared<Tensor::Node>();
    if (requires_grad) {
        node->grad = Matrix(value.rows(), value.cols());
        node->requires_grad = true;
    }
    node->value = std::move(value);
    if (requires_grad) {
        entries_.push_back({node, std::move(backward)});
    }
    return Tensor(std::move(node));
}

void Tape::backward(const Tensor& loss) {
    if (loss.rows() != 1 || loss.cols() != 1) {
        throw ShapeError("backward: loss must be 1x1");
    }
    if (!loss.requires_grad()) {
        return;
    }
    loss.node_->grad[0] += 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        it->backward(it->output->grad);
    }
}

namespace {

void require(bool ok, const char* op, const std::string& detail) {
    if (!ok) {
        throw ShapeError(std::string(op) + ": " + detail);
    }
}

std::string shape(const Tensor& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

kernels::CsrView csr_of(const Graph& g) {
    return {g.num_nodes(), g.offsets().data(), g.adjacency().data()};
}

void add_into(Matrix& dst, const Matrix& src) {
    kernels::active().axpy(1.0, src.data(), dst.data(), dst.size());
}

} // namespace

std::string_view to_string(AggregationMode mode) {
    switch (mode) {
    case AggregationMode::Sum:
        return "sum";
    case AggregationMode::Mean:
        return "mean";
    case AggregationMode::Max:
        return "max";
    }
    return "?";
}

AggregationMode parse_aggregation(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "sum") return AggregationMode::Sum;
    if (lower == "mean") return AggregationMode::Mean;
    if (lower == "max") return AggregationMode::Max;
    throw InputError("unknown aggregation mode '" + std::string(name) + "'");
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    require(a.cols() == b.rows(), "matmul", shape(a) + " times " + shape(b));
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Matrix out(n, m);
    kernels::active().gemm_acc(a.value().data(), b.value().data(), out.data(), n, k, m);
    const bool rg = a.requires_grad() || b.requires_grad();
    return tape.record(std::move(out), rg, [a, b, n, k, m](const Matrix& g) mutable {
        const auto& kt = kernels::active();
        if (a.requires_grad()) {
            // dA = G B^T
            const Matrix bt = b.value().transposed();
            kt.gemm_acc(g.data(), bt.data(), a.grad().data(), n, m, k);
        }
        if (b.requires_grad()) {
            // dB = A^T G
            kt.gemm_tn_acc(a.value().data(), g.data(), b.grad().data(), n, k, m);
        }
    });
}

Tensor add_row_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
    require(bias.rows() == 1 && bias.cols() == x.cols(), "add_row_bias",
            shape(x) + " with bias " + shape(bias));
    Matrix out = x.value();
    const std::size_t d = x.cols();
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            out(r, c) += bias.value()[c];
        }
    }
    const bool rg = x.requires_grad() || bias.requires_grad();
    return tape.record(std::move(out), rg, [x, bias, d](const Matrix& g) mutable {
        if (x.requires_grad()) {
            add_into(x.grad(), g);
        }
        if (bias.requires_grad()) {
            for (std::size_t r = 0; r < g.rows(); ++r) {
                for (std::size_t c = 0; c < d; ++c) {
                    bias.grad()[c] += g(r, c);
                }
            }
        }
    });
}

Tensor leaky_relu(Tape& tape, const Tensor& x, double slope) {
    if (slope < 0.0) {
        throw InputError("leaky_relu: slope must be >= 0");
    }
    Matrix out = x.value();
    for (double& v : out.values()) {
        v = v > 0.0 ? v : slope * v;
    }
    return tape.record(std::move(out), x.requires_grad(), [x, slope](const Matrix& g) mutable {
        const Matrix& in = x.value();
        Matrix& dx = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            dx[i] += in[i] > 0.0 ? g[i] : slope * g[i];
        }
    });
}

Tensor sigmoid_scalar(Tape& tape, const Tensor& raw) {
    require(raw.rows() == 1 && raw.cols() == 1, "sigmoid_scalar", "expects 1x1, got " + shape(raw));
    const double s = 1.0 / (1.0 + std::exp(-raw.item()));
    return tape.record(Matrix(1, 1, s), raw.requires_grad(), [raw, s](const Matrix& g) mutable {
        raw.grad()[0] += g[0] * s * (1.0 - s);
    });
}

Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw InputError("dropout: rate must be in [0, 1)");
    }
    if (!training || rate == 0.0) {
        return x;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    Matrix mask(x.rows(), x.cols());
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = rng.bernoulli(rate) ? 0.0 : keep_scale;
        out[i] = x.value()[i] * mask[i];
    }
    return tape.record(std::move(out), x.requires_grad(),
                       [x, mask = std::move(mask)](const Matrix& g) mutable {
                           Matrix& dx = x.grad();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               dx[i] += g[i] * mask[i];
                           }
                       });
}

Tensor neighbor_aggregate(Tape& tape, const Graph& graph, const Tensor& x, AggregationMode mode) {
    require(x.rows() == graph.num_nodes(), "neighbor_aggregate",
            "feature rows " + std::to_string(x.rows()) + " != nodes " +
                std::to_string(graph.num_nodes()));
    const std::size_t n = x.rows(), d = x.cols();
    const auto& kt = kernels::active();
    const auto csr = csr_of(graph);
    Matrix out(n, d);

    switch (mode) {
    case AggregationMode::Sum: {
        kt.csr_sum(csr, x.value().data(), out.data(), d);
        // The adjacency is symmetric, so the transpose scatter is another gather.
        return tape.record(std::move(out), x.requires_grad(),
                           [x, &graph, n, d](const Matrix& g) mutable {
                               Matrix tmp(n, d);
                               kernels::active().csr_sum(csr_of(graph), g.data(), tmp.data(), d);
                               add_into(x.grad(), tmp);
                           });
    }
    case AggregationMode::Mean: {
        kt.csr_sum(csr, x.value().data(), out.data(), d);
        for (NodeId u = 0; u < n; ++u) {
            const auto deg = static_cast<double>(graph.degree(u));
            if (deg > 0) {
                for (double& v : out.row(u)) {
                    v /= deg;
                }
            }
        }
        return tape.record(std::move(out), x.requires_grad(),
                           [x, &graph, n, d](const Matrix& g) mutable {
                               Matrix scaled(n, d);
                               for (NodeId u = 0; u < n; ++u) {
                                   const auto deg = static_cast<double>(graph.degree(u));
                                   if (deg > 0) {
                                       for (std::size_t c = 0; c < d; ++c) {
                                           scaled(u, c) = g(u, c) / deg;
                                       }
                                   }
                               }
                               Matrix tmp(n, d);
                               kernels::active().csr_sum(csr_of(graph), scaled.data(), tmp.data(),
                                                         d);
                               add_into(x.grad(), tmp);
                           });
    }
    case AggregationMode::Max: {
        std::vector<std::uint32_t> argmax(n * d);
        kt.csr_max(csr, x.value().data(), out.data(), argmax.data(), d);
        return tape.record(std::move(out), x.requires_grad(),
                           [x, argmax = std::move(argmax), d](const Matrix& g) mutable {
                               Matrix& dx = x.grad();
                               for (std::size_t i = 0; i < argmax.size(); ++i) {
                                   const std::uint32_t v = argmax[i];
                                   if (v != std::numeric_limits<std::uint32_t>::max()) {
                                       dx(v, i % d) += g[i];
                                   }
                               }
                           });
    }
    }
    throw InputError("neighbor_aggregate: bad mode");
}

Tensor propagate(Tape& tape, const NormalizedAdjacency& adj, const Tensor& x) {
    require(x.rows() == adj.num_nodes, "propagate",
            "feature rows " + std::to_string(x.rows()) + " != nodes " +
                std::to_string(adj.num_nodes));
    const std::size_t n = x.rows(), d = x.cols();
    const kernels::CsrView csr{n, adj.offsets.data(), adj.columns.data()};
    Matrix out(n, d);
    kernels::active().csr_weighted_sum(csr, adj.weights.data(), x.value().data(), out.data(), d);
    return tape.record(std::move(out), x.requires_grad(), [x, &adj, csr, n, d](const Matrix& g) mutable {
        Matrix tmp(n, d);
        kernels::active().csr_weighted_sum(csr, adj.weights.data(), g.data(), tmp.data(), d);
        add_into(x.grad(), tmp);
    });
}

Tensor convex_mix(Tape& tape, const Tensor& self, const Tensor& neighbors, const Tensor& beta) {
    require(self.value().same_shape(neighbors.value()), "convex_mix",
            shape(self) + " vs " + shape(neighbors));
    require(beta.rows() == 1 && beta.cols() == 1, "convex_mix", "beta must be 1x1");
    const double b = beta.item();
    const double nb = 1.0 - b;
    Matrix out(self.rows(), self.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = nb * neighbors.value()[i] + b * self.value()[i];
    }
    const bool rg = self.requires_grad() || neighbors.requires_grad() || beta.requires_grad();
    return tape.record(std::move(out), rg, [self, neighbors, beta, b, nb](const Matrix& g) mutable {
        if (self.requires_grad()) {
            kernels::active().axpy(b, g.data(), self.grad().data(), g.size());
        }
        if (neighbors.requires_grad()) {
            kernels::active().axpy(nb, g.data(), neighbors.grad().data(), g.size());
        }
        if (beta.requires_grad()) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                acc += g[i] * (self.value()[i] - neighbors.value()[i]);
            }
            beta.grad()[0] += acc;
        }
    });
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix probs(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto row = logits.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            probs(r, c) = std::exp(row[c] - mx);
            z += probs(r, c);
        }
        for (double& p : probs.row(r)) {
            p /= z;
        }
    }
    return probs;
}

Tensor softmax_nll(Tape& tape, const Tensor& logits, const LabelVector& labels,
                   std::span<const NodeId> mask) {
    if (mask.empty()) {
        throw InputError("softmax_nll: empty mask");
    }
    require(labels.size() == logits.rows(), "softmax_nll", "label count != logit rows");
    require(logits.cols() == labels.num_classes, "softmax_nll",
            "logit width " + std::to_string(logits.cols()) + " != classes " +
                std::to_string(labels.num_classes));
    const std::size_t c = logits.cols();
    const double inv = 1.0 / static_cast<double>(mask.size());
    // Softmax rows of the masked nodes, kept for the backward pass.
    Matrix probs(mask.size(), c);
    double total = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const auto row = logits.value().row(mask[i]);
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            probs(i, k) = std::exp(row[k] - mx);
            z += probs(i, k);
        }
        for (std::size_t k = 0; k < c; ++k) {
            probs(i, k) /= z;
        }
        const auto y = static_cast<std::size_t>(labels[mask[i]]);
        total += std::log(z) - (row[y] - mx);
    }
    std::vector<NodeId> rows(mask.begin(), mask.end());
    return tape.record(Matrix(1, 1, total * inv), logits.requires_grad(),
                       [logits, &labels, rows = std::move(rows), probs = std::move(probs), inv,
                        c](const Matrix& g) mutable {
                           Matrix& dl = logits.grad();
                           const double scale = g[0] * inv;
                           for (std::size_t i = 0; i < rows.size(); ++i) {
                               const auto y = static_cast<std::size_t>(labels[rows[i]]);
                               for (std::size_t k = 0; k < c; ++k) {
                                   const double target = k == y ? 1.0 : 0.0;
                                   dl(rows[i], k) += scale * (probs(i, k) - target);
                               }
                           }
                       });
}

} // namespace gcnh
