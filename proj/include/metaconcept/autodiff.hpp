// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over rank-2 tensors.
//
// Every operation builds a node holding its forward value and a backward
// rule. Backward rules are themselves written with the operations below, so
// a gradient computed with create_graph=true is differentiable again; this is
// what the second-order inner loop relies on. With create_graph=false the
// rules run with recording disabled and return constants.
//
// Forward values are checked for NaN/Inf at every node and a NumericalError
// names the offending operation.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "metaconcept/tensor.hpp"

namespace metaconcept {

class Rng;
class Var;
struct Node;

using BackwardFn = std::function<std::vector<Var>(const Var& grad_out, const std::vector<Var>& inputs)>;

struct Node {
    Tensor value;
    std::optional<Tensor> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    BackwardFn backward;
    std::string_view op = "leaf";
};

/// Handle to a node of the computation graph. Copies share the node.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    /// Leaf that never receives gradients.
    static Var constant(Tensor value);
    /// Leaf that accumulates gradients on backward().
    static Var parameter(Tensor value);

    bool defined() const noexcept { return static_cast<bool>(node_); }
    const Tensor& value() const { return node_->value; }
    /// In-place access for optimizers. Graphs built from this node before the
    /// mutation are invalidated.
    Tensor& mutable_value() { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    std::size_t rows() const { return node_->value.rows(); }
    std::size_t cols() const { return node_->value.cols(); }
    bool requires_grad() const { return node_->requires_grad; }
    std::string_view op() const { return node_->op; }

    const std::optional<Tensor>& grad() const { return node_->grad; }
    void zero_grad() { node_->grad.reset(); }

    /// Backpropagates from this 1x1 value into every reachable parameter leaf,
    /// adding to their grad().
    void backward() const;

    const std::shared_ptr<Node>& node() const noexcept { return node_; }

private:
    std::shared_ptr<Node> node_;
};

/// Whether new operations record their inputs. Thread-local, default on.
bool grad_enabled() noexcept;

class GradModeGuard {
public:
    explicit GradModeGuard(bool enabled);
    ~GradModeGuard();
    GradModeGuard(const GradModeGuard&) = delete;
    GradModeGuard& operator=(const GradModeGuard&) = delete;

private:
    bool previous_;
};

/**
 * Gradients of a 1x1 `output` with respect to `inputs`.
 *
 * Does not touch any node's grad() field, so it is safe to call while other
 * threads read the same parameters. Inputs with no path from `output` get a
 * zero constant. With create_graph=true the returned Vars are differentiable
 * functions of the graph; otherwise they are constants.
 */
std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs, bool create_graph = false);

// Elementwise arithmetic (identical shapes).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double s);
Var exp(const Var& a);
Var log(const Var& a);

// Matrix products and layout.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

// Broadcasting and reductions. Row vectors are 1xn, column vectors mx1.
Var broadcast_rows(const Var& row, std::size_t rows);
Var broadcast_cols(const Var& col, std::size_t cols);
Var sum_rows(const Var& a);  ///< mxn -> 1xn
Var sum_cols(const Var& a);  ///< mxn -> mx1
Var sum_all(const Var& a);   ///< mxn -> 1x1
Var mean_rows(const Var& a); ///< mxn -> 1xn
/// a (mxn) plus a 1xn bias added to every row.
Var add_row_bias(const Var& a, const Var& bias);

// Activations. The gradient at exactly 0 takes the positive branch.
enum class Activation { identity, relu, leaky_relu };
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var identity(const Var& x);
Var activate(const Var& x, Activation act, double slope);

// Row selection and assembly.
/// Rows of `x` in the order of `rows`; indices may repeat.
Var gather_rows(const Var& x, std::span<const std::size_t> rows);
/// total_rows x cols zero matrix with row i of `x` added into row rows[i].
Var scatter_rows(const Var& x, std::span<const std::size_t> rows, std::size_t total_rows);
/// Feature concatenation [a | b] of two matrices with equal row counts.
Var concat_cols(const Var& a, const Var& b);
/// Vertical concatenation of matrices with equal column counts.
Var concat_rows(const std::vector<Var>& parts);
/// Stacks 1xn rows into a matrix (concat_rows restricted to single rows).
Var stack_rows(const std::vector<Var>& rows);
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
Var slice_rows(const Var& a, std::size_t begin, std::size_t end);
Var pad_cols(const Var& a, std::size_t offset, std::size_t total_cols);
Var pad_rows(const Var& a, std::size_t offset, std::size_t total_rows);

/// Passes the value through and blocks gradient flow.
Var stop_gradient(const Var& x);

// Normalization and losses.
/// mx1 column of max(||row_i||, eps).
Var row_norms_clamped(const Var& x, double eps);
/// Each row divided by max(its Euclidean norm, eps).
Var l2_normalize_rows(const Var& x, double eps);
Var log_softmax_rows(const Var& logits);
Var softmax_rows(const Var& logits);
/// Mean over rows of -log softmax(logits)[label]. Throws IndexError on a bad label.
Var softmax_cross_entropy(const Var& logits, std::span<const int> labels);

/// Inverted dropout: in training, entries survive with probability keep_prob and
/// are scaled by 1/keep_prob. Identity when !training or keep_prob == 1.
Var dropout(const Var& x, double keep_prob, Rng& rng, bool training);

/// Plain forward value of softmax rows (no graph), numerically stabilized.
Tensor softmax_values(const Tensor& logits);

}  // namespace metaconcept
