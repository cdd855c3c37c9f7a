// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include "metaconcept/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "metaconcept/error.hpp"
#include "metaconcept/rng.hpp"

namespace metaconcept {

namespace {

thread_local bool t_grad_enabled = true;

Var make_result(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
    if (!value.all_finite()) {
        throw NumericalError("non-finite value produced by operation '" + std::string(op) + "'");
    }
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->op = op;
    if (t_grad_enabled) {
        bool any = false;
        for (const auto& in : inputs) any = any || in.requires_grad();
        if (any) {
            node->requires_grad = true;
            node->inputs.reserve(inputs.size());
            for (const auto& in : inputs) node->inputs.push_back(in.node());
            node->backward = std::move(fn);
        }
    }
    return Var(std::move(node));
}

Var make_result(std::string_view op, Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
    if (!value.all_finite()) {
        throw NumericalError("non-finite value produced by operation '" + std::string(op) + "'");
    }
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->op = op;
    if (t_grad_enabled) {
        bool any = false;
        for (const auto& in : inputs) any = any || in.requires_grad();
        if (any) {
            node->requires_grad = true;
            for (const auto& in : inputs) node->inputs.push_back(in.node());
            node->backward = std::move(fn);
        }
    }
    return Var(std::move(node));
}

void require_defined(const Var& v, const char* op) {
    if (!v.defined()) throw DimensionError(std::string(op) + ": undefined operand");
}

void require_matrix(const Var& v, const char* op) {
    require_defined(v, op);
    if (v.value().rank() != 2) {
        throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(v.shape()));
    }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    require_defined(a, op);
    require_defined(b, op);
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    }
}

template <typename F>
Tensor map_values(const Tensor& a, F f) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

template <typename F>
Tensor zip_values(const Tensor& a, const Tensor& b, F f) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
}

Tensor matmul_values(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out({m, n});
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = po + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            if (av == 0.0) continue;
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor transpose_values(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(j, i) = a(i, j);
    return out;
}

// Topological order of the nodes reachable from `root`, inputs before users.
std::vector<Node*> topo_order(Node* root) {
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

// Reverse sweep; returns the accumulated gradient of every node selected by
// `is_target` that has a path from `output`.
template <typename IsTarget>
std::unordered_map<Node*, Var> backprop(const Var& output, IsTarget is_target, bool create_graph) {
    require_defined(output, "grad");
    if (output.value().size() != 1) {
        throw DimensionError("gradient requested of non-scalar output " + shape_string(output.shape()));
    }
    std::unordered_map<Node*, Var> grads;
    if (!output.requires_grad()) return grads;

    const auto order = topo_order(output.node().get());
    std::unordered_map<Node*, bool> needed;
    needed.reserve(order.size());
    std::unordered_set<Node*> targets;
    for (Node* n : order) {
        bool need = false;
        if (n->requires_grad) {
            if (is_target(n)) {
                need = true;
                targets.insert(n);
            }
            for (const auto& in : n->inputs) need = need || needed[in.get()];
        }
        needed[n] = need;
    }

    GradModeGuard guard(create_graph);
    grads[output.node().get()] = Var::constant(Tensor::scalar(1.0));
    std::vector<Var> in_vars;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (!needed[node] || !node->backward) continue;
        auto git = grads.find(node);
        if (git == grads.end()) continue;
        in_vars.clear();
        for (const auto& in : node->inputs) in_vars.emplace_back(in);
        std::vector<Var> gs = node->backward(git->second, in_vars);
        if (!targets.count(node)) grads.erase(git);
        for (std::size_t i = 0; i < gs.size() && i < node->inputs.size(); ++i) {
            Node* parent = node->inputs[i].get();
            if (!gs[i].defined() || !parent->requires_grad || !needed[parent]) continue;
            auto pit = grads.find(parent);
            if (pit == grads.end()) {
                grads.emplace(parent, std::move(gs[i]));
            } else {
                pit->second = add(pit->second, gs[i]);
            }
        }
    }
    for (auto it = grads.begin(); it != grads.end();) {
        if (!targets.count(it->first)) {
            it = grads.erase(it);
        } else {
            ++it;
        }
    }
    return grads;
}

}  // namespace

bool grad_enabled() noexcept { return t_grad_enabled; }

GradModeGuard::GradModeGuard(bool enabled) : previous_(t_grad_enabled) { t_grad_enabled = enabled; }
GradModeGuard::~GradModeGuard() { t_grad_enabled = previous_; }

Var Var::constant(Tensor value) {
    require_finite(value, "constant");
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->op = "constant";
    return Var(std::move(node));
}

Var Var::parameter(Tensor value) {
    require_finite(value, "parameter");
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    node->op = "parameter";
    return Var(std::move(node));
}

void Var::backward() const {
    auto grads = backprop(*this, [](Node* n) { return !n->backward; }, false);
    for (auto& [node, g] : grads) {
        if (!node->grad) {
            node->grad = g.value();
        } else {
            Tensor& acc = *node->grad;
            const Tensor& gv = g.value();
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += gv[i];
        }
    }
}

std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs, bool create_graph) {
    std::unordered_set<Node*> wanted;
    for (const auto& in : inputs) {
        require_defined(in, "grad");
        wanted.insert(in.node().get());
    }
    auto grads = backprop(output, [&](Node* n) { return wanted.count(n) > 0; }, create_graph);
    std::vector<Var> out;
    out.reserve(inputs.size());
    for (const auto& in : inputs) {
        auto it = grads.find(in.node().get());
        out.push_back(it != grads.end() ? it->second : Var::constant(Tensor(in.shape())));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    return make_result("add", zip_values(a.value(), b.value(), std::plus<>{}), {a, b},
                       [](const Var& g, const std::vector<Var>&) { return std::vector<Var>{g, g}; });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    return make_result("sub", zip_values(a.value(), b.value(), std::minus<>{}), {a, b},
                       [](const Var& g, const std::vector<Var>&) { return std::vector<Var>{g, neg(g)}; });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    return make_result("mul", zip_values(a.value(), b.value(), std::multiplies<>{}), {a, b},
                       [](const Var& g, const std::vector<Var>& in) {
                           return std::vector<Var>{mul(g, in[1]), mul(g, in[0])};
                       });
}

Var div(const Var& a, const Var& b) {
    require_same_shape(a, b, "div");
    return make_result("div", zip_values(a.value(), b.value(), std::divides<>{}), {a, b},
                       [](const Var& g, const std::vector<Var>& in) {
                           return std::vector<Var>{div(g, in[1]), neg(div(mul(g, in[0]), mul(in[1], in[1])))};
                       });
}

Var neg(const Var& a) {
    require_defined(a, "neg");
    return make_result("neg", map_values(a.value(), [](double x) { return -x; }), {a},
                       [](const Var& g, const std::vector<Var>&) { return std::vector<Var>{neg(g)}; });
}

Var scale(const Var& a, double s) {
    require_defined(a, "scale");
    return make_result("scale", map_values(a.value(), [s](double x) { return s * x; }), {a},
                       [s](const Var& g, const std::vector<Var>&) { return std::vector<Var>{scale(g, s)}; });
}

Var exp(const Var& a) {
    require_defined(a, "exp");
    return make_result("exp", map_values(a.value(), [](double x) { return std::exp(x); }), {a},
                       [](const Var& g, const std::vector<Var>& in) { return std::vector<Var>{mul(g, exp(in[0]))}; });
}

Var log(const Var& a) {
    require_defined(a, "log");
    return make_result("log", map_values(a.value(), [](double x) { return std::log(x); }), {a},
                       [](const Var& g, const std::vector<Var>& in) { return std::vector<Var>{div(g, in[0])}; });
}

// ---------------------------------------------------------------------------
// Matrix products

Var matmul(const Var& a, const Var& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                             shape_string(b.shape()));
    }
    return make_result("matmul", matmul_values(a.value(), b.value()), {a, b},
                       [](const Var& g, const std::vector<Var>& in) {
                           std::vector<Var> out(2);
                           if (in[0].requires_grad()) out[0] = matmul(g, transpose(in[1]));
                           if (in[1].requires_grad()) out[1] = matmul(transpose(in[0]), g);
                           return out;
                       });
}

Var transpose(const Var& a) {
    require_matrix(a, "transpose");
    return make_result("transpose", transpose_values(a.value()), {a},
                       [](const Var& g, const std::vector<Var>&) { return std::vector<Var>{transpose(g)}; });
}

// ---------------------------------------------------------------------------
// Broadcasting and reductions

Var broadcast_rows(const Var& row, std::size_t rows) {
    require_matrix(row, "broadcast_rows");
    if (row.rows() != 1) throw DimensionError("broadcast_rows: expected a 1xn row, got " + shape_string(row.shape()));
    const std::size_t n = row.cols();
    Tensor out({rows, n});
    for (std::size_t i = 0; i < rows; ++i)
        std::copy_n(row.value().data().data(), n, out.data().data() + i * n);
    return make_result("broadcast_rows", std::move(out), {row},
                       [](const Var& g, const std::vector<Var>&) { return std::vector<Var>{sum_rows(g)}; });
}

Var broadcast_cols(const Var& col, std::size_t cols) {
    require_matrix(col, "broadcast_cols");
    if (col.cols() != 1) throw DimensionError("broadcast_cols: expected an mx1 column, got " + shape_string(col.shape()));
    const std::size_t m = col.rows();
    Tensor out({m, cols});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < cols; ++j) out(i, j) = col.value()[i];
    return make_result("broadcast_cols", std::move(out), {col},
                       [](const Var& g, const std::vector<Var>&) { return std::vector<Var>{sum_cols(g)}; });
}

Var sum_rows(const Var& a) {
    require_matrix(a, "sum_rows");
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out({1, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += a.value()(i, j);
    return make_result("sum_rows", std::move(out), {a}, [m](const Var& g, const std::vector<Var>&) {
        return std::vector<Var>{broadcast_rows(g, m)};
    });
}

Var sum_cols(const Var& a) {
    require_matrix(a, "sum_cols");
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out({m, 1});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i] += a.value()(i, j);
    return make_result("sum_cols", std::move(out), {a}, [n](const Var& g, const std::vector<Var>&) {
        return std::vector<Var>{broadcast_cols(g, n)};
    });
}

Var sum_all(const Var& a) {
    require_matrix(a, "sum_all");
    double s = 0.0;
    for (double v : a.value().data()) s += v;
    const std::size_t m = a.rows(), n = a.cols();
    return make_result("sum_all", Tensor::scalar(s), {a}, [m, n](const Var& g, const std::vector<Var>&) {
        return std::vector<Var>{broadcast_rows(broadcast_cols(g, n), m)};
    });
}

Var mean_rows(const Var& a) {
    require_matrix(a, "mean_rows");
    return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows()));
}

Var add_row_bias(const Var& a, const Var& bias) {
    require_matrix(a, "add_row_bias");
    require_matrix(bias, "add_row_bias");
    if (bias.rows() != 1 || bias.cols() != a.cols()) {
        throw DimensionError("add_row_bias: bias " + shape_string(bias.shape()) + " does not fit " +
                             shape_string(a.shape()));
    }
    return add(a, broadcast_rows(bias, a.rows()));
}

// ---------------------------------------------------------------------------
// Activations

Var leaky_relu(const Var& x, double slope) {
    require_defined(x, "leaky_relu");
    const Tensor& xv = x.value();
    Tensor mask(xv.shape());
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const bool pos = xv[i] >= 0.0;
        mask[i] = pos ? 1.0 : slope;
        out[i] = pos ? xv[i] : slope * xv[i];
    }
    return make_result("leaky_relu", std::move(out), {x}, [mask = std::move(mask)](const Var& g, const std::vector<Var>&) {
        return std::vector<Var>{mul(g, Var::constant(mask))};
    });
}

Var relu(const Var& x) { return leaky_relu(x, 0.0); }

Var identity(const Var& x) {
    require_defined(x, "identity");
    return x;
}

Var activate(const Var& x, Activation act, double slope) {
    switch (act) {
        case Activation::identity: return identity(x);
        case Activation::relu: return relu(x);
        case Activation::leaky_relu: return leaky_relu(x, slope);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Row selection and assembly

Var gather_rows(const Var& x, std::span<const std::size_t> rows) {
    require_matrix(x, "gather_rows");
    const std::size_t m = x.rows(), n = x.cols();
    if (rows.empty()) throw IndexError("gather_rows: empty row list");
    Tensor out({rows.size(), n});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= m) {
            throw IndexError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " +
                             std::to_string(m) + " rows");
        }
        std::copy_n(x.value().data().data() + rows[i] * n, n, out.data().data() + i * n);
    }
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    return make_result("gather_rows", std::move(out), {x}, [idx = std::move(idx), m](const Var& g, const std::vector<Var>&) {
        return std::vector<Var>{scatter_rows(g, idx, m)};
    });
}

Var scatter_rows(const Var& x, std::span<const std::size_t> rows, std::size_t total_rows) {
    require_matrix(x, "scatter_rows");
    const std::size_t n = x.cols();
    if (rows.size() != x.rows()) throw DimensionError("scatter_rows: index count does not match row count");
    Tensor out({total_rows, n});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= total_rows) throw IndexError("scatter_rows: target row out of range");
        for (std::size_t j = 0; j < n; ++j) out(rows[i], j) += x.value()(i, j);
    }
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    return make_result("scatter_rows", std::move(out), {x}, [idx = std::move(idx)](const Var& g, const std::vector<Var>&) {
        return std::vector<Var>{gather_rows(g, idx)};
    });
}

Var concat_cols(const Var& a, const Var& b) {
    require_matrix(a, "concat_cols");
    require_matrix(b, "concat_cols");
    if (a.rows() != b.rows()) {
        throw DimensionError("concat_cols: row counts differ, " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    }
    const std::size_t m = a.rows(), na = a.cols(), nb = b.cols();
    Tensor out({m, na + nb});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < na; ++j) out(i, j) = a.value()(i, j);
        for (std::size_t j = 0; j < nb; ++j) out(i, na + j) = b.value()(i, j);
    }
    return make_result("concat_cols", std::move(out), {a, b}, [na, nb](const Var& g, const std::vector<Var>&) {
        return std::vector<Var>{slice_cols(g, 0, na), slice_cols(g, na, na + nb)};
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: nothing to concatenate");
    std::size_t total = 0;
    const std::size_t n = (require_matrix(parts[0], "concat_rows"), parts[0].cols());
    for (const auto& p : parts) {
        require_matrix(p, "concat_rows");
        if (p.cols() != n) throw DimensionError("concat_rows: column counts differ");
        total += p.rows();
    }
    Tensor out({total, n});
    std::vector<std::size_t> offsets;
    std::size_t at = 0;
    for (const auto& p : parts) {
        offsets.push_back(at);
        std::copy(p.value().data().begin(), p.value().data().end(), out.data().begin() + at * n);
        at += p.rows();
    }
    offsets.push_back(at);
    return make_result("concat_rows", std::move(out), parts, [offsets](const Var& g, const std::vector<Var>&) {
        std::vector<Var> gs;
        for (std::size_t i = 0; i + 1 < offsets.size(); ++i) gs.push_back(slice_rows(g, offsets[i], offsets[i + 1]));
        return gs;
    });
}

Var stack_rows(const std::vector<Var>& rows) {
    for (const auto& r : rows) {
        require_matrix(r, "stack_rows");
        if (r.rows() != 1) throw DimensionError("stack_rows: expected 1xn rows, got " + shape_string(r.shape()));
    }
    return concat_rows(rows);
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
    require_matrix(a, "slice_cols");
    const std::size_t m = a.rows(), n = a.cols();
    if (begin >= end || end > n) throw DimensionError("slice_cols: bad range");
    Tensor out({m, end - begin});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = a.value()(i, j);
    return make_result("slice_cols", std::move(out), {a}, [begin, n](const Var& g, const std::vector<Var>&) {
        return std::vector<Var>{pad_cols(g, begin, n)};
    });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t end) {
    require_matrix(a, "slice_rows");
    const std::size_t m = a.rows(), n = a.cols();
    if (begin >= end || end > m) throw DimensionError("slice_rows: bad range");
    Tensor out({end - begin, n});
    std::copy(a.value().data().begin() + begin * n, a.value().data().begin() + end * n, out.data().begin());
    return make_result("slice_rows", std::move(out), {a}, [begin, m](const Var& g, const std::vector<Var>&) {
        return std::vector<Var>{pad_rows(g, begin, m)};
    });
}

Var pad_cols(const Var& a, std::size_t offset, std::size_t total_cols) {
    require_matrix(a, "pad_cols");
    const std::size_t m = a.rows(), n = a.cols();
    if (offset + n > total_cols) throw DimensionError("pad_cols: does not fit");
    Tensor out({m, total_cols});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, offset + j) = a.value()(i, j);
    return make_result("pad_cols", std::move(out), {a}, [offset, n](const Var& g, const std::vector<Var>&) {
        return std::vector<Var>{slice_cols(g, offset, offset + n)};
    });
}

Var pad_rows(const Var& a, std::size_t offset, std::size_t total_rows) {
    require_matrix(a, "pad_rows");
    const std::size_t m = a.rows(), n = a.cols();
    if (offset + m > total_rows) throw DimensionError("pad_rows: does not fit");
    Tensor out({total_rows, n});
    std::copy(a.value().data().begin(), a.value().data().end(), out.data().begin() + offset * n);
    return make_result("pad_rows", std::move(out), {a}, [offset, m](const Var& g, const std::vector<Var>&) {
        return std::vector<Var>{slice_rows(g, offset, offset + m)};
    });
}

Var stop_gradient(const Var& x) {
    require_defined(x, "stop_gradient");
    return Var::constant(x.value());
}

// ---------------------------------------------------------------------------
// Normalization and losses

Var row_norms_clamped(const Var& x, double eps) {
    require_matrix(x, "row_norms_clamped");
    if (!(eps > 0.0)) throw ConfigError("row normalization eps must be positive");
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out({m, 1});
    Tensor mask({m, 1});
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += x.value()(i, j) * x.value()(i, j);
        const double norm = std::sqrt(s);
        mask[i] = norm > eps ? 1.0 : 0.0;
        out[i] = std::max(norm, eps);
    }
    // d max(|x|, eps) / dx = x / |x| on unclamped rows, 0 on clamped ones.
    return make_result("row_norms_clamped", std::move(out), {x},
                       [mask = std::move(mask), eps, n](const Var& g, const std::vector<Var>& in) {
                           Var coeff = div(mul(g, Var::constant(mask)), row_norms_clamped(in[0], eps));
                           return std::vector<Var>{mul(in[0], broadcast_cols(coeff, n))};
                       });
}

Var l2_normalize_rows(const Var& x, double eps) {
    require_matrix(x, "l2_normalize_rows");
    return div(x, broadcast_cols(row_norms_clamped(x, eps), x.cols()));
}

Var log_softmax_rows(const Var& logits) {
    require_matrix(logits, "log_softmax_rows");
    const std::size_t m = logits.rows(), n = logits.cols();
    Tensor row_max({m, 1}, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) row_max[i] = std::max(row_max[i], logits.value()(i, j));
    // The shift is a constant: log-sum-exp is invariant to it, so its gradient is unaffected.
    Var shifted = sub(logits, broadcast_cols(Var::constant(std::move(row_max)), n));
    Var lse = log(sum_cols(exp(shifted)));
    return sub(shifted, broadcast_cols(lse, n));
}

Var softmax_rows(const Var& logits) { return exp(log_softmax_rows(logits)); }

Var softmax_cross_entropy(const Var& logits, std::span<const int> labels) {
    require_matrix(logits, "softmax_cross_entropy");
    const std::size_t m = logits.rows(), c = logits.cols();
    if (labels.size() != m) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(m) + " rows");
    }
    Tensor onehot({m, c});
    for (std::size_t i = 0; i < m; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
            throw IndexError("softmax_cross_entropy: label " + std::to_string(labels[i]) + " outside [0, " +
                             std::to_string(c) + ")");
        }
        onehot(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    Var picked = sum_all(mul(log_softmax_rows(logits), Var::constant(std::move(onehot))));
    return scale(picked, -1.0 / static_cast<double>(m));
}

Var dropout(const Var& x, double keep_prob, Rng& rng, bool training) {
    require_defined(x, "dropout");
    if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
        throw ConfigError("dropout keep probability must lie in (0, 1], got " + std::to_string(keep_prob));
    }
    if (!training || keep_prob == 1.0) return x;
    Tensor mask(x.shape());
    const double inv = 1.0 / keep_prob;
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.bernoulli(keep_prob) ? inv : 0.0;
    return mul(x, Var::constant(std::move(mask)));
}

Tensor softmax_values(const Tensor& logits) {
    const std::size_t m = logits.rows(), n = logits.cols();
    Tensor out(logits.shape());
    for (std::size_t i = 0; i < m; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, logits(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += (out(i, j) = std::exp(logits(i, j) - mx));
        for (std::size_t j = 0; j < n; ++j) out(i, j) /= s;
    }
    return out;
}

}  // namespace metaconcept
