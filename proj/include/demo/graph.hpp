#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "demo/error.hpp"
#include "demo/kernels.hpp"
#include "demo/rng.hpp"
#include "demo/tensor.hpp"

namespace demo {

using Var = std::size_t;

// Reverse-mode tape. Every op appends one node holding its output tensor;
// insertion order is the topological order and backward() replays the
// recorded closures in exact reverse insertion order, so gradient
// computation is deterministic.
//
// backward() propagates into per-call adjoint buffers and then adds the
// result into the persistent `grad` of every requires_grad tensor, so
// repeated calls accumulate additively. A graph is confined to one thread.
template <typename T>
class GraphT {
public:
    using BackwardFn = std::function<void(GraphT&, Var)>;

    Var leaf(TensorT<T> t) { return push(std::move(t), {}, nullptr, "leaf"); }

    Var constant(TensorT<T> t) {
        t.requires_grad = false;
        return push(std::move(t), {}, nullptr, "const");
    }

    const TensorT<T>& value(Var v) const { return nodes_[v].tensor; }

    const std::vector<T>& grad(Var v) {
        nodes_[v].tensor.ensure_grad();
        return nodes_[v].tensor.grad;
    }

    void zero_grad() {
        for (auto& n : nodes_) n.tensor.zero_grad();
    }

    void backward(Var loss) {
        if (value(loss).numel() != 1)
            throw ContractError("backward: loss node must be scalar, got shape " +
                                shape_str(value(loss).shape));
        for (auto& n : nodes_) {
            if (n.needs_grad)
                n.adjoint.assign(n.tensor.data.size(), T(0));
            else
                n.adjoint.clear();
        }
        if (nodes_[loss].needs_grad) nodes_[loss].adjoint[0] = T(1);
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            auto& n = nodes_[i];
            if (n.bw && n.needs_grad) n.bw(*this, i);
        }
        for (auto& n : nodes_) {
            if (!n.tensor.requires_grad) continue;
            n.tensor.ensure_grad();
            for (std::size_t i = 0; i < n.adjoint.size(); ++i) n.tensor.grad[i] += n.adjoint[i];
        }
    }

    bool needs_grad(Var v) const { return nodes_[v].needs_grad; }
    std::vector<T>& adjoint(Var v) { return nodes_[v].adjoint; }
    std::size_t node_count() const { return nodes_.size(); }
    const char* op_name(Var v) const { return nodes_[v].op; }

    Var push(TensorT<T> t, std::vector<Var> inputs, BackwardFn bw, const char* op) {
        Node n;
        n.needs_grad = t.requires_grad;
        for (Var in : inputs) n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
        n.tensor = std::move(t);
        n.inputs = std::move(inputs);
        if (n.needs_grad) n.bw = std::move(bw);
        n.op = op;
        nodes_.push_back(std::move(n));
        return nodes_.size() - 1;
    }

private:
    struct Node {
        TensorT<T> tensor;
        std::vector<T> adjoint;
        std::vector<Var> inputs;
        BackwardFn bw;
        const char* op = "";
        bool needs_grad = false;
    };

    // deque keeps value()/grad() references stable while later ops append.
    std::deque<Node> nodes_;
};

using Graph = GraphT<float>;
using GraphD = GraphT<double>;

// ---- ops -------------------------------------------------------------

template <typename T>
Var conv2d(GraphT<T>& g, Var x, Var w, Var b, int stride, int pad) {
    const auto& xt = g.value(x);
    const auto& wt = g.value(w);
    const auto& bt = g.value(b);
    if (xt.shape.size() != 4) throw ShapeError("conv2d: input must be [N,C,H,W], got " + shape_str(xt.shape));
    if (wt.shape.size() != 4) throw ShapeError("conv2d: weight must be [K,C,kh,kw], got " + shape_str(wt.shape));
    const int n = xt.shape[0], c = xt.shape[1], h = xt.shape[2], wdim = xt.shape[3];
    const int k = wt.shape[0], kh = wt.shape[2], kw = wt.shape[3];
    if (wt.shape[1] != c)
        throw ShapeError("conv2d: weight expects " + std::to_string(wt.shape[1]) +
                         " input channels, input has " + std::to_string(c));
    if (bt.shape != Shape{k}) throw ShapeError("conv2d: bias must be [K]=" + std::to_string(k));
    if (stride < 1) throw ShapeError("conv2d: stride must be positive");
    if (pad < 0) throw ShapeError("conv2d: pad must be non-negative");
    if (kh > h + 2 * pad || kw > wdim + 2 * pad)
        throw ShapeError("conv2d: kernel exceeds padded input extent");
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (wdim + 2 * pad - kw) / stride + 1;

    TensorT<T> out(Shape{n, k, ho, wo});
    kern::conv2d_forward(xt.data.data(), n, c, h, wdim, wt.data.data(), k, kh, kw,
                         bt.data.data(), stride, pad, out.data.data(), ho, wo);
    auto bw = [=](GraphT<T>& gr, Var self) {
        const std::vector<T>& gy = gr.adjoint(self);
        if (gr.needs_grad(x))
            kern::conv2d_backward_input(gy.data(), n, k, ho, wo, gr.value(w).data.data(), c, kh,
                                        kw, stride, pad, gr.adjoint(x).data(), h, wdim);
        if (gr.needs_grad(w))
            kern::conv2d_backward_weight(gy.data(), n, k, ho, wo, gr.value(x).data.data(), c, h,
                                         wdim, stride, pad, gr.adjoint(w).data(), kh, kw);
        if (gr.needs_grad(b))
            kern::conv2d_backward_bias(gy.data(), n, k, ho * wo, gr.adjoint(b).data());
    };
    return g.push(std::move(out), {x, w, b}, std::move(bw), "conv2d");
}

template <typename T>
Var linear(GraphT<T>& g, Var x, Var w, Var b) {
    const auto& xt = g.value(x);
    const auto& wt = g.value(w);
    const auto& bt = g.value(b);
    if (xt.shape.size() != 2) throw ShapeError("linear: input must be [N,D], got " + shape_str(xt.shape));
    if (wt.shape.size() != 2) throw ShapeError("linear: weight must be [M,D], got " + shape_str(wt.shape));
    const int n = xt.shape[0], d = xt.shape[1], m = wt.shape[0];
    if (wt.shape[1] != d)
        throw ShapeError("linear: weight inner dim " + std::to_string(wt.shape[1]) +
                         " does not match input dim " + std::to_string(d));
    if (bt.shape != Shape{m}) throw ShapeError("linear: bias must be [M]=" + std::to_string(m));

    TensorT<T> out(Shape{n, m});
    kern::linear_forward(xt.data.data(), n, d, wt.data.data(), m, bt.data.data(), out.data.data());
    auto bw = [=](GraphT<T>& gr, Var self) {
        const std::vector<T>& gy = gr.adjoint(self);
        if (gr.needs_grad(x))
            kern::linear_backward_input(gy.data(), gr.value(w).data.data(), n, d, m, gr.adjoint(x).data());
        if (gr.needs_grad(w))
            kern::linear_backward_weight(gy.data(), gr.value(x).data.data(), n, d, m, gr.adjoint(w).data());
        if (gr.needs_grad(b)) kern::linear_backward_bias(gy.data(), n, m, gr.adjoint(b).data());
    };
    return g.push(std::move(out), {x, w, b}, std::move(bw), "linear");
}

// Gradient at exactly 0 is defined as 0.
template <typename T>
Var relu(GraphT<T>& g, Var x) {
    const auto& xt = g.value(x);
    TensorT<T> out(xt.shape);
    kern::relu_forward(xt.data.data(), xt.numel(), out.data.data());
    auto bw = [x](GraphT<T>& gr, Var self) {
        const std::vector<T>& gy = gr.adjoint(self);
        if (gr.needs_grad(x))
            kern::relu_backward(gy.data(), gr.value(x).data.data(),
                                static_cast<std::int64_t>(gy.size()), gr.adjoint(x).data());
    };
    return g.push(std::move(out), {x}, std::move(bw), "relu");
}

template <typename T>
Var global_avg_pool(GraphT<T>& g, Var x) {
    const auto& xt = g.value(x);
    if (xt.shape.size() != 4)
        throw ShapeError("global_avg_pool: input must be [N,C,H,W], got " + shape_str(xt.shape));
    const int n = xt.shape[0], c = xt.shape[1], hw = xt.shape[2] * xt.shape[3];
    TensorT<T> out(Shape{n, c});
    kern::gap_forward(xt.data.data(), n, c, hw, out.data.data());
    auto bw = [=](GraphT<T>& gr, Var self) {
        if (gr.needs_grad(x))
            kern::gap_backward(gr.adjoint(self).data(), n, c, hw, gr.adjoint(x).data());
    };
    return g.push(std::move(out), {x}, std::move(bw), "global_avg_pool");
}

namespace detail {
template <typename T>
void check_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
    if (a.shape != b.shape)
        throw ShapeError(std::string(op) + ": shapes differ, " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
}
}  // namespace detail

template <typename T>
Var add(GraphT<T>& g, Var a, Var b) {
    detail::check_same_shape(g.value(a), g.value(b), "add");
    TensorT<T> out(g.value(a).shape);
    const auto& av = g.value(a).data;
    const auto& bv = g.value(b).data;
    for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = av[i] + bv[i];
    auto bw = [a, b](GraphT<T>& gr, Var self) {
        const std::vector<T>& gy = gr.adjoint(self);
        const auto len = static_cast<std::int64_t>(gy.size());
        if (gr.needs_grad(a)) kern::axpy(T(1), gy.data(), len, gr.adjoint(a).data());
        if (gr.needs_grad(b)) kern::axpy(T(1), gy.data(), len, gr.adjoint(b).data());
    };
    return g.push(std::move(out), {a, b}, std::move(bw), "add");
}

template <typename T>
Var sub(GraphT<T>& g, Var a, Var b) {
    detail::check_same_shape(g.value(a), g.value(b), "sub");
    TensorT<T> out(g.value(a).shape);
    const auto& av = g.value(a).data;
    const auto& bv = g.value(b).data;
    for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = av[i] - bv[i];
    auto bw = [a, b](GraphT<T>& gr, Var self) {
        const std::vector<T>& gy = gr.adjoint(self);
        const auto len = static_cast<std::int64_t>(gy.size());
        if (gr.needs_grad(a)) kern::axpy(T(1), gy.data(), len, gr.adjoint(a).data());
        if (gr.needs_grad(b)) kern::axpy(T(-1), gy.data(), len, gr.adjoint(b).data());
    };
    return g.push(std::move(out), {a, b}, std::move(bw), "sub");
}

template <typename T>
Var mul(GraphT<T>& g, Var a, Var b) {
    detail::check_same_shape(g.value(a), g.value(b), "mul");
    TensorT<T> out(g.value(a).shape);
    kern::mul_forward(g.value(a).data.data(), g.value(b).data.data(), out.numel(), out.data.data());
    auto bw = [a, b](GraphT<T>& gr, Var self) {
        const std::vector<T>& gy = gr.adjoint(self);
        const auto len = static_cast<std::int64_t>(gy.size());
        if (gr.needs_grad(a)) kern::mul_accum(gy.data(), gr.value(b).data.data(), len, gr.adjoint(a).data());
        if (gr.needs_grad(b)) kern::mul_accum(gy.data(), gr.value(a).data.data(), len, gr.adjoint(b).data());
    };
    return g.push(std::move(out), {a, b}, std::move(bw), "mul");
}

// Scalar sum over all elements; fixed sequential accumulation order.
template <typename T>
Var sum(GraphT<T>& g, Var x) {
    const auto& xt = g.value(x);
    T acc = T(0);
    for (T v : xt.data) acc += v;
    TensorT<T> out(Shape{1});
    out.data[0] = acc;
    auto bw = [x](GraphT<T>& gr, Var self) {
        if (!gr.needs_grad(x)) return;
        const T s = gr.adjoint(self)[0];
        auto& gx = gr.adjoint(x);
        for (auto& v : gx) v += s;
    };
    return g.push(std::move(out), {x}, std::move(bw), "sum");
}

// sign(x)*sqrt(|x|); gradient at exactly 0 defined as 0.
template <typename T>
Var signed_sqrt(GraphT<T>& g, Var x) {
    const auto& xt = g.value(x);
    TensorT<T> out(xt.shape);
    for (std::size_t i = 0; i < xt.data.size(); ++i) {
        const T v = xt.data[i];
        out.data[i] = v >= T(0) ? std::sqrt(v) : -std::sqrt(-v);
    }
    auto bw = [x](GraphT<T>& gr, Var self) {
        if (!gr.needs_grad(x)) return;
        const std::vector<T>& gy = gr.adjoint(self);
        const auto& xv = gr.value(x).data;
        auto& gx = gr.adjoint(x);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            const T v = xv[i];
            if (v != T(0)) gx[i] += gy[i] * (T(0.5) / std::sqrt(v >= T(0) ? v : -v));
        }
    };
    return g.push(std::move(out), {x}, std::move(bw), "signed_sqrt");
}

// Inverted dropout. In training mode each element is zeroed with probability
// `rate` and survivors are scaled by 1/(1-rate); the mask is drawn
// sequentially from `rng`. Identity in inference mode or at rate 0.
template <typename T>
Var dropout(GraphT<T>& g, Var x, double rate, Rng& rng, bool training) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0,1)");
    const auto& xt = g.value(x);
    if (!training || rate == 0.0) {
        TensorT<T> out(xt.shape, xt.data);
        auto bw = [x](GraphT<T>& gr, Var self) {
            if (gr.needs_grad(x))
                kern::axpy(T(1), gr.adjoint(self).data(),
                           static_cast<std::int64_t>(gr.adjoint(self).size()), gr.adjoint(x).data());
        };
        return g.push(std::move(out), {x}, std::move(bw), "dropout");
    }
    auto mask = std::make_shared<std::vector<T>>(xt.data.size());
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    for (auto& m : *mask) m = rng.uniform() < rate ? T(0) : keep_scale;
    TensorT<T> out(xt.shape);
    kern::mul_forward(xt.data.data(), mask->data(), out.numel(), out.data.data());
    auto bw = [x, mask](GraphT<T>& gr, Var self) {
        if (gr.needs_grad(x))
            kern::mul_accum(gr.adjoint(self).data(), mask->data(),
                            static_cast<std::int64_t>(mask->size()), gr.adjoint(x).data());
    };
    return g.push(std::move(out), {x}, std::move(bw), "dropout");
}

}  // namespace demo
