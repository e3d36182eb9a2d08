#pragma once

#include "demo/graph.hpp"

namespace demo {

// Second-order pooling head: 1x1 reduction conv -> (optional signed sqrt) ->
// bilinear pooling -> dropout -> fully connected projection. The full-scale
// construction keeps a C^2-length feature per sample; reduce_channels bounds
// C before the outer products are taken.
struct BilinearHeadConfig {
    int reduce_channels = 16;
    double dropout_rate = 0.3;
    int post_fc_dim = 32;
    bool signed_sqrt = false;

    void validate() const {
        if (reduce_channels < 1) throw ConfigError("bilinear head: reduce_channels must be positive");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
            throw ConfigError("bilinear head: dropout_rate must be in [0,1)");
        if (post_fc_dim < 1) throw ConfigError("bilinear head: post_fc_dim must be positive");
    }

    int bilinear_len() const { return reduce_channels * reduce_channels; }
};

// Spatially averaged self outer product. For input [N,C,H,W] the output row
// for sample n is flatten( (1/(H*W)) * sum_l f_l f_l^T ), a symmetric PSD
// C x C matrix; output shape [N, C*C].
template <typename T>
Var bilinear_pool(GraphT<T>& g, Var x) {
    const auto& xt = g.value(x);
    if (xt.shape.size() != 4)
        throw ShapeError("bilinear_pool: input must be [N,C,H,W], got " + shape_str(xt.shape));
    const int n = xt.shape[0], c = xt.shape[1], hw = xt.shape[2] * xt.shape[3];
    TensorT<T> out(Shape{n, c * c});
    kern::bilinear_pool_forward(xt.data.data(), n, c, hw, out.data.data());
    auto bw = [=](GraphT<T>& gr, Var self) {
        if (gr.needs_grad(x))
            kern::bilinear_pool_backward(gr.adjoint(self).data(), gr.value(x).data.data(), n, c,
                                         hw, gr.adjoint(x).data());
    };
    return g.push(std::move(out), {x}, std::move(bw), "bilinear_pool");
}

// Full head over a feature map. `reduce_w` must be a 1x1 conv weight
// [reduce_channels, C, 1, 1]; `fc_w` maps the C'^2 bilinear feature to
// post_fc_dim.
template <typename T>
Var bilinear_head(GraphT<T>& g, Var x, const BilinearHeadConfig& cfg,
                  Var reduce_w, Var reduce_b, Var fc_w, Var fc_b,
                  Rng& rng, bool training) {
    cfg.validate();
    const auto& xt = g.value(x);
    if (xt.shape.size() != 4)
        throw ShapeError("bilinear_head: input must be [N,C,H,W], got " + shape_str(xt.shape));
    const auto& rw = g.value(reduce_w);
    if (rw.shape != Shape{cfg.reduce_channels, xt.shape[1], 1, 1})
        throw ShapeError("bilinear_head: reduction weight must be " +
                         shape_str({cfg.reduce_channels, xt.shape[1], 1, 1}) + ", got " +
                         shape_str(rw.shape));
    const auto& fw = g.value(fc_w);
    if (fw.shape != Shape{cfg.post_fc_dim, cfg.bilinear_len()})
        throw ShapeError("bilinear_head: fc weight must be " +
                         shape_str({cfg.post_fc_dim, cfg.bilinear_len()}) + ", got " +
                         shape_str(fw.shape));

    Var h = conv2d(g, x, reduce_w, reduce_b, 1, 0);
    if (cfg.signed_sqrt) h = signed_sqrt(g, h);
    h = bilinear_pool(g, h);
    h = dropout(g, h, cfg.dropout_rate, rng, training);
    return linear(g, h, fc_w, fc_b);
}

}  // namespace demo
