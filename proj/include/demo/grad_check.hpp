#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "demo/graph.hpp"

namespace demo {

// Central finite-difference check of a scalar-valued function built from
// graph ops. Runs entirely in double precision. The closure is re-invoked on
// a fresh graph for every probe, so it must be deterministic in its inputs
// (disable dropout or fix its rng per call).
//
// Relative error per element: |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// Returns the maximum over all elements of all inputs.
using ScalarFn = std::function<Var(GraphD&, const std::vector<Var>&)>;

inline double grad_check(const ScalarFn& fn, std::vector<TensorD> inputs, double eps = 1e-3) {
    GraphD g;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (auto t : inputs) {
        t.requires_grad = true;
        vars.push_back(g.leaf(std::move(t)));
    }
    Var loss = fn(g, vars);
    if (g.value(loss).numel() != 1) throw ContractError("grad_check: fn must produce a scalar");
    g.backward(loss);

    auto eval = [&fn](const std::vector<TensorD>& probe) {
        GraphD g2;
        std::vector<Var> vs;
        vs.reserve(probe.size());
        for (auto t : probe) {
            t.requires_grad = false;
            vs.push_back(g2.leaf(std::move(t)));
        }
        return g2.value(fn(g2, vs)).data[0];
    };

    double max_rel = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto& analytic = g.grad(vars[i]);
        for (std::size_t j = 0; j < inputs[i].data.size(); ++j) {
            auto plus = inputs;
            auto minus = inputs;
            plus[i].data[j] += eps;
            minus[i].data[j] -= eps;
            const double numeric = (eval(plus) - eval(minus)) / (2.0 * eps);
            const double denom = std::max({std::abs(analytic[j]), std::abs(numeric), 1e-8});
            max_rel = std::max(max_rel, std::abs(analytic[j] - numeric) / denom);
        }
    }
    return max_rel;
}

}  // namespace demo
