#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "demo/error.hpp"

namespace demo {

using Shape = std::vector<int>;

inline std::int64_t numel_of(const Shape& shape) {
    std::int64_t n = 1;
    for (int e : shape) {
        if (e <= 0) throw ShapeError("tensor extents must be positive");
        n *= e;
    }
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// Dense row-major tensor. Value-semantic: copies are independent, safe to
// move between threads. `grad` is empty until a backward pass fills it and
// always matches `data` in length when present.
template <typename T>
struct TensorT {
    Shape shape;
    std::vector<T> data;
    bool requires_grad = false;
    std::vector<T> grad;

    TensorT() = default;

    explicit TensorT(Shape s) : shape(std::move(s)) {
        data.assign(static_cast<std::size_t>(numel_of(shape)), T(0));
    }

    TensorT(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != static_cast<std::int64_t>(data.size()))
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }

    int dim(std::size_t i) const { return shape[i]; }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    }

    void zero_grad() {
        if (!grad.empty()) grad.assign(grad.size(), T(0));
    }

    static TensorT zeros(Shape s) { return TensorT(std::move(s)); }

    static TensorT full(Shape s, T v) {
        TensorT t(std::move(s));
        t.data.assign(t.data.size(), v);
        return t;
    }

    static TensorT ones(Shape s) { return full(std::move(s), T(1)); }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.requires_grad = requires_grad;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace demo
