#pragma once

#include <cstdint>

// Compute kernels behind the tensor ops. Two implementations with identical
// signatures and identical per-output accumulation order:
//
//   demo::kern      - OpenMP-parallel across independent output elements
//   demo::kern_ref  - plain serial loops, kept as the reference for testing
//
// Because parallelism only splits work across outputs and every output's
// inner reduction runs in the same fixed order, the two produce bit-identical
// results for any thread count. test_kernels asserts exact equality and
// tools/bench_kernels compares their throughput.
//
// Forward kernels overwrite their output; backward kernels accumulate (+=)
// so a backward pass can fan gradients into already-seeded buffers.
// Instantiated for float and double in kernels.cpp.

namespace demo::kern {

template <typename T>
void conv2d_forward(const T* x, int n, int c, int h, int w,
                    const T* wt, int k, int kh, int kw,
                    const T* bias, int stride, int pad,
                    T* y, int ho, int wo);

template <typename T>
void conv2d_backward_input(const T* gy, int n, int k, int ho, int wo,
                           const T* wt, int c, int kh, int kw,
                           int stride, int pad,
                           T* gx, int h, int w);

template <typename T>
void conv2d_backward_weight(const T* gy, int n, int k, int ho, int wo,
                            const T* x, int c, int h, int w,
                            int stride, int pad,
                            T* gw, int kh, int kw);

template <typename T>
void conv2d_backward_bias(const T* gy, int n, int k, int howo, T* gb);

template <typename T>
void linear_forward(const T* x, int n, int d, const T* wt, int m, const T* bias, T* y);

template <typename T>
void linear_backward_input(const T* gy, const T* wt, int n, int d, int m, T* gx);

template <typename T>
void linear_backward_weight(const T* gy, const T* x, int n, int d, int m, T* gw);

template <typename T>
void linear_backward_bias(const T* gy, int n, int m, T* gb);

template <typename T>
void relu_forward(const T* x, std::int64_t len, T* y);

template <typename T>
void relu_backward(const T* gy, const T* x, std::int64_t len, T* gx);

template <typename T>
void gap_forward(const T* x, int n, int c, int hw, T* y);

template <typename T>
void gap_backward(const T* gy, int n, int c, int hw, T* gx);

template <typename T>
void bilinear_pool_forward(const T* x, int n, int c, int hw, T* y);

template <typename T>
void bilinear_pool_backward(const T* gy, const T* x, int n, int c, int hw, T* gx);

// y[i] = a[i] * b[i]
template <typename T>
void mul_forward(const T* a, const T* b, std::int64_t len, T* y);

// y[i] += a[i] * b[i]
template <typename T>
void mul_accum(const T* a, const T* b, std::int64_t len, T* y);

// y[i] += alpha * x[i]
template <typename T>
void axpy(T alpha, const T* x, std::int64_t len, T* y);

}  // namespace demo::kern

namespace demo::kern_ref {

template <typename T>
void conv2d_forward(const T* x, int n, int c, int h, int w,
                    const T* wt, int k, int kh, int kw,
                    const T* bias, int stride, int pad,
                    T* y, int ho, int wo);

template <typename T>
void conv2d_backward_input(const T* gy, int n, int k, int ho, int wo,
                           const T* wt, int c, int kh, int kw,
                           int stride, int pad,
                           T* gx, int h, int w);

template <typename T>
void conv2d_backward_weight(const T* gy, int n, int k, int ho, int wo,
                            const T* x, int c, int h, int w,
                            int stride, int pad,
                            T* gw, int kh, int kw);

template <typename T>
void conv2d_backward_bias(const T* gy, int n, int k, int howo, T* gb);

template <typename T>
void linear_forward(const T* x, int n, int d, const T* wt, int m, const T* bias, T* y);

template <typename T>
void linear_backward_input(const T* gy, const T* wt, int n, int d, int m, T* gx);

template <typename T>
void linear_backward_weight(const T* gy, const T* x, int n, int d, int m, T* gw);

template <typename T>
void linear_backward_bias(const T* gy, int n, int m, T* gb);

template <typename T>
void relu_forward(const T* x, std::int64_t len, T* y);

template <typename T>
void relu_backward(const T* gy, const T* x, std::int64_t len, T* gx);

template <typename T>
void gap_forward(const T* x, int n, int c, int hw, T* y);

template <typename T>
void gap_backward(const T* gy, int n, int c, int hw, T* gx);

template <typename T>
void bilinear_pool_forward(const T* x, int n, int c, int hw, T* y);

template <typename T>
void bilinear_pool_backward(const T* gy, const T* x, int n, int c, int hw, T* gx);

template <typename T>
void mul_forward(const T* a, const T* b, std::int64_t len, T* y);

template <typename T>
void mul_accum(const T* a, const T* b, std::int64_t len, T* y);

template <typename T>
void axpy(T alpha, const T* x, std::int64_t len, T* y);

}  // namespace demo::kern_ref
