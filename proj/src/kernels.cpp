#include "demo/kernels.hpp"

// Both namespaces keep the same loop nests and the same fixed inner
// accumulation order; kern only adds OpenMP pragmas across independent
// output elements. Keep them in sync: test_kernels checks bit equality.

namespace demo::kern {

template <typename T>
void conv2d_forward(const T* x, int n, int c, int h, int w,
                    const T* wt, int k, int kh, int kw,
                    const T* bias, int stride, int pad,
                    T* y, int ho, int wo) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int ik = 0; ik < k; ++ik) {
            const T* xn = x + static_cast<std::int64_t>(in) * c * h * w;
            const T* wk = wt + static_cast<std::int64_t>(ik) * c * kh * kw;
            T* yo = y + (static_cast<std::int64_t>(in) * k + ik) * ho * wo;
            for (int oh = 0; oh < ho; ++oh) {
                for (int ow = 0; ow < wo; ++ow) {
                    T acc = bias[ik];
                    for (int ic = 0; ic < c; ++ic) {
                        for (int i = 0; i < kh; ++i) {
                            const int ih = oh * stride - pad + i;
                            if (ih < 0 || ih >= h) continue;
                            for (int j = 0; j < kw; ++j) {
                                const int iw = ow * stride - pad + j;
                                if (iw < 0 || iw >= w) continue;
                                acc += xn[(static_cast<std::int64_t>(ic) * h + ih) * w + iw] *
                                       wk[(static_cast<std::int64_t>(ic) * kh + i) * kw + j];
                            }
                        }
                    }
                    yo[static_cast<std::int64_t>(oh) * wo + ow] = acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_input(const T* gy, int n, int k, int ho, int wo,
                           const T* wt, int c, int kh, int kw,
                           int stride, int pad,
                           T* gx, int h, int w) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const T* gyn = gy + static_cast<std::int64_t>(in) * k * ho * wo;
            T* gxn = gx + (static_cast<std::int64_t>(in) * c + ic) * h * w;
            for (int ih = 0; ih < h; ++ih) {
                for (int iw = 0; iw < w; ++iw) {
                    T acc = T(0);
                    for (int ik = 0; ik < k; ++ik) {
                        const T* wk = wt + (static_cast<std::int64_t>(ik) * c + ic) * kh * kw;
                        for (int i = 0; i < kh; ++i) {
                            const int num_h = ih + pad - i;
                            if (num_h < 0 || num_h % stride != 0) continue;
                            const int oh = num_h / stride;
                            if (oh >= ho) continue;
                            for (int j = 0; j < kw; ++j) {
                                const int num_w = iw + pad - j;
                                if (num_w < 0 || num_w % stride != 0) continue;
                                const int ow = num_w / stride;
                                if (ow >= wo) continue;
                                acc += gyn[(static_cast<std::int64_t>(ik) * ho + oh) * wo + ow] *
                                       wk[static_cast<std::int64_t>(i) * kw + j];
                            }
                        }
                    }
                    gxn[static_cast<std::int64_t>(ih) * w + iw] += acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_weight(const T* gy, int n, int k, int ho, int wo,
                            const T* x, int c, int h, int w,
                            int stride, int pad,
                            T* gw, int kh, int kw) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int ik = 0; ik < k; ++ik) {
        for (int ic = 0; ic < c; ++ic) {
            for (int i = 0; i < kh; ++i) {
                for (int j = 0; j < kw; ++j) {
                    T acc = T(0);
                    for (int in = 0; in < n; ++in) {
                        const T* gyk = gy + (static_cast<std::int64_t>(in) * k + ik) * ho * wo;
                        const T* xc = x + (static_cast<std::int64_t>(in) * c + ic) * h * w;
                        for (int oh = 0; oh < ho; ++oh) {
                            const int ih = oh * stride - pad + i;
                            if (ih < 0 || ih >= h) continue;
                            for (int ow = 0; ow < wo; ++ow) {
                                const int iw = ow * stride - pad + j;
                                if (iw < 0 || iw >= w) continue;
                                acc += gyk[static_cast<std::int64_t>(oh) * wo + ow] *
                                       xc[static_cast<std::int64_t>(ih) * w + iw];
                            }
                        }
                    }
                    gw[((static_cast<std::int64_t>(ik) * c + ic) * kh + i) * kw + j] += acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_bias(const T* gy, int n, int k, int howo, T* gb) {
#pragma omp parallel for schedule(static)
    for (int ik = 0; ik < k; ++ik) {
        T acc = T(0);
        for (int in = 0; in < n; ++in) {
            const T* p = gy + (static_cast<std::int64_t>(in) * k + ik) * howo;
            for (int l = 0; l < howo; ++l) acc += p[l];
        }
        gb[ik] += acc;
    }
}

template <typename T>
void linear_forward(const T* x, int n, int d, const T* wt, int m, const T* bias, T* y) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int im = 0; im < m; ++im) {
            const T* xr = x + static_cast<std::int64_t>(in) * d;
            const T* wr = wt + static_cast<std::int64_t>(im) * d;
            T acc = bias[im];
            for (int id = 0; id < d; ++id) acc += xr[id] * wr[id];
            y[static_cast<std::int64_t>(in) * m + im] = acc;
        }
    }
}

template <typename T>
void linear_backward_input(const T* gy, const T* wt, int n, int d, int m, T* gx) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int id = 0; id < d; ++id) {
            const T* gyr = gy + static_cast<std::int64_t>(in) * m;
            T acc = T(0);
            for (int im = 0; im < m; ++im) acc += gyr[im] * wt[static_cast<std::int64_t>(im) * d + id];
            gx[static_cast<std::int64_t>(in) * d + id] += acc;
        }
    }
}

template <typename T>
void linear_backward_weight(const T* gy, const T* x, int n, int d, int m, T* gw) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int im = 0; im < m; ++im) {
        for (int id = 0; id < d; ++id) {
            T acc = T(0);
            for (int in = 0; in < n; ++in)
                acc += gy[static_cast<std::int64_t>(in) * m + im] * x[static_cast<std::int64_t>(in) * d + id];
            gw[static_cast<std::int64_t>(im) * d + id] += acc;
        }
    }
}

template <typename T>
void linear_backward_bias(const T* gy, int n, int m, T* gb) {
#pragma omp parallel for schedule(static)
    for (int im = 0; im < m; ++im) {
        T acc = T(0);
        for (int in = 0; in < n; ++in) acc += gy[static_cast<std::int64_t>(in) * m + im];
        gb[im] += acc;
    }
}

template <typename T>
void relu_forward(const T* x, std::int64_t len, T* y) {
#pragma omp parallel for schedule(static) if (len > 4096)
    for (std::int64_t i = 0; i < len; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* gy, const T* x, std::int64_t len, T* gx) {
#pragma omp parallel for schedule(static) if (len > 4096)
    for (std::int64_t i = 0; i < len; ++i)
        if (x[i] > T(0)) gx[i] += gy[i];
}

template <typename T>
void gap_forward(const T* x, int n, int c, int hw, T* y) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const T* p = x + (static_cast<std::int64_t>(in) * c + ic) * hw;
            T acc = T(0);
            for (int l = 0; l < hw; ++l) acc += p[l];
            y[static_cast<std::int64_t>(in) * c + ic] = acc / static_cast<T>(hw);
        }
    }
}

template <typename T>
void gap_backward(const T* gy, int n, int c, int hw, T* gx) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const T g = gy[static_cast<std::int64_t>(in) * c + ic] / static_cast<T>(hw);
            T* p = gx + (static_cast<std::int64_t>(in) * c + ic) * hw;
            for (int l = 0; l < hw; ++l) p[l] += g;
        }
    }
}

template <typename T>
void bilinear_pool_forward(const T* x, int n, int c, int hw, T* y) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int a = 0; a < c; ++a) {
            const T* xn = x + static_cast<std::int64_t>(in) * c * hw;
            T* yr = y + (static_cast<std::int64_t>(in) * c + a) * c;
            for (int b = 0; b < c; ++b) {
                const T* pa = xn + static_cast<std::int64_t>(a) * hw;
                const T* pb = xn + static_cast<std::int64_t>(b) * hw;
                T acc = T(0);
                for (int l = 0; l < hw; ++l) acc += pa[l] * pb[l];
                yr[b] = acc / static_cast<T>(hw);
            }
        }
    }
}

template <typename T>
void bilinear_pool_backward(const T* gy, const T* x, int n, int c, int hw, T* gx) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < n; ++in) {
        for (int a = 0; a < c; ++a) {
            const T* xn = x + static_cast<std::int64_t>(in) * c * hw;
            const T* gyn = gy + static_cast<std::int64_t>(in) * c * c;
            T* gxa = gx + (static_cast<std::int64_t>(in) * c + a) * hw;
            for (int l = 0; l < hw; ++l) {
                T acc = T(0);
                for (int b = 0; b < c; ++b)
                    acc += (gyn[static_cast<std::int64_t>(a) * c + b] +
                            gyn[static_cast<std::int64_t>(b) * c + a]) *
                           xn[static_cast<std::int64_t>(b) * hw + l];
                gxa[l] += acc / static_cast<T>(hw);
            }
        }
    }
}

template <typename T>
void mul_forward(const T* a, const T* b, std::int64_t len, T* y) {
#pragma omp parallel for schedule(static) if (len > 4096)
    for (std::int64_t i = 0; i < len; ++i) y[i] = a[i] * b[i];
}

template <typename T>
void mul_accum(const T* a, const T* b, std::int64_t len, T* y) {
#pragma omp parallel for schedule(static) if (len > 4096)
    for (std::int64_t i = 0; i < len; ++i) y[i] += a[i] * b[i];
}

template <typename T>
void axpy(T alpha, const T* x, std::int64_t len, T* y) {
#pragma omp parallel for schedule(static) if (len > 4096)
    for (std::int64_t i = 0; i < len; ++i) y[i] += alpha * x[i];
}

#define DEMO_INSTANTIATE_KERNELS(T)                                                            \
    template void conv2d_forward<T>(const T*, int, int, int, int, const T*, int, int, int,    \
                                    const T*, int, int, T*, int, int);                         \
    template void conv2d_backward_input<T>(const T*, int, int, int, int, const T*, int, int,  \
                                           int, int, int, T*, int, int);                       \
    template void conv2d_backward_weight<T>(const T*, int, int, int, int, const T*, int, int, \
                                            int, int, int, T*, int, int);                      \
    template void conv2d_backward_bias<T>(const T*, int, int, int, T*);                        \
    template void linear_forward<T>(const T*, int, int, const T*, int, const T*, T*);          \
    template void linear_backward_input<T>(const T*, const T*, int, int, int, T*);             \
    template void linear_backward_weight<T>(const T*, const T*, int, int, int, T*);            \
    template void linear_backward_bias<T>(const T*, int, int, T*);                             \
    template void relu_forward<T>(const T*, std::int64_t, T*);                                 \
    template void relu_backward<T>(const T*, const T*, std::int64_t, T*);                      \
    template void gap_forward<T>(const T*, int, int, int, T*);                                 \
    template void gap_backward<T>(const T*, int, int, int, T*);                                \
    template void bilinear_pool_forward<T>(const T*, int, int, int, T*);                       \
    template void bilinear_pool_backward<T>(const T*, const T*, int, int, int, T*);            \
    template void mul_forward<T>(const T*, const T*, std::int64_t, T*);                        \
    template void mul_accum<T>(const T*, const T*, std::int64_t, T*);                          \
    template void axpy<T>(T, const T*, std::int64_t, T*);

DEMO_INSTANTIATE_KERNELS(float)
DEMO_INSTANTIATE_KERNELS(double)

}  // namespace demo::kern

namespace demo::kern_ref {

template <typename T>
void conv2d_forward(const T* x, int n, int c, int h, int w,
                    const T* wt, int k, int kh, int kw,
                    const T* bias, int stride, int pad,
                    T* y, int ho, int wo) {
    for (int in = 0; in < n; ++in) {
        for (int ik = 0; ik < k; ++ik) {
            const T* xn = x + static_cast<std::int64_t>(in) * c * h * w;
            const T* wk = wt + static_cast<std::int64_t>(ik) * c * kh * kw;
            T* yo = y + (static_cast<std::int64_t>(in) * k + ik) * ho * wo;
            for (int oh = 0; oh < ho; ++oh) {
                for (int ow = 0; ow < wo; ++ow) {
                    T acc = bias[ik];
                    for (int ic = 0; ic < c; ++ic) {
                        for (int i = 0; i < kh; ++i) {
                            const int ih = oh * stride - pad + i;
                            if (ih < 0 || ih >= h) continue;
                            for (int j = 0; j < kw; ++j) {
                                const int iw = ow * stride - pad + j;
                                if (iw < 0 || iw >= w) continue;
                                acc += xn[(static_cast<std::int64_t>(ic) * h + ih) * w + iw] *
                                       wk[(static_cast<std::int64_t>(ic) * kh + i) * kw + j];
                            }
                        }
                    }
                    yo[static_cast<std::int64_t>(oh) * wo + ow] = acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_input(const T* gy, int n, int k, int ho, int wo,
                           const T* wt, int c, int kh, int kw,
                           int stride, int pad,
                           T* gx, int h, int w) {
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const T* gyn = gy + static_cast<std::int64_t>(in) * k * ho * wo;
            T* gxn = gx + (static_cast<std::int64_t>(in) * c + ic) * h * w;
            for (int ih = 0; ih < h; ++ih) {
                for (int iw = 0; iw < w; ++iw) {
                    T acc = T(0);
                    for (int ik = 0; ik < k; ++ik) {
                        const T* wk = wt + (static_cast<std::int64_t>(ik) * c + ic) * kh * kw;
                        for (int i = 0; i < kh; ++i) {
                            const int num_h = ih + pad - i;
                            if (num_h < 0 || num_h % stride != 0) continue;
                            const int oh = num_h / stride;
                            if (oh >= ho) continue;
                            for (int j = 0; j < kw; ++j) {
                                const int num_w = iw + pad - j;
                                if (num_w < 0 || num_w % stride != 0) continue;
                                const int ow = num_w / stride;
                                if (ow >= wo) continue;
                                acc += gyn[(static_cast<std::int64_t>(ik) * ho + oh) * wo + ow] *
                                       wk[static_cast<std::int64_t>(i) * kw + j];
                            }
                        }
                    }
                    gxn[static_cast<std::int64_t>(ih) * w + iw] += acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_weight(const T* gy, int n, int k, int ho, int wo,
                            const T* x, int c, int h, int w,
                            int stride, int pad,
                            T* gw, int kh, int kw) {
    for (int ik = 0; ik < k; ++ik) {
        for (int ic = 0; ic < c; ++ic) {
            for (int i = 0; i < kh; ++i) {
                for (int j = 0; j < kw; ++j) {
                    T acc = T(0);
                    for (int in = 0; in < n; ++in) {
                        const T* gyk = gy + (static_cast<std::int64_t>(in) * k + ik) * ho * wo;
                        const T* xc = x + (static_cast<std::int64_t>(in) * c + ic) * h * w;
                        for (int oh = 0; oh < ho; ++oh) {
                            const int ih = oh * stride - pad + i;
                            if (ih < 0 || ih >= h) continue;
                            for (int ow = 0; ow < wo; ++ow) {
                                const int iw = ow * stride - pad + j;
                                if (iw < 0 || iw >= w) continue;
                                acc += gyk[static_cast<std::int64_t>(oh) * wo + ow] *
                                       xc[static_cast<std::int64_t>(ih) * w + iw];
                            }
                        }
                    }
                    gw[((static_cast<std::int64_t>(ik) * c + ic) * kh + i) * kw + j] += acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_bias(const T* gy, int n, int k, int howo, T* gb) {
    for (int ik = 0; ik < k; ++ik) {
        T acc = T(0);
        for (int in = 0; in < n; ++in) {
            const T* p = gy + (static_cast<std::int64_t>(in) * k + ik) * howo;
            for (int l = 0; l < howo; ++l) acc += p[l];
        }
        gb[ik] += acc;
    }
}

template <typename T>
void linear_forward(const T* x, int n, int d, const T* wt, int m, const T* bias, T* y) {
    for (int in = 0; in < n; ++in) {
        for (int im = 0; im < m; ++im) {
            const T* xr = x + static_cast<std::int64_t>(in) * d;
            const T* wr = wt + static_cast<std::int64_t>(im) * d;
            T acc = bias[im];
            for (int id = 0; id < d; ++id) acc += xr[id] * wr[id];
            y[static_cast<std::int64_t>(in) * m + im] = acc;
        }
    }
}

template <typename T>
void linear_backward_input(const T* gy, const T* wt, int n, int d, int m, T* gx) {
    for (int in = 0; in < n; ++in) {
        for (int id = 0; id < d; ++id) {
            const T* gyr = gy + static_cast<std::int64_t>(in) * m;
            T acc = T(0);
            for (int im = 0; im < m; ++im) acc += gyr[im] * wt[static_cast<std::int64_t>(im) * d + id];
            gx[static_cast<std::int64_t>(in) * d + id] += acc;
        }
    }
}

template <typename T>
void linear_backward_weight(const T* gy, const T* x, int n, int d, int m, T* gw) {
    for (int im = 0; im < m; ++im) {
        for (int id = 0; id < d; ++id) {
            T acc = T(0);
            for (int in = 0; in < n; ++in)
                acc += gy[static_cast<std::int64_t>(in) * m + im] * x[static_cast<std::int64_t>(in) * d + id];
            gw[static_cast<std::int64_t>(im) * d + id] += acc;
        }
    }
}

template <typename T>
void linear_backward_bias(const T* gy, int n, int m, T* gb) {
    for (int im = 0; im < m; ++im) {
        T acc = T(0);
        for (int in = 0; in < n; ++in) acc += gy[static_cast<std::int64_t>(in) * m + im];
        gb[im] += acc;
    }
}

template <typename T>
void relu_forward(const T* x, std::int64_t len, T* y) {
    for (std::int64_t i = 0; i < len; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* gy, const T* x, std::int64_t len, T* gx) {
    for (std::int64_t i = 0; i < len; ++i)
        if (x[i] > T(0)) gx[i] += gy[i];
}

template <typename T>
void gap_forward(const T* x, int n, int c, int hw, T* y) {
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const T* p = x + (static_cast<std::int64_t>(in) * c + ic) * hw;
            T acc = T(0);
            for (int l = 0; l < hw; ++l) acc += p[l];
            y[static_cast<std::int64_t>(in) * c + ic] = acc / static_cast<T>(hw);
        }
    }
}

template <typename T>
void gap_backward(const T* gy, int n, int c, int hw, T* gx) {
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const T g = gy[static_cast<std::int64_t>(in) * c + ic] / static_cast<T>(hw);
            T* p = gx + (static_cast<std::int64_t>(in) * c + ic) * hw;
            for (int l = 0; l < hw; ++l) p[l] += g;
        }
    }
}

template <typename T>
void bilinear_pool_forward(const T* x, int n, int c, int hw, T* y) {
    for (int in = 0; in < n; ++in) {
        for (int a = 0; a < c; ++a) {
            const T* xn = x + static_cast<std::int64_t>(in) * c * hw;
            T* yr = y + (static_cast<std::int64_t>(in) * c + a) * c;
            for (int b = 0; b < c; ++b) {
                const T* pa = xn + static_cast<std::int64_t>(a) * hw;
                const T* pb = xn + static_cast<std::int64_t>(b) * hw;
                T acc = T(0);
                for (int l = 0; l < hw; ++l) acc += pa[l] * pb[l];
                yr[b] = acc / static_cast<T>(hw);
            }
        }
    }
}

template <typename T>
void bilinear_pool_backward(const T* gy, const T* x, int n, int c, int hw, T* gx) {
    for (int in = 0; in < n; ++in) {
        for (int a = 0; a < c; ++a) {
            const T* xn = x + static_cast<std::int64_t>(in) * c * hw;
            const T* gyn = gy + static_cast<std::int64_t>(in) * c * c;
            T* gxa = gx + (static_cast<std::int64_t>(in) * c + a) * hw;
            for (int l = 0; l < hw; ++l) {
                T acc = T(0);
                for (int b = 0; b < c; ++b)
                    acc += (gyn[static_cast<std::int64_t>(a) * c + b] +
                            gyn[static_cast<std::int64_t>(b) * c + a]) *
                           xn[static_cast<std::int64_t>(b) * hw + l];
                gxa[l] += acc / static_cast<T>(hw);
            }
        }
    }
}

template <typename T>
void mul_forward(const T* a, const T* b, std::int64_t len, T* y) {
    for (std::int64_t i = 0; i < len; ++i) y[i] = a[i] * b[i];
}

template <typename T>
void mul_accum(const T* a, const T* b, std::int64_t len, T* y) {
    for (std::int64_t i = 0; i < len; ++i) y[i] += a[i] * b[i];
}

template <typename T>
void axpy(T alpha, const T* x, std::int64_t len, T* y) {
    for (std::int64_t i = 0; i < len; ++i) y[i] += alpha * x[i];
}

DEMO_INSTANTIATE_KERNELS(float)
DEMO_INSTANTIATE_KERNELS(double)

}  // namespace demo::kern_ref
