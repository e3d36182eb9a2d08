// Times the OpenMP kernels against the serial reference on training-sized
// workloads and reports the speedup. Without OpenMP support both columns
// time the same serial code.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "demo/kernels.hpp"
#include "demo/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = Clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<float> random_vec(std::size_t n, demo::Rng& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-28s %10.3f ms %10.3f ms %8.2fx\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms);
}

}  // namespace

int main() {
    demo::Rng rng(7);

#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled; both columns run the serial code\n");
#endif
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

    {
        // conv2d forward, stage-2 sized: [16,16,24,24] x [32,16,3,3]
        const int n = 16, c = 16, h = 24, w = 24, k = 32, kh = 3, kw = 3;
        const int ho = (h + 2 - kh) / 2 + 1, wo = (w + 2 - kw) / 2 + 1;
        const auto x = random_vec(static_cast<std::size_t>(n) * c * h * w, rng);
        const auto wt = random_vec(static_cast<std::size_t>(k) * c * kh * kw, rng);
        const auto b = random_vec(k, rng);
        std::vector<float> y(static_cast<std::size_t>(n) * k * ho * wo);
        report("conv2d_forward",
               time_ms([&] { demo::kern_ref::conv2d_forward(x.data(), n, c, h, w, wt.data(), k, kh,
                                                            kw, b.data(), 2, 1, y.data(), ho, wo); },
                       20),
               time_ms([&] { demo::kern::conv2d_forward(x.data(), n, c, h, w, wt.data(), k, kh, kw,
                                                        b.data(), 2, 1, y.data(), ho, wo); },
                       20));

        std::vector<float> gx(x.size());
        const auto gy = random_vec(y.size(), rng);
        report("conv2d_backward_input",
               time_ms([&] { demo::kern_ref::conv2d_backward_input(gy.data(), n, k, ho, wo,
                                                                   wt.data(), c, kh, kw, 2, 1,
                                                                   gx.data(), h, w); },
                       20),
               time_ms([&] { demo::kern::conv2d_backward_input(gy.data(), n, k, ho, wo, wt.data(),
                                                               c, kh, kw, 2, 1, gx.data(), h, w); },
                       20));

        std::vector<float> gw(wt.size());
        report("conv2d_backward_weight",
               time_ms([&] { demo::kern_ref::conv2d_backward_weight(gy.data(), n, k, ho, wo,
                                                                    x.data(), c, h, w, 2, 1,
                                                                    gw.data(), kh, kw); },
                       20),
               time_ms([&] { demo::kern::conv2d_backward_weight(gy.data(), n, k, ho, wo, x.data(),
                                                                c, h, w, 2, 1, gw.data(), kh, kw); },
                       20));
    }

    {
        // linear, bilinear-feature sized: [64, 4096] -> [64, 64]
        const int n = 64, d = 4096, m = 64;
        const auto x = random_vec(static_cast<std::size_t>(n) * d, rng);
        const auto wt = random_vec(static_cast<std::size_t>(m) * d, rng);
        const auto b = random_vec(m, rng);
        std::vector<float> y(static_cast<std::size_t>(n) * m);
        report("linear_forward",
               time_ms([&] { demo::kern_ref::linear_forward(x.data(), n, d, wt.data(), m, b.data(),
                                                            y.data()); },
                       50),
               time_ms([&] { demo::kern::linear_forward(x.data(), n, d, wt.data(), m, b.data(),
                                                        y.data()); },
                       50));
    }

    {
        // bilinear pool at a 64-channel reduction scale: [8, 64, 12, 12] -> [8, 4096]
        const int n = 8, c = 64, hw = 144;
        const auto x = random_vec(static_cast<std::size_t>(n) * c * hw, rng);
        std::vector<float> y(static_cast<std::size_t>(n) * c * c);
        report("bilinear_pool_forward",
               time_ms([&] { demo::kern_ref::bilinear_pool_forward(x.data(), n, c, hw, y.data()); },
                       50),
               time_ms([&] { demo::kern::bilinear_pool_forward(x.data(), n, c, hw, y.data()); },
                       50));

        std::vector<float> gx(x.size());
        const auto gy = random_vec(y.size(), rng);
        report("bilinear_pool_backward",
               time_ms([&] { demo::kern_ref::bilinear_pool_backward(gy.data(), x.data(), n, c, hw,
                                                                    gx.data()); },
                       50),
               time_ms([&] { demo::kern::bilinear_pool_backward(gy.data(), x.data(), n, c, hw,
                                                                gx.data()); },
                       50));
    }

    return 0;
}
