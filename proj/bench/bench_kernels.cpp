// Compares the serial reference kernels against the OpenMP variants and
// verifies bit-identical outputs while timing both.

#include <chrono>
#include <cstdio>
#include <cstring>

#include "zbnn/kernels.hpp"
#include "zbnn/rng.hpp"
#include "zbnn/tensor.hpp"

using namespace zbnn;

namespace {

Tensor random_tensor(Shape s, Rng& rng) {
    Tensor t(std::move(s));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
    return t;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, seconds_since(t0));
    }
    return best;
}

bool bit_identical(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void bench_matmul(std::size_t m, std::size_t k, std::size_t n) {
    Rng rng(42);
    const Tensor a = random_tensor(Shape{m, k}, rng);
    const Tensor b = random_tensor(Shape{k, n}, rng);

    exec::set_mode(exec::Mode::Serial);
    Tensor cs;
    const double ts = time_best_of(3, [&] { cs = matmul(a, b); });

    exec::set_mode(exec::Mode::Parallel);
    Tensor cp;
    const double tp = time_best_of(3, [&] { cp = matmul(a, b); });

    const double gflop = 2.0 * m * k * n * 1e-9;
    std::printf("matmul %4zux%4zux%4zu  serial %7.1f ms (%5.2f GF/s)  omp %7.1f ms (%5.2f GF/s)  speedup %.2fx  identical=%s\n",
                m, k, n, ts * 1e3, gflop / ts, tp * 1e3, gflop / tp, ts / tp,
                bit_identical(cs, cp) ? "yes" : "NO");
}

void bench_xcorr(std::size_t C, std::size_t H, std::size_t K, std::size_t kside) {
    Rng rng(7);
    const Tensor in = random_tensor(Shape{C, H, H}, rng);
    const Tensor ker = random_tensor(Shape{K, C, kside, kside}, rng);

    exec::set_mode(exec::Mode::Serial);
    Tensor os;
    const double ts = time_best_of(3, [&] { os = xcorr2d(in, ker, 1, 1, 1, 1); });

    exec::set_mode(exec::Mode::Parallel);
    Tensor op;
    const double tp = time_best_of(3, [&] { op = xcorr2d(in, ker, 1, 1, 1, 1); });

    std::printf("xcorr2d C=%zu H=%zu K=%zu k=%zu  serial %7.1f ms  omp %7.1f ms  speedup %.2fx  identical=%s\n",
                C, H, K, kside, ts * 1e3, tp * 1e3, ts / tp,
                bit_identical(os, op) ? "yes" : "NO");
}

void bench_reduce(std::size_t rows, std::size_t cols) {
    Rng rng(3);
    const Tensor t = random_tensor(Shape{rows, cols}, rng);

    exec::set_mode(exec::Mode::Serial);
    Tensor rs;
    const double ts = time_best_of(3, [&] { rs = reduce(t, ReduceKind::Sum, {1}); });

    exec::set_mode(exec::Mode::Parallel);
    Tensor rp;
    const double tp = time_best_of(3, [&] { rp = reduce(t, ReduceKind::Sum, {1}); });

    std::printf("reduce sum %zux%zu over axis 1  serial %7.1f ms  omp %7.1f ms  speedup %.2fx  identical=%s\n",
                rows, cols, ts * 1e3, tp * 1e3, ts / tp,
                bit_identical(rs, rp) ? "yes" : "NO");
}

}  // namespace

int main() {
    exec::init_from_env();
    std::printf("threads: %d\n", exec::thread_count());
    bench_matmul(512, 784, 256);
    bench_matmul(1024, 1024, 1024);
    bench_xcorr(8, 64, 16, 3);
    bench_reduce(4096, 4096);
    exec::set_mode(exec::Mode::Parallel);
    return 0;
}
