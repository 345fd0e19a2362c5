// OpenMP variants of the serial kernels. Work is split over output elements
// only; the accumulation order per output element is the same fixed
// left-to-right order as in the serial versions, so results are bit-identical
// for any thread count.

#include "zbnn/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace zbnn::kernels::parallel {

void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t k,
               std::size_t m, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const double api = a[p * m + i];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
        }
    }
}

void xcorr2d(const double* in, const double* ker, double* out, std::size_t C,
             std::size_t H, std::size_t W, std::size_t K, std::size_t kh,
             std::size_t kw, std::size_t sy, std::size_t sx, std::size_t py,
             std::size_t px, std::size_t Ho, std::size_t Wo) {
    const long long total = static_cast<long long>(K) * Ho * Wo;
#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < total; ++idx) {
        const std::size_t f = static_cast<std::size_t>(idx) / (Ho * Wo);
        const std::size_t oy = (static_cast<std::size_t>(idx) / Wo) % Ho;
        const std::size_t ox = static_cast<std::size_t>(idx) % Wo;
        double acc = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t dy = 0; dy < kh; ++dy) {
                const long y = static_cast<long>(oy * sy + dy) - static_cast<long>(py);
                if (y < 0 || y >= static_cast<long>(H)) continue;
                for (std::size_t dx = 0; dx < kw; ++dx) {
                    const long x = static_cast<long>(ox * sx + dx) - static_cast<long>(px);
                    if (x < 0 || x >= static_cast<long>(W)) continue;
                    acc += in[(c * H + y) * W + x] *
                           ker[((f * C + c) * kh + dy) * kw + dx];
                }
            }
        }
        out[(f * Ho + oy) * Wo + ox] = acc;
    }
}

void xcorr2d_input_grad(const double* grad, const double* ker, double* din,
                        std::size_t C, std::size_t H, std::size_t W,
                        std::size_t K, std::size_t kh, std::size_t kw,
                        std::size_t sy, std::size_t sx, std::size_t py,
                        std::size_t px, std::size_t Ho, std::size_t Wo) {
    const long long total = static_cast<long long>(C) * H * W;
#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < total; ++idx) {
        const std::size_t c = static_cast<std::size_t>(idx) / (H * W);
        const std::size_t y = (static_cast<std::size_t>(idx) / W) % H;
        const std::size_t x = static_cast<std::size_t>(idx) % W;
        double acc = 0.0;
        for (std::size_t f = 0; f < K; ++f) {
            for (std::size_t dy = 0; dy < kh; ++dy) {
                const long num_y = static_cast<long>(y + py) - static_cast<long>(dy);
                if (num_y < 0 || num_y % static_cast<long>(sy)) continue;
                const long oy = num_y / static_cast<long>(sy);
                if (oy >= static_cast<long>(Ho)) continue;
                for (std::size_t dx = 0; dx < kw; ++dx) {
                    const long num_x = static_cast<long>(x + px) - static_cast<long>(dx);
                    if (num_x < 0 || num_x % static_cast<long>(sx)) continue;
                    const long ox = num_x / static_cast<long>(sx);
                    if (ox >= static_cast<long>(Wo)) continue;
                    acc += grad[(f * Ho + oy) * Wo + ox] *
                           ker[((f * C + c) * kh + dy) * kw + dx];
                }
            }
        }
        din[(c * H + y) * W + x] = acc;
    }
}

void xcorr2d_kernel_grad(const double* grad, const double* in, double* dker,
                         std::size_t C, std::size_t H, std::size_t W,
                         std::size_t K, std::size_t kh, std::size_t kw,
                         std::size_t sy, std::size_t sx, std::size_t py,
                         std::size_t px, std::size_t Ho, std::size_t Wo) {
    const long long total = static_cast<long long>(K) * C * kh * kw;
#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < total; ++idx) {
        std::size_t rest = static_cast<std::size_t>(idx);
        const std::size_t dx = rest % kw;
        rest /= kw;
        const std::size_t dy = rest % kh;
        rest /= kh;
        const std::size_t c = rest % C;
        const std::size_t f = rest / C;
        double acc = 0.0;
        for (std::size_t oy = 0; oy < Ho; ++oy) {
            const long y = static_cast<long>(oy * sy + dy) - static_cast<long>(py);
            if (y < 0 || y >= static_cast<long>(H)) continue;
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                const long x = static_cast<long>(ox * sx + dx) - static_cast<long>(px);
                if (x < 0 || x >= static_cast<long>(W)) continue;
                acc += grad[(f * Ho + oy) * Wo + ox] * in[(c * H + y) * W + x];
            }
        }
        dker[((f * C + c) * kh + dy) * kw + dx] = acc;
    }
}

}  // namespace zbnn::kernels::parallel
