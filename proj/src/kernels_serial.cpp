#include "zbnn/kernels.hpp"

namespace zbnn::kernels::serial {

void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
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
    for (std::size_t i = 0; i < m; ++i) {
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
    for (std::size_t f = 0; f < K; ++f) {
        for (std::size_t oy = 0; oy < Ho; ++oy) {
            for (std::size_t ox = 0; ox < Wo; ++ox) {
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
    }
}

void xcorr2d_input_grad(const double* grad, const double* ker, double* din,
                        std::size_t C, std::size_t H, std::size_t W,
                        std::size_t K, std::size_t kh, std::size_t kw,
                        std::size_t sy, std::size_t sx, std::size_t py,
                        std::size_t px, std::size_t Ho, std::size_t Wo) {
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t y = 0; y < H; ++y) {
            for (std::size_t x = 0; x < W; ++x) {
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
    }
}

void xcorr2d_kernel_grad(const double* grad, const double* in, double* dker,
                         std::size_t C, std::size_t H, std::size_t W,
                         std::size_t K, std::size_t kh, std::size_t kw,
                         std::size_t sy, std::size_t sx, std::size_t py,
                         std::size_t px, std::size_t Ho, std::size_t Wo) {
    for (std::size_t f = 0; f < K; ++f) {
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t dy = 0; dy < kh; ++dy) {
                for (std::size_t dx = 0; dx < kw; ++dx) {
                    double acc = 0.0;
                    for (std::size_t oy = 0; oy < Ho; ++oy) {
                        const long y = static_cast<long>(oy * sy + dy) - static_cast<long>(py);
                        if (y < 0 || y >= static_cast<long>(H)) continue;
                        for (std::size_t ox = 0; ox < Wo; ++ox) {
                            const long x = static_cast<long>(ox * sx + dx) - static_cast<long>(px);
                            if (x < 0 || x >= static_cast<long>(W)) continue;
                            acc += grad[(f * Ho + oy) * Wo + ox] *
                                   in[(c * H + y) * W + x];
                        }
                    }
                    dker[((f * C + c) * kh + dy) * kw + dx] = acc;
                }
            }
        }
    }
}

}  // namespace zbnn::kernels::serial
