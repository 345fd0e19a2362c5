#include "zbnn/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace zbnn {

namespace exec {

namespace {
std::atomic<Mode> g_mode{Mode::Parallel};
}

Mode mode() { return g_mode.load(std::memory_order_relaxed); }
void set_mode(Mode m) { g_mode.store(m, std::memory_order_relaxed); }

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_thread_count(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

void init_from_env() {
    if (const char* env = std::getenv("ZBNN_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) set_thread_count(n);
    }
}

}  // namespace exec

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeMismatch("matmul expects rank-2 operands, got " +
                            a.shape().str() + " and " + b.shape().str());
    if (a.dim(1) != b.dim(0))
        throw ShapeMismatch("matmul inner dims differ: " + a.shape().str() +
                            " vs " + b.shape().str());
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c(Shape{m, n});
    if (exec::mode() == exec::Mode::Parallel)
        kernels::parallel::matmul(a.data(), b.data(), c.data(), m, k, n);
    else
        kernels::serial::matmul(a.data(), b.data(), c.data(), m, k, n);
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeMismatch("matmul_nt expects rank-2 operands");
    if (a.dim(1) != b.dim(1))
        throw ShapeMismatch("matmul_nt inner dims differ: " + a.shape().str() +
                            " vs " + b.shape().str());
    // materialize b^T so the inner loops stay contiguous
    const std::size_t rows = b.dim(0), cols = b.dim(1);
    Tensor bt(Shape{cols, rows});
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            bt[j * rows + i] = b[i * cols + j];
    return matmul(a, bt);
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeMismatch("matmul_tn expects rank-2 operands");
    if (a.dim(0) != b.dim(0))
        throw ShapeMismatch("matmul_tn inner dims differ: " + a.shape().str() +
                            " vs " + b.shape().str());
    const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
    Tensor c(Shape{m, n});
    if (exec::mode() == exec::Mode::Parallel)
        kernels::parallel::matmul_tn(a.data(), b.data(), c.data(), k, m, n);
    else
        kernels::serial::matmul_tn(a.data(), b.data(), c.data(), k, m, n);
    return c;
}

namespace {

struct ConvDims {
    std::size_t C, H, W, K, kh, kw, Ho, Wo;
};

ConvDims conv_dims(const Shape& input, const Shape& kernel, std::size_t sy,
                   std::size_t sx, std::size_t py, std::size_t px) {
    if (input.rank() != 3)
        throw ShapeMismatch("xcorr2d input must be [C,H,W], got " + input.str());
    if (kernel.rank() != 4)
        throw ShapeMismatch("xcorr2d kernel must be [K,C,kh,kw], got " + kernel.str());
    if (sy == 0 || sx == 0) throw InvalidConfig("xcorr2d stride must be >= 1");
    ConvDims d;
    d.C = input[0];
    d.H = input[1];
    d.W = input[2];
    d.K = kernel[0];
    d.kh = kernel[2];
    d.kw = kernel[3];
    if (kernel[1] != d.C)
        throw ShapeMismatch("xcorr2d channels disagree: input " + input.str() +
                            " kernel " + kernel.str());
    if (d.kh > d.H + 2 * py || d.kw > d.W + 2 * px)
        throw ShapeMismatch("xcorr2d kernel larger than padded input");
    d.Ho = (d.H + 2 * py - d.kh) / sy + 1;
    d.Wo = (d.W + 2 * px - d.kw) / sx + 1;
    return d;
}

}  // namespace

Tensor xcorr2d(const Tensor& input, const Tensor& kernel, std::size_t stride_y,
               std::size_t stride_x, std::size_t pad_y, std::size_t pad_x) {
    const ConvDims d =
        conv_dims(input.shape(), kernel.shape(), stride_y, stride_x, pad_y, pad_x);
    Tensor out(Shape{d.K, d.Ho, d.Wo});
    if (exec::mode() == exec::Mode::Parallel)
        kernels::parallel::xcorr2d(input.data(), kernel.data(), out.data(), d.C,
                                   d.H, d.W, d.K, d.kh, d.kw, stride_y, stride_x,
                                   pad_y, pad_x, d.Ho, d.Wo);
    else
        kernels::serial::xcorr2d(input.data(), kernel.data(), out.data(), d.C,
                                 d.H, d.W, d.K, d.kh, d.kw, stride_y, stride_x,
                                 pad_y, pad_x, d.Ho, d.Wo);
    return out;
}

Tensor xcorr2d_input_grad(const Tensor& grad, const Tensor& kernel,
                          std::size_t C, std::size_t H, std::size_t W,
                          std::size_t stride_y, std::size_t stride_x,
                          std::size_t pad_y, std::size_t pad_x) {
    const ConvDims d = conv_dims(Shape{C, H, W}, kernel.shape(), stride_y,
                                 stride_x, pad_y, pad_x);
    if (grad.shape() != Shape{d.K, d.Ho, d.Wo})
        throw ShapeMismatch("xcorr2d_input_grad upstream shape " +
                            grad.shape().str());
    Tensor din(Shape{C, H, W});
    if (exec::mode() == exec::Mode::Parallel)
        kernels::parallel::xcorr2d_input_grad(grad.data(), kernel.data(),
                                              din.data(), d.C, d.H, d.W, d.K,
                                              d.kh, d.kw, stride_y, stride_x,
                                              pad_y, pad_x, d.Ho, d.Wo);
    else
        kernels::serial::xcorr2d_input_grad(grad.data(), kernel.data(),
                                            din.data(), d.C, d.H, d.W, d.K,
                                            d.kh, d.kw, stride_y, stride_x,
                                            pad_y, pad_x, d.Ho, d.Wo);
    return din;
}

Tensor xcorr2d_kernel_grad(const Tensor& grad, const Tensor& input,
                           std::size_t kh, std::size_t kw, std::size_t stride_y,
                           std::size_t stride_x, std::size_t pad_y,
                           std::size_t pad_x) {
    if (input.rank() != 3 || grad.rank() != 3)
        throw ShapeMismatch("xcorr2d_kernel_grad expects rank-3 tensors");
    const std::size_t K = grad.dim(0);
    const ConvDims d = conv_dims(input.shape(), Shape{K, input.dim(0), kh, kw},
                                 stride_y, stride_x, pad_y, pad_x);
    if (grad.dim(1) != d.Ho || grad.dim(2) != d.Wo)
        throw ShapeMismatch("xcorr2d_kernel_grad upstream shape " +
                            grad.shape().str());
    Tensor dker(Shape{K, d.C, kh, kw});
    if (exec::mode() == exec::Mode::Parallel)
        kernels::parallel::xcorr2d_kernel_grad(grad.data(), input.data(),
                                               dker.data(), d.C, d.H, d.W, K,
                                               kh, kw, stride_y, stride_x,
                                               pad_y, pad_x, d.Ho, d.Wo);
    else
        kernels::serial::xcorr2d_kernel_grad(grad.data(), input.data(),
                                             dker.data(), d.C, d.H, d.W, K, kh,
                                             kw, stride_y, stride_x, pad_y,
                                             pad_x, d.Ho, d.Wo);
    return dker;
}

Tensor reduce(const Tensor& t, ReduceKind kind, const std::vector<std::size_t>& axes) {
    const std::size_t rank = t.rank();
    std::vector<bool> reduced(rank, false);
    for (std::size_t ax : axes) {
        if (ax >= rank) throw InvalidAxis("axis " + std::to_string(ax) +
                                          " out of range for " + t.shape().str());
        if (reduced[ax]) throw InvalidAxis("duplicate axis " + std::to_string(ax));
        reduced[ax] = true;
    }

    std::vector<std::size_t> keep_dims, red_dims, keep_axes, red_axes;
    for (std::size_t i = 0; i < rank; ++i) {
        if (reduced[i]) {
            red_dims.push_back(t.dim(i));
            red_axes.push_back(i);
        } else {
            keep_dims.push_back(t.dim(i));
            keep_axes.push_back(i);
        }
    }

    std::size_t red_count = 1;
    for (std::size_t d : red_dims) red_count *= d;
    if (red_count == 0) throw InvalidAxis("reduce over empty extent");

    Shape out_shape(keep_dims.empty() ? std::vector<std::size_t>{1} : keep_dims);
    Tensor out(out_shape);

    std::vector<std::size_t> strides(rank, 1);
    for (std::size_t i = rank; i-- > 1;) strides[i - 1] = strides[i] * t.dim(i);

    const std::size_t out_count = out.size();
    auto body = [&](std::size_t o) {
        // base offset of this output slot
        std::size_t base = 0, rem = o;
        for (std::size_t i = keep_axes.size(); i-- > 0;) {
            const std::size_t d = keep_dims[i];
            base += (rem % d) * strides[keep_axes[i]];
            rem /= d;
        }
        // iterate the reduced axes in row-major order
        double acc = 0.0;
        bool first = true;
        std::vector<std::size_t> idx(red_axes.size(), 0);
        for (std::size_t r = 0; r < red_count; ++r) {
            std::size_t off = base;
            for (std::size_t i = 0; i < red_axes.size(); ++i)
                off += idx[i] * strides[red_axes[i]];
            const double v = t[off];
            switch (kind) {
                case ReduceKind::Max:
                    if (first || v > acc) acc = v;
                    break;
                case ReduceKind::Mean:
                case ReduceKind::Sum:
                    acc = first ? v : acc + v;
                    break;
            }
            first = false;
            for (std::size_t i = red_axes.size(); i-- > 0;) {
                if (++idx[i] < red_dims[i]) break;
                idx[i] = 0;
            }
        }
        if (kind == ReduceKind::Mean) acc /= static_cast<double>(red_count);
        out[o] = acc;
    };

    if (exec::mode() == exec::Mode::Parallel) {
#pragma omp parallel for schedule(static)
        for (long long o = 0; o < static_cast<long long>(out_count); ++o)
            body(static_cast<std::size_t>(o));
    } else {
        for (std::size_t o = 0; o < out_count; ++o) body(o);
    }
    return out;
}

}  // namespace zbnn
