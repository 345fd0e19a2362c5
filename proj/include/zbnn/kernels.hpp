#ifndef ZBNN_KERNELS_HPP
#define ZBNN_KERNELS_HPP

#include <cstddef>
#include <vector>

#include "zbnn/tensor.hpp"

namespace zbnn {

// Execution mode for the compute kernels. Parallel uses OpenMP over output
// elements only; every output element is accumulated in a fixed left-to-right
// order, so Serial and Parallel results are bit-identical.
namespace exec {

enum class Mode { Serial, Parallel };

Mode mode();
void set_mode(Mode m);
int thread_count();
void set_thread_count(int n);
// honors ZBNN_THREADS when set
void init_from_env();

}  // namespace exec

enum class ReduceKind { Max, Mean, Sum };

namespace kernels {

// Serial reference implementations. These are the ground truth the OpenMP
// variants are tested against.
namespace serial {
void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n);
void matmul_tn(const double* a, const double* b, double* c, std::size_t k,
               std::size_t m, std::size_t n);
void xcorr2d(const double* in, const double* ker, double* out, std::size_t C,
             std::size_t H, std::size_t W, std::size_t K, std::size_t kh,
             std::size_t kw, std::size_t sy, std::size_t sx, std::size_t py,
             std::size_t px, std::size_t Ho, std::size_t Wo);
void xcorr2d_input_grad(const double* grad, const double* ker, double* din,
                        std::size_t C, std::size_t H, std::size_t W,
                        std::size_t K, std::size_t kh, std::size_t kw,
                        std::size_t sy, std::size_t sx, std::size_t py,
                        std::size_t px, std::size_t Ho, std::size_t Wo);
void xcorr2d_kernel_grad(const double* grad, const double* in, double* dker,
                         std::size_t C, std::size_t H, std::size_t W,
                         std::size_t K, std::size_t kh, std::size_t kw,
                         std::size_t sy, std::size_t sx, std::size_t py,
                         std::size_t px, std::size_t Ho, std::size_t Wo);
}  // namespace serial

namespace parallel {
void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n);
void matmul_tn(const double* a, const double* b, double* c, std::size_t k,
               std::size_t m, std::size_t n);
void xcorr2d(const double* in, const double* ker, double* out, std::size_t C,
             std::size_t H, std::size_t W, std::size_t K, std::size_t kh,
             std::size_t kw, std::size_t sy, std::size_t sx, std::size_t py,
             std::size_t px, std::size_t Ho, std::size_t Wo);
void xcorr2d_input_grad(const double* grad, const double* ker, double* din,
                        std::size_t C, std::size_t H, std::size_t W,
                        std::size_t K, std::size_t kh, std::size_t kw,
                        std::size_t sy, std::size_t sx, std::size_t py,
                        std::size_t px, std::size_t Ho, std::size_t Wo);
void xcorr2d_kernel_grad(const double* grad, const double* in, double* dker,
                         std::size_t C, std::size_t H, std::size_t W,
                         std::size_t K, std::size_t kh, std::size_t kw,
                         std::size_t sy, std::size_t sx, std::size_t py,
                         std::size_t px, std::size_t Ho, std::size_t Wo);
}  // namespace parallel

}  // namespace kernels

// Shape-checked tensor operations; dispatch to serial or parallel kernels
// according to exec::mode().

// c[m,n] = a[m,k] * b[k,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// c[m,n] = a[m,k] * b[n,k]^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// c[m,n] = a[k,m]^T * b[k,n]
Tensor matmul_tn(const Tensor& a, const Tensor& b);

// out[K,Ho,Wo], cross-correlation of in[C,H,W] with ker[K,C,kh,kw], no bias
Tensor xcorr2d(const Tensor& input, const Tensor& kernel,
               std::size_t stride_y, std::size_t stride_x, std::size_t pad_y,
               std::size_t pad_x);
Tensor xcorr2d_input_grad(const Tensor& grad, const Tensor& kernel,
                          std::size_t C, std::size_t H, std::size_t W,
                          std::size_t stride_y, std::size_t stride_x,
                          std::size_t pad_y, std::size_t pad_x);
Tensor xcorr2d_kernel_grad(const Tensor& grad, const Tensor& input,
                           std::size_t kh, std::size_t kw, std::size_t stride_y,
                           std::size_t stride_x, std::size_t pad_y,
                           std::size_t pad_x);

// Reduce over the given axes; remaining dims keep their order. Reducing all
// axes yields shape [1].
Tensor reduce(const Tensor& t, ReduceKind kind, const std::vector<std::size_t>& axes);

}  // namespace zbnn

#endif  // ZBNN_KERNELS_HPP
