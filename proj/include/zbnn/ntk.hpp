#ifndef ZBNN_NTK_HPP
#define ZBNN_NTK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "zbnn/rng.hpp"
#include "zbnn/tensor.hpp"

namespace zbnn {

// Fully connected ReLU network under the NTK parameterization: pre-activation
// of layer l+1 is (1/sqrt(n_l)) W_l^T A_l + beta b_l with unit-normal init.
// beta == 0 is the zero-bias variant (bias vectors absent). This construction
// is deliberately separate from the practical training networks.
struct NtkConfig {
    std::vector<std::size_t> widths;  // n_0 .. n_L
    double beta = 0.0;
    // guard for Jacobian materialization (doubles)
    std::size_t resource_budget = 200'000'000;

    std::size_t depth() const { return widths.size() - 1; }
    std::size_t param_count() const;
};

NtkConfig make_mlp_config(std::size_t input_dim, std::size_t hidden_width,
                          std::size_t hidden_layers, std::size_t output_dim,
                          double beta);

struct NtkParams {
    std::vector<Tensor> weights;  // W_l: [n_l, n_{l+1}]
    std::vector<Tensor> biases;   // b_l: [n_{l+1}]; empty when beta == 0
};

NtkParams sample_params(const NtkConfig& cfg, std::uint64_t seed);

// batched forward; inputs [N, n_0] -> outputs [N, n_L]
Tensor ntk_forward(const NtkConfig& cfg, const NtkParams& params,
                   const Tensor& inputs);

// Gram matrix of parameter gradients. Block (i,j) is the n_L x n_L kernel
// K(x_i, x_j); the matrix is exactly symmetric by construction.
struct KernelMatrix {
    Tensor matrix;  // [N*n_L, N*n_L]
    std::size_t outputs_per_input = 1;

    double max_asymmetry() const;
    double trace() const;
    // smallest sampled quadratic form x^T K x / |x|^2, PSD probe
    double min_quadratic_form(std::size_t samples, Rng& rng) const;
};

KernelMatrix empirical_ntk(const NtkConfig& cfg, const NtkParams& params,
                           const Tensor& inputs);

// NNGP covariance recursion: layer 1 in closed form, deeper layers by Monte
// Carlo over the bivariate Gaussian of the previous layer.
struct NngpCovariance {
    std::vector<Tensor> sigma;           // one [N,N] matrix per layer 1..L
    std::vector<Tensor> standard_error;  // same shapes; zeros for layer 1
    std::vector<std::string> warnings;   // clamped non-PSD pairs
    double beta = 0.0;
};

NngpCovariance nngp_covariance(const NtkConfig& cfg, const Tensor& inputs,
                               std::size_t mc_samples, Rng& rng);

struct WidthConvergenceReport {
    std::vector<std::size_t> widths;
    std::vector<double> mean_entry_std;  // across-seed std, averaged over entries
    std::vector<double> max_entry_std;
    bool monotone_with_one_inversion = false;
    // beta=0 vs beta>0 mean kernels at the largest width, and twin beta=0
    // ensembles from disjoint seeds
    double beta_alt = 0.0;
    double beta_pair_distance = 0.0;      // max-abs entry difference
    double twin_ensemble_distance = 0.0;  // expected within noise
    double twin_ensemble_tolerance = 0.0; // 3x combined standard error
    std::vector<Tensor> mean_kernels;     // per width
};

WidthConvergenceReport width_convergence_study(const NtkConfig& base,
                                               const std::vector<std::size_t>& widths,
                                               std::size_t seeds,
                                               const Tensor& inputs,
                                               double beta_alt = 0.5);

struct DriftReport {
    std::vector<std::size_t> widths;
    std::vector<double> relative_drift;  // Frobenius, after vs before
    bool decreasing_with_width = false;
    std::size_t steps = 0;
    double learning_rate = 0.0;
    std::size_t probe_inputs = 0;
};

// Full-batch gradient descent on MSE for `steps`; the kernel is evaluated on
// the first `probe_inputs` training samples before and after.
DriftReport training_drift_study(const NtkConfig& base,
                                 const std::vector<std::size_t>& widths,
                                 const Tensor& inputs,
                                 const std::vector<double>& targets,
                                 std::size_t steps, double learning_rate,
                                 std::size_t probe_inputs, std::uint64_t seed);

std::string width_report_to_json(const WidthConvergenceReport& r);
std::string drift_report_to_json(const DriftReport& r);
void kernel_to_csv(const Tensor& kernel, const std::string& path);

}  // namespace zbnn

#endif  // ZBNN_NTK_HPP
