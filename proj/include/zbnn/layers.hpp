#ifndef ZBNN_LAYERS_HPP
#define ZBNN_LAYERS_HPP

#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "zbnn/kernels.hpp"
#include "zbnn/rng.hpp"
#include "zbnn/tensor.hpp"

namespace zbnn {

struct Layer;

// Fully connected layer. A missing bias is structural: a zero-bias network
// never carries the field, so training cannot reintroduce one.
struct LinearLayer {
    Tensor weights;              // [out, in]
    std::optional<Tensor> bias;  // [out]
};

struct ConvLayer {
    Tensor kernel;               // [out_ch, in_ch, kh, kw]
    std::optional<Tensor> bias;  // [out_ch]
    std::size_t stride = 1;
    std::size_t padding = 0;
};

enum class PoolKind { Max, Avg };

struct PoolLayer {
    PoolKind kind = PoolKind::Max;
    std::size_t window = 2;
    std::size_t stride = 2;
};

struct ReluLayer {};

struct FlattenLayer {};

struct DropoutLayer {
    double rate = 0.0;  // inference forward is identity
};

struct BatchNormLayer {
    Tensor gamma;         // [C]
    Tensor beta;          // [C]
    Tensor running_mean;  // [C]
    Tensor running_var;   // [C]
    double epsilon = 1e-5;
};

enum class ResidualVariant { Plain, Fixup, Nf };

struct ResidualBlock {
    std::vector<Layer> branch;
    ResidualVariant variant = ResidualVariant::Plain;
    Tensor multiplier;      // fixup: learnable scalar, shape [1], init 1
    double alpha = 1.0;     // nf: fixed positive scalar
    double beta_l = 1.0;    // nf: fixed positive scalar
};

struct Layer {
    std::variant<LinearLayer, ConvLayer, PoolLayer, ReluLayer, FlattenLayer,
                 DropoutLayer, BatchNormLayer, ResidualBlock>
        v;
};

enum class Mode { Train, Eval };

// --- forward/backward caches ---

struct LayerCache;

struct LinearCache {
    Tensor input;
};
struct ConvCache {
    Tensor input;
};
struct PoolCache {
    Shape in_shape;
    Shape out_shape;
    std::vector<std::size_t> argmax;  // max pooling: flat input index per output
};
struct ReluCache {
    Tensor input;
};
struct FlattenCache {
    Shape in_shape;
};
struct DropoutCache {
    Tensor mask;  // empty => identity (eval or rate 0)
};
struct BatchNormCache {
    Mode mode = Mode::Eval;
    Tensor input;
    Tensor mean;  // statistics used for normalization
    Tensor var;
};
struct ResidualCache {
    std::vector<LayerCache> branch;
    Tensor branch_input;   // what the branch saw (x, or x/beta_l)
    Tensor branch_output;  // G(branch_input)
};

struct LayerCache {
    std::variant<std::monostate, LinearCache, ConvCache, PoolCache, ReluCache,
                 FlattenCache, DropoutCache, BatchNormCache, ResidualCache>
        v;
};

// Observation hooks into a forward pass; on_relu_pre sees every ReLU
// pre-activation tensor in canonical traversal order (residual branches
// included). Used for activation-pattern extraction.
struct ForwardHooks {
    std::function<void(const Tensor& pre_activation)> on_relu_pre;
};

struct ForwardCtx {
    Mode mode = Mode::Eval;
    LayerCache* cache = nullptr;        // set when a backward pass will follow
    Rng* rng = nullptr;                 // needed for dropout in train mode
    const ForwardHooks* hooks = nullptr;
};

// Forward one layer on a batched input ([B,features] or [B,C,H,W]).
Tensor layer_forward(const Layer& layer, const Tensor& x, const ForwardCtx& ctx);

// Backward one layer. Returns the input gradient; appends this layer's
// trainable-parameter gradients (same order as collect_trainable_params)
// to *param_grads when non-null.
Tensor layer_backward(const Layer& layer, const LayerCache& cache,
                      const Tensor& upstream, std::vector<Tensor>* param_grads);

// Trainable parameters in declaration order (residual branch params first,
// then the fixup multiplier). BatchNorm running statistics are state, not
// trainable, and are excluded here.
void collect_trainable_params(Layer& layer, std::vector<Tensor*>& out);
// All serializable tensors, including BatchNorm running statistics.
void collect_state_tensors(Layer& layer, std::vector<Tensor*>& out);
void collect_state_tensors(const Layer& layer, std::vector<const Tensor*>& out);

// True when no layer in the (sub)tree carries a bias parameter or a
// batch-normalization transform.
bool is_zero_bias(const Layer& layer);

// Number of ReLU pre-activation sites for an input of the given
// single-sample shape. Runs a dry forward on a zero input.
std::size_t count_relu_sites(const std::vector<Layer>& layers, const Shape& input_shape);

// Fixup initialization over a whole layer stack: the last weight layer of
// every fixup residual branch and the final classification layer are zeroed;
// other branch weight layers get He fan-in init scaled by L^(-1/(2m-2));
// branch multipliers reset to 1.
void fixup_initialize(std::vector<Layer>& layers, std::size_t block_count,
                      std::size_t layers_per_branch, Rng& rng);

struct BnWitnessReport {
    Tensor bn_of_scaled;   // bn(s*x)
    Tensor scaled_bn;      // s*bn(x)
    double max_abs_difference = 0.0;
};

// Evaluates both sides of the batch-norm scalar-associativity inequality in
// eval mode. Throws DegenerateWitness when the two sides coincide (the
// mu=0, beta=0 family), since such inputs say nothing.
BnWitnessReport bn_scalar_break_witness(const BatchNormLayer& layer,
                                        const Tensor& x, double s);

// He fan-in initialization for Linear/Conv weight tensors.
void he_init(Tensor& weights, std::size_t fan_in, Rng& rng);

}  // namespace zbnn

#endif  // ZBNN_LAYERS_HPP
