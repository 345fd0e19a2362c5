// Shared layer-level checks: finite-difference gradient verification and
// helpers for building random layers.

#ifndef ZBNN_TESTS_LAYER_CHECKS_HPP
#define ZBNN_TESTS_LAYER_CHECKS_HPP

#include "oracles.hpp"
#include "zbnn/layers.hpp"

namespace layer_checks {

inline zbnn::Tensor away_from_zero(zbnn::Shape shape, zbnn::Rng& rng,
                                   double floor = 0.05) {
    zbnn::Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double mag = rng.uniform(floor, 1.0);
        t[i] = rng.uniform() < 0.5 ? -mag : mag;
    }
    return t;
}

inline zbnn::Layer make_linear(std::size_t out, std::size_t in, bool bias,
                               zbnn::Rng& rng) {
    zbnn::LinearLayer l;
    l.weights = oracles::random_tensor(zbnn::Shape{out, in}, rng);
    if (bias) l.bias = oracles::random_tensor(zbnn::Shape{out}, rng);
    return zbnn::Layer{std::move(l)};
}

// Returns the worst absolute gap between analytic gradients (input and all
// trainable parameters) and central finite differences.
inline double gradient_gap(zbnn::Layer& layer, const zbnn::Tensor& x,
                           zbnn::Mode mode) {
    using namespace zbnn;
    Rng rng(321);
    LayerCache cache;
    ForwardCtx ctx{mode, &cache, nullptr, nullptr};
    const Tensor y0 = layer_forward(layer, x, ctx);
    const Tensor upstream = oracles::random_tensor(y0.shape(), rng);

    std::vector<Tensor> param_grads;
    const Tensor din = layer_backward(layer, cache, upstream, &param_grads);

    auto loss_at = [&](const Tensor& probe) {
        ForwardCtx eval_ctx{mode, nullptr, nullptr, nullptr};
        const Tensor y = layer_forward(layer, probe, eval_ctx);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) acc += upstream[i] * y[i];
        return acc;
    };

    double worst = max_abs_diff(din, oracles::finite_difference_grad(loss_at, x));

    std::vector<Tensor*> params;
    collect_trainable_params(layer, params);
    if (params.size() != param_grads.size()) return 1e9;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = *params[p];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double keep = theta[i];
            theta[i] = keep + 1e-5;
            const double hi = loss_at(x);
            theta[i] = keep - 1e-5;
            const double lo = loss_at(x);
            theta[i] = keep;
            worst = std::max(worst,
                             std::fabs(param_grads[p][i] - (hi - lo) / 2e-5));
        }
    }
    return worst;
}

}  // namespace layer_checks

#endif  // ZBNN_TESTS_LAYER_CHECKS_HPP
