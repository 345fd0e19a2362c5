#include "zbnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace zbnn {

namespace {

// parallel loop over independent work items (used for per-sample work);
// honors the global exec mode
template <typename F>
void batch_parallel(std::size_t n, F&& fn) {
    if (exec::mode() == exec::Mode::Parallel) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            fn(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < n; ++i) fn(i);
    }
}

void require_rank(const Tensor& x, std::size_t rank, const char* who) {
    if (x.rank() != rank)
        throw ShapeMismatch(std::string(who) + " expects rank-" +
                            std::to_string(rank) + " input, got " +
                            x.shape().str());
}

// channel extent and per-channel group geometry for BN inputs
struct ChannelView {
    std::size_t channels;
    std::size_t inner;  // elements per (sample, channel)
    std::size_t batch;
};

ChannelView channel_view(const Tensor& x) {
    if (x.rank() == 2) return {x.dim(1), 1, x.dim(0)};
    if (x.rank() == 4) return {x.dim(1), x.dim(2) * x.dim(3), x.dim(0)};
    throw ShapeMismatch("batch norm expects [B,F] or [B,C,H,W], got " +
                        x.shape().str());
}

std::size_t channel_of(const ChannelView& cv, std::size_t flat) {
    return (flat / cv.inner) % cv.channels;
}

Tensor linear_forward(const LinearLayer& l, const Tensor& x) {
    require_rank(x, 2, "linear");
    if (x.dim(1) != l.weights.dim(1))
        throw ShapeMismatch("linear input " + x.shape().str() + " vs weights " +
                            l.weights.shape().str());
    Tensor y = matmul_nt(x, l.weights);
    if (l.bias) {
        const std::size_t B = y.dim(0), out = y.dim(1);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t o = 0; o < out; ++o) y[b * out + o] += (*l.bias)[o];
    }
    return y;
}

Tensor conv_forward(const ConvLayer& l, const Tensor& x) {
    require_rank(x, 4, "conv");
    const std::size_t B = x.dim(0);
    const std::size_t C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (C != l.kernel.dim(1))
        throw ShapeMismatch("conv channels disagree: input " + x.shape().str() +
                            " kernel " + l.kernel.shape().str());
    if (l.stride == 0) throw InvalidConfig("conv stride must be >= 1");
    const std::size_t K = l.kernel.dim(0), kh = l.kernel.dim(2), kw = l.kernel.dim(3);
    if (kh > H + 2 * l.padding || kw > W + 2 * l.padding)
        throw ShapeMismatch("conv kernel larger than padded input");
    const std::size_t Ho = (H + 2 * l.padding - kh) / l.stride + 1;
    const std::size_t Wo = (W + 2 * l.padding - kw) / l.stride + 1;
    Tensor y(Shape{B, K, Ho, Wo});
    batch_parallel(B, [&](std::size_t b) {
        kernels::serial::xcorr2d(x.data() + b * C * H * W, l.kernel.data(),
                                 y.data() + b * K * Ho * Wo, C, H, W, K, kh, kw,
                                 l.stride, l.stride, l.padding, l.padding, Ho, Wo);
        if (l.bias) {
            double* out = y.data() + b * K * Ho * Wo;
            for (std::size_t k = 0; k < K; ++k) {
                const double bk = (*l.bias)[k];
                for (std::size_t i = 0; i < Ho * Wo; ++i) out[k * Ho * Wo + i] += bk;
            }
        }
    });
    return y;
}

Tensor pool_forward(const PoolLayer& l, const Tensor& x, PoolCache* cache) {
    require_rank(x, 4, "pool");
    if (l.window < 1) throw InvalidConfig("pool window must be >= 1");
    if (l.stride < 1) throw InvalidConfig("pool stride must be >= 1");
    const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (l.window > H || l.window > W)
        throw ShapeMismatch("pool window larger than input " + x.shape().str());
    const std::size_t Ho = (H - l.window) / l.stride + 1;
    const std::size_t Wo = (W - l.window) / l.stride + 1;
    Tensor y(Shape{B, C, Ho, Wo});
    if (cache) {
        cache->in_shape = x.shape();
        cache->out_shape = y.shape();
        if (l.kind == PoolKind::Max) cache->argmax.assign(y.size(), 0);
    }
    batch_parallel(B * C, [&](std::size_t bc) {
        const double* in = x.data() + bc * H * W;
        double* out = y.data() + bc * Ho * Wo;
        for (std::size_t oy = 0; oy < Ho; ++oy) {
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                const std::size_t y0 = oy * l.stride, x0 = ox * l.stride;
                if (l.kind == PoolKind::Max) {
                    double best = in[y0 * W + x0];
                    std::size_t best_at = y0 * W + x0;
                    for (std::size_t dy = 0; dy < l.window; ++dy)
                        for (std::size_t dx = 0; dx < l.window; ++dx) {
                            const std::size_t at = (y0 + dy) * W + (x0 + dx);
                            if (in[at] > best) {
                                best = in[at];
                                best_at = at;
                            }
                        }
                    out[oy * Wo + ox] = best;
                    if (cache && l.kind == PoolKind::Max)
                        cache->argmax[bc * Ho * Wo + oy * Wo + ox] =
                            bc * H * W + best_at;
                } else {
                    double acc = 0.0;
                    for (std::size_t dy = 0; dy < l.window; ++dy)
                        for (std::size_t dx = 0; dx < l.window; ++dx)
                            acc += in[(y0 + dy) * W + (x0 + dx)];
                    out[oy * Wo + ox] = acc / static_cast<double>(l.window * l.window);
                }
            }
        }
    });
    return y;
}

Tensor bn_forward(BatchNormLayer& l, const Tensor& x, Mode mode,
                  BatchNormCache* cache) {
    const ChannelView cv = channel_view(x);
    if (cv.channels != l.gamma.size())
        throw ShapeMismatch("batch norm channels " + std::to_string(cv.channels) +
                            " vs gamma " + l.gamma.shape().str());
    Tensor mean, var;
    if (mode == Mode::Train) {
        mean = Tensor(Shape{cv.channels});
        var = Tensor(Shape{cv.channels});
        const double n = static_cast<double>(cv.batch * cv.inner);
        for (std::size_t i = 0; i < x.size(); ++i) mean[channel_of(cv, i)] += x[i];
        for (std::size_t c = 0; c < cv.channels; ++c) mean[c] /= n;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const std::size_t c = channel_of(cv, i);
            const double d = x[i] - mean[c];
            var[c] += d * d;
        }
        for (std::size_t c = 0; c < cv.channels; ++c) var[c] /= n;
        // running statistics, fixed momentum
        for (std::size_t c = 0; c < cv.channels; ++c) {
            l.running_mean[c] = 0.9 * l.running_mean[c] + 0.1 * mean[c];
            l.running_var[c] = 0.9 * l.running_var[c] + 0.1 * var[c];
        }
    } else {
        mean = l.running_mean;
        var = l.running_var;
    }
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t c = channel_of(cv, i);
        y[i] = l.gamma[c] * (x[i] - mean[c]) / std::sqrt(var[c] + l.epsilon) +
               l.beta[c];
    }
    if (cache) {
        cache->mode = mode;
        cache->input = x;
        cache->mean = mean;
        cache->var = var;
    }
    return y;
}

}  // namespace

Tensor layer_forward(const Layer& layer, const Tensor& x, const ForwardCtx& ctx) {
    return std::visit(
        [&](auto const& l) -> Tensor {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, LinearLayer>) {
                if (ctx.cache) ctx.cache->v = LinearCache{x};
                return linear_forward(l, x);
            } else if constexpr (std::is_same_v<T, ConvLayer>) {
                if (ctx.cache) ctx.cache->v = ConvCache{x};
                return conv_forward(l, x);
            } else if constexpr (std::is_same_v<T, PoolLayer>) {
                PoolCache pc;
                Tensor y = pool_forward(l, x, ctx.cache ? &pc : nullptr);
                if (ctx.cache) ctx.cache->v = std::move(pc);
                return y;
            } else if constexpr (std::is_same_v<T, ReluLayer>) {
                if (ctx.hooks && ctx.hooks->on_relu_pre) ctx.hooks->on_relu_pre(x);
                if (ctx.cache) ctx.cache->v = ReluCache{x};
                Tensor y(x.shape());
                for (std::size_t i = 0; i < x.size(); ++i)
                    y[i] = x[i] > 0.0 ? x[i] : 0.0;
                return y;
            } else if constexpr (std::is_same_v<T, FlattenLayer>) {
                if (x.rank() < 2) throw ShapeMismatch("flatten expects batched input");
                if (ctx.cache) ctx.cache->v = FlattenCache{x.shape()};
                std::size_t inner = 1;
                for (std::size_t i = 1; i < x.rank(); ++i) inner *= x.dim(i);
                return x.reshaped(Shape{x.dim(0), inner});
            } else if constexpr (std::is_same_v<T, DropoutLayer>) {
                if (ctx.mode == Mode::Eval || l.rate == 0.0) {
                    if (ctx.cache) ctx.cache->v = DropoutCache{};
                    return x;
                }
                if (!ctx.rng)
                    throw InvalidConfig("dropout in train mode needs an rng");
                Tensor mask(x.shape());
                const double keep = 1.0 - l.rate;
                for (std::size_t i = 0; i < mask.size(); ++i)
                    mask[i] = ctx.rng->uniform() < keep ? 1.0 / keep : 0.0;
                Tensor y(x.shape());
                for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask[i];
                if (ctx.cache) ctx.cache->v = DropoutCache{std::move(mask)};
                return y;
            } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                BatchNormCache bc;
                // batch statistics mutate the running stats in train mode
                auto& mut = const_cast<BatchNormLayer&>(l);
                Tensor y = bn_forward(mut, x, ctx.mode, ctx.cache ? &bc : nullptr);
                if (ctx.cache) ctx.cache->v = std::move(bc);
                return y;
            } else {  // ResidualBlock
                const ResidualBlock& rb = l;
                Tensor branch_in = x;
                if (rb.variant == ResidualVariant::Nf) {
                    if (rb.alpha <= 0.0 || rb.beta_l <= 0.0)
                        throw InvalidConfig("nf residual needs alpha > 0 and beta_l > 0");
                    branch_in = x.scaled(1.0 / rb.beta_l);
                }
                ResidualCache rc;
                if (ctx.cache) {
                    rc.branch.resize(rb.branch.size());
                    rc.branch_input = branch_in;
                }
                Tensor g = branch_in;
                for (std::size_t i = 0; i < rb.branch.size(); ++i) {
                    ForwardCtx sub{ctx.mode, ctx.cache ? &rc.branch[i] : nullptr,
                                   ctx.rng, ctx.hooks};
                    g = layer_forward(rb.branch[i], g, sub);
                }
                if (g.shape() != x.shape())
                    throw ShapeMismatch("residual branch output " + g.shape().str() +
                                        " vs input " + x.shape().str());
                if (ctx.cache) rc.branch_output = g;
                double scale = 1.0;
                if (rb.variant == ResidualVariant::Fixup) scale = rb.multiplier[0];
                if (rb.variant == ResidualVariant::Nf) scale = rb.alpha;
                Tensor y(x.shape());
                for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + scale * g[i];
                if (ctx.cache) ctx.cache->v = std::move(rc);
                return y;
            }
        },
        layer.v);
}

Tensor layer_backward(const Layer& layer, const LayerCache& cache,
                      const Tensor& upstream, std::vector<Tensor>* param_grads) {
    return std::visit(
        [&](auto const& l) -> Tensor {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, LinearLayer>) {
                const auto& c = std::get<LinearCache>(cache.v);
                Tensor dx = matmul(upstream, l.weights);
                if (param_grads) {
                    param_grads->push_back(matmul_tn(upstream, c.input));
                    if (l.bias) {
                        const std::size_t B = upstream.dim(0), out = upstream.dim(1);
                        Tensor db(Shape{out});
                        for (std::size_t b = 0; b < B; ++b)
                            for (std::size_t o = 0; o < out; ++o)
                                db[o] += upstream[b * out + o];
                        param_grads->push_back(std::move(db));
                    }
                }
                return dx;
            } else if constexpr (std::is_same_v<T, ConvLayer>) {
                const auto& c = std::get<ConvCache>(cache.v);
                const Tensor& x = c.input;
                const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
                const std::size_t K = l.kernel.dim(0), kh = l.kernel.dim(2),
                                  kw = l.kernel.dim(3);
                const std::size_t Ho = upstream.dim(2), Wo = upstream.dim(3);
                Tensor dx(x.shape());
                std::vector<Tensor> dker_per(B, Tensor(l.kernel.shape()));
                batch_parallel(B, [&](std::size_t b) {
                    kernels::serial::xcorr2d_input_grad(
                        upstream.data() + b * K * Ho * Wo, l.kernel.data(),
                        dx.data() + b * C * H * W, C, H, W, K, kh, kw, l.stride,
                        l.stride, l.padding, l.padding, Ho, Wo);
                    kernels::serial::xcorr2d_kernel_grad(
                        upstream.data() + b * K * Ho * Wo, x.data() + b * C * H * W,
                        dker_per[b].data(), C, H, W, K, kh, kw, l.stride, l.stride,
                        l.padding, l.padding, Ho, Wo);
                });
                if (param_grads) {
                    Tensor dker(l.kernel.shape());
                    for (std::size_t b = 0; b < B; ++b) dker.add_inplace(dker_per[b]);
                    param_grads->push_back(std::move(dker));
                    if (l.bias) {
                        Tensor db(Shape{K});
                        for (std::size_t b = 0; b < B; ++b)
                            for (std::size_t k = 0; k < K; ++k)
                                for (std::size_t i = 0; i < Ho * Wo; ++i)
                                    db[k] += upstream[(b * K + k) * Ho * Wo + i];
                        param_grads->push_back(std::move(db));
                    }
                }
                return dx;
            } else if constexpr (std::is_same_v<T, PoolLayer>) {
                const auto& c = std::get<PoolCache>(cache.v);
                Tensor dx(c.in_shape);
                const std::size_t B = c.in_shape[0], C = c.in_shape[1],
                                  H = c.in_shape[2], W = c.in_shape[3];
                const std::size_t Ho = c.out_shape[2], Wo = c.out_shape[3];
                batch_parallel(B * C, [&](std::size_t bc) {
                    for (std::size_t o = 0; o < Ho * Wo; ++o) {
                        const std::size_t oi = bc * Ho * Wo + o;
                        if (l.kind == PoolKind::Max) {
                            dx[c.argmax[oi]] += upstream[oi];
                        } else {
                            const std::size_t oy = o / Wo, ox = o % Wo;
                            const double share =
                                upstream[oi] / static_cast<double>(l.window * l.window);
                            for (std::size_t dy = 0; dy < l.window; ++dy)
                                for (std::size_t dx_ = 0; dx_ < l.window; ++dx_)
                                    dx[bc * H * W + (oy * l.stride + dy) * W +
                                       (ox * l.stride + dx_)] += share;
                        }
                    }
                });
                return dx;
            } else if constexpr (std::is_same_v<T, ReluLayer>) {
                const auto& c = std::get<ReluCache>(cache.v);
                Tensor dx(upstream.shape());
                for (std::size_t i = 0; i < dx.size(); ++i)
                    dx[i] = c.input[i] > 0.0 ? upstream[i] : 0.0;
                return dx;
            } else if constexpr (std::is_same_v<T, FlattenLayer>) {
                const auto& c = std::get<FlattenCache>(cache.v);
                return upstream.reshaped(c.in_shape);
            } else if constexpr (std::is_same_v<T, DropoutLayer>) {
                const auto& c = std::get<DropoutCache>(cache.v);
                if (c.mask.size() == 0) return upstream;
                Tensor dx(upstream.shape());
                for (std::size_t i = 0; i < dx.size(); ++i)
                    dx[i] = upstream[i] * c.mask[i];
                return dx;
            } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                const auto& c = std::get<BatchNormCache>(cache.v);
                const ChannelView cv = channel_view(c.input);
                const std::size_t n = cv.batch * cv.inner;
                Tensor dgamma(Shape{cv.channels}), dbeta(Shape{cv.channels});
                Tensor dx(upstream.shape());
                std::vector<double> inv(cv.channels);
                for (std::size_t ch = 0; ch < cv.channels; ++ch)
                    inv[ch] = 1.0 / std::sqrt(c.var[ch] + l.epsilon);
                // dgamma/dbeta are shared by both modes
                for (std::size_t i = 0; i < upstream.size(); ++i) {
                    const std::size_t ch = channel_of(cv, i);
                    const double xhat = (c.input[i] - c.mean[ch]) * inv[ch];
                    dgamma[ch] += upstream[i] * xhat;
                    dbeta[ch] += upstream[i];
                }
                if (c.mode == Mode::Eval) {
                    for (std::size_t i = 0; i < upstream.size(); ++i) {
                        const std::size_t ch = channel_of(cv, i);
                        dx[i] = upstream[i] * l.gamma[ch] * inv[ch];
                    }
                } else {
                    // batch statistics participate in the gradient
                    Tensor sum_dxhat(Shape{cv.channels}), sum_dxhat_xhat(Shape{cv.channels});
                    for (std::size_t i = 0; i < upstream.size(); ++i) {
                        const std::size_t ch = channel_of(cv, i);
                        const double dxhat = upstream[i] * l.gamma[ch];
                        const double xhat = (c.input[i] - c.mean[ch]) * inv[ch];
                        sum_dxhat[ch] += dxhat;
                        sum_dxhat_xhat[ch] += dxhat * xhat;
                    }
                    const double dn = static_cast<double>(n);
                    for (std::size_t i = 0; i < upstream.size(); ++i) {
                        const std::size_t ch = channel_of(cv, i);
                        const double dxhat = upstream[i] * l.gamma[ch];
                        const double xhat = (c.input[i] - c.mean[ch]) * inv[ch];
                        dx[i] = inv[ch] / dn *
                                (dn * dxhat - sum_dxhat[ch] - xhat * sum_dxhat_xhat[ch]);
                    }
                }
                if (param_grads) {
                    param_grads->push_back(std::move(dgamma));
                    param_grads->push_back(std::move(dbeta));
                }
                return dx;
            } else {  // ResidualBlock
                const ResidualBlock& rb = l;
                const auto& c = std::get<ResidualCache>(cache.v);
                double scale = 1.0;
                if (rb.variant == ResidualVariant::Fixup) scale = rb.multiplier[0];
                if (rb.variant == ResidualVariant::Nf) scale = rb.alpha;
                Tensor g = upstream.scaled(scale);
                std::vector<std::vector<Tensor>> per_layer(rb.branch.size());
                for (std::size_t i = rb.branch.size(); i-- > 0;)
                    g = layer_backward(rb.branch[i], c.branch[i], g,
                                       param_grads ? &per_layer[i] : nullptr);
                if (rb.variant == ResidualVariant::Nf)
                    g.scale_inplace(1.0 / rb.beta_l);
                Tensor dx = upstream + g;
                if (param_grads) {
                    for (auto& grads : per_layer)
                        for (auto& t : grads) param_grads->push_back(std::move(t));
                    if (rb.variant == ResidualVariant::Fixup) {
                        Tensor dm(Shape{1});
                        for (std::size_t i = 0; i < upstream.size(); ++i)
                            dm[0] += upstream[i] * c.branch_output[i];
                        param_grads->push_back(std::move(dm));
                    }
                }
                return dx;
            }
        },
        layer.v);
}

void collect_trainable_params(Layer& layer, std::vector<Tensor*>& out) {
    std::visit(
        [&](auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, LinearLayer>) {
                out.push_back(&l.weights);
                if (l.bias) out.push_back(&*l.bias);
            } else if constexpr (std::is_same_v<T, ConvLayer>) {
                out.push_back(&l.kernel);
                if (l.bias) out.push_back(&*l.bias);
            } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                out.push_back(&l.gamma);
                out.push_back(&l.beta);
            } else if constexpr (std::is_same_v<T, ResidualBlock>) {
                for (Layer& sub : l.branch) collect_trainable_params(sub, out);
                if (l.variant == ResidualVariant::Fixup) out.push_back(&l.multiplier);
            }
        },
        layer.v);
}

void collect_state_tensors(Layer& layer, std::vector<Tensor*>& out) {
    std::visit(
        [&](auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, LinearLayer>) {
                out.push_back(&l.weights);
                if (l.bias) out.push_back(&*l.bias);
            } else if constexpr (std::is_same_v<T, ConvLayer>) {
                out.push_back(&l.kernel);
                if (l.bias) out.push_back(&*l.bias);
            } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                out.push_back(&l.gamma);
                out.push_back(&l.beta);
                out.push_back(&l.running_mean);
                out.push_back(&l.running_var);
            } else if constexpr (std::is_same_v<T, ResidualBlock>) {
                for (Layer& sub : l.branch) collect_state_tensors(sub, out);
                if (l.variant == ResidualVariant::Fixup) out.push_back(&l.multiplier);
            }
        },
        layer.v);
}

void collect_state_tensors(const Layer& layer, std::vector<const Tensor*>& out) {
    std::vector<Tensor*> tmp;
    collect_state_tensors(const_cast<Layer&>(layer), tmp);
    for (Tensor* t : tmp) out.push_back(t);
}

bool is_zero_bias(const Layer& layer) {
    return std::visit(
        [&](auto const& l) -> bool {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, LinearLayer>) {
                return !l.bias.has_value();
            } else if constexpr (std::is_same_v<T, ConvLayer>) {
                return !l.bias.has_value();
            } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                return false;
            } else if constexpr (std::is_same_v<T, ResidualBlock>) {
                for (const Layer& sub : l.branch)
                    if (!is_zero_bias(sub)) return false;
                return true;
            } else {
                return true;
            }
        },
        layer.v);
}

std::size_t count_relu_sites(const std::vector<Layer>& layers, const Shape& input_shape) {
    std::vector<std::size_t> dims{1};
    for (std::size_t d : input_shape.dims) dims.push_back(d);
    Tensor zero{Shape(dims)};
    std::size_t sites = 0;
    ForwardHooks hooks;
    hooks.on_relu_pre = [&](const Tensor& pre) { sites += pre.size(); };
    ForwardCtx ctx{Mode::Eval, nullptr, nullptr, &hooks};
    Tensor x = zero;
    for (const Layer& l : layers) x = layer_forward(l, x, ctx);
    return sites;
}

void he_init(Tensor& weights, std::size_t fan_in, Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < weights.size(); ++i)
        weights[i] = rng.normal(0.0, stddev);
}

namespace {

Tensor* weight_tensor_of(Layer& layer, std::size_t* fan_in) {
    if (auto* lin = std::get_if<LinearLayer>(&layer.v)) {
        *fan_in = lin->weights.dim(1);
        return &lin->weights;
    }
    if (auto* conv = std::get_if<ConvLayer>(&layer.v)) {
        *fan_in = conv->kernel.dim(1) * conv->kernel.dim(2) * conv->kernel.dim(3);
        return &conv->kernel;
    }
    return nullptr;
}

}  // namespace

void fixup_initialize(std::vector<Layer>& layers, std::size_t block_count,
                      std::size_t layers_per_branch, Rng& rng) {
    if (layers_per_branch < 2)
        throw InvalidConfig("fixup scaling exponent needs m >= 2");
    if (block_count < 1) throw InvalidConfig("fixup needs at least one block");
    const double factor =
        std::pow(static_cast<double>(block_count),
                 -1.0 / (2.0 * static_cast<double>(layers_per_branch) - 2.0));

    bool saw_fixup = false;
    for (Layer& layer : layers) {
        auto* rb = std::get_if<ResidualBlock>(&layer.v);
        if (!rb || rb->variant != ResidualVariant::Fixup) continue;
        saw_fixup = true;
        std::vector<std::pair<Tensor*, std::size_t>> weight_layers;
        for (Layer& sub : rb->branch) {
            std::size_t fan_in = 0;
            if (Tensor* w = weight_tensor_of(sub, &fan_in))
                weight_layers.emplace_back(w, fan_in);
        }
        if (weight_layers.empty())
            throw InvalidConfig("fixup residual branch has no weight layers");
        for (std::size_t i = 0; i + 1 < weight_layers.size(); ++i) {
            he_init(*weight_layers[i].first, weight_layers[i].second, rng);
            weight_layers[i].first->scale_inplace(factor);
        }
        Tensor* last = weight_layers.back().first;
        for (std::size_t i = 0; i < last->size(); ++i) (*last)[i] = 0.0;
        rb->multiplier = Tensor(Shape{1});
        rb->multiplier[0] = 1.0;
    }
    if (!saw_fixup)
        throw InvalidConfig("network contains no fixup residual blocks");

    // classification layer: last linear in the top-level stack
    for (std::size_t i = layers.size(); i-- > 0;) {
        if (auto* lin = std::get_if<LinearLayer>(&layers[i].v)) {
            for (std::size_t j = 0; j < lin->weights.size(); ++j)
                lin->weights[j] = 0.0;
            if (lin->bias)
                for (std::size_t j = 0; j < lin->bias->size(); ++j)
                    (*lin->bias)[j] = 0.0;
            break;
        }
    }
}

BnWitnessReport bn_scalar_break_witness(const BatchNormLayer& layer,
                                        const Tensor& x, double s) {
    if (s <= 0.0) throw InvalidConfig("witness scalar must be positive");
    const std::size_t C = layer.gamma.size();
    if (x.size() == 0 || x.size() % C != 0)
        throw ShapeMismatch("witness input size must be a multiple of the channel count");
    const std::size_t inner = x.size() / C;
    auto apply = [&](const Tensor& in) {
        Tensor out(in.shape());
        for (std::size_t i = 0; i < in.size(); ++i) {
            const std::size_t c = i / inner;
            out[i] = layer.gamma[c] * (in[i] - layer.running_mean[c]) /
                         std::sqrt(layer.running_var[c] + layer.epsilon) +
                     layer.beta[c];
        }
        return out;
    };
    BnWitnessReport report;
    report.bn_of_scaled = apply(x.scaled(s));
    report.scaled_bn = apply(x).scale_inplace(s);
    report.max_abs_difference = max_abs_diff(report.bn_of_scaled, report.scaled_bn);
    if (report.max_abs_difference <= 1e-6)
        throw DegenerateWitness("bn(s*x) and s*bn(x) coincide for this input");
    return report;
}

}  // namespace zbnn
