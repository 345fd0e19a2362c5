#include "zbnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "zbnn/version.hpp"

namespace zbnn {

using nlohmann::json;

CrossEntropyResult cross_entropy(const Tensor& logits,
                                 const std::vector<std::size_t>& labels) {
    if (logits.rank() != 2)
        throw ShapeMismatch("cross_entropy expects [B,C] logits, got " +
                            logits.shape().str());
    const std::size_t B = logits.dim(0), C = logits.dim(1);
    if (labels.size() != B)
        throw ShapeMismatch("cross_entropy batch size " + std::to_string(B) +
                            " vs " + std::to_string(labels.size()) + " labels");
    for (std::size_t label : labels)
        if (label >= C)
            throw InvalidLabel("label " + std::to_string(label) +
                               " out of range for " + std::to_string(C) + " classes");

    CrossEntropyResult r;
    r.grad = Tensor(logits.shape());
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const double* z = logits.data() + b * C;
        double mx = z[0];
        for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, z[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < C; ++c) sum += std::exp(z[c] - mx);
        const double log_sum = std::log(sum) + mx;
        loss += log_sum - z[labels[b]];
        for (std::size_t c = 0; c < C; ++c) {
            const double p = std::exp(z[c] - log_sum);
            r.grad[b * C + c] = (p - (c == labels[b] ? 1.0 : 0.0)) /
                                static_cast<double>(B);
        }
    }
    r.loss = loss / static_cast<double>(B);
    return r;
}

Tensor scalar_augment(const Tensor& batch, const std::vector<double>& scalars,
                      Rng& rng) {
    for (double s : scalars)
        if (s <= 0.0) throw InvalidConfig("augmentation scalars must be positive");
    if (scalars.empty()) return batch;
    const std::size_t B = batch.dim(0);
    const std::size_t inner = batch.size() / B;
    Tensor out = batch;
    for (std::size_t b = 0; b < B; ++b) {
        const double s = scalars[rng.uniform_index(scalars.size())];
        double* row = out.data() + b * inner;
        for (std::size_t i = 0; i < inner; ++i) row[i] *= s;
    }
    return out;
}

namespace {

// gathers dataset rows into a batch tensor shaped for the network input
Tensor gather_batch(const LabeledDataset& ds, const std::vector<std::size_t>& order,
                    std::size_t begin, std::size_t end, const Shape& input_shape) {
    const std::size_t d = ds.rows * ds.cols;
    const std::size_t B = end - begin;
    std::vector<double> data(B * d);
    for (std::size_t i = 0; i < B; ++i) {
        const std::size_t src = order[begin + i];
        std::copy(ds.inputs.data() + src * d, ds.inputs.data() + (src + 1) * d,
                  data.begin() + i * d);
    }
    std::vector<std::size_t> dims{B};
    for (std::size_t x : input_shape.dims) dims.push_back(x);
    return Tensor(Shape{B, d}, std::move(data)).reshaped(Shape(dims));
}

struct OptimizerState {
    // one slot per trainable tensor
    std::vector<Tensor> first;   // sgd velocity / adadelta E[g^2]
    std::vector<Tensor> second;  // adadelta E[dx^2]
};

void apply_update(const TrainConfig& cfg, std::vector<Tensor*>& params,
                  std::vector<Tensor>& grads, OptimizerState& state) {
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = *params[p];
        Tensor& g = grads[p];
        if (cfg.weight_decay != 0.0)
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += cfg.weight_decay * theta[i];
        if (cfg.optimizer == Optimizer::SgdMomentum) {
            Tensor& v = state.first[p];
            for (std::size_t i = 0; i < g.size(); ++i) {
                v[i] = cfg.momentum * v[i] + g[i];
                theta[i] -= cfg.learning_rate * v[i];
            }
        } else {
            Tensor& acc_g = state.first[p];
            Tensor& acc_dx = state.second[p];
            for (std::size_t i = 0; i < g.size(); ++i) {
                acc_g[i] = cfg.rho * acc_g[i] + (1.0 - cfg.rho) * g[i] * g[i];
                const double dx = g[i] * std::sqrt(acc_dx[i] + cfg.eps) /
                                  std::sqrt(acc_g[i] + cfg.eps);
                acc_dx[i] = cfg.rho * acc_dx[i] + (1.0 - cfg.rho) * dx * dx;
                theta[i] -= cfg.learning_rate * dx;
            }
        }
    }
}

void validate_config(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw InvalidConfig("epochs must be >= 1");
    if (cfg.batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
    if (cfg.learning_rate < 0.0) throw InvalidConfig("learning_rate must be >= 0");
    for (double s : cfg.scalar_augmentation)
        if (s <= 0.0) throw InvalidConfig("augmentation scalars must be positive");
}

}  // namespace

double evaluate_accuracy(const Network& net, const LabeledDataset& ds) {
    const std::size_t N = ds.size();
    if (N == 0) return 0.0;
    const std::size_t chunk = 1024;
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < N; begin += chunk) {
        const std::size_t end = std::min(N, begin + chunk);
        const Tensor batch = gather_batch(ds, order, begin, end, net.input_shape);
        const Tensor out = logits_batch(net, batch);
        const std::size_t C = net.class_count;
        for (std::size_t b = 0; b < end - begin; ++b) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < C; ++c)
                if (out[b * C + c] > out[b * C + best]) best = c;
            if (best == ds.labels[begin + b]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(N);
}

TrainRun train(Network& net, const LabeledDataset& train_ds,
               const LabeledDataset& test_ds, const TrainConfig& config) {
    validate_config(config);
    validate(net);
    const std::size_t d = train_ds.rows * train_ds.cols;
    if (d != net.input_shape.count())
        throw ShapeMismatch("dataset sample size " + std::to_string(d) +
                            " vs network input " + net.input_shape.str());

    const auto t0 = std::chrono::steady_clock::now();

    std::vector<Tensor*> params;
    for (Layer& l : net.layers) collect_trainable_params(l, params);

    OptimizerState state;
    for (Tensor* p : params) {
        state.first.emplace_back(p->shape());
        state.second.emplace_back(p->shape());
    }

    Rng shuffle_rng = Rng(config.seed).fork(0x5u);
    Rng augment_rng = Rng(config.seed).fork(0x6u);
    Rng dropout_rng = Rng(config.seed).fork(0x7u);

    TrainRun run;
    run.config = config;

    const std::size_t N = train_ds.size();
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        // seeded Fisher-Yates, identical for identically-seeded twins
        for (std::size_t i = N; i-- > 1;) {
            const std::size_t j = shuffle_rng.uniform_index(i + 1);
            std::swap(order[i], order[j]);
        }

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t begin = 0; begin < N; begin += config.batch_size) {
            const std::size_t end = std::min(N, begin + config.batch_size);
            Tensor batch = gather_batch(train_ds, order, begin, end, net.input_shape);
            batch = scalar_augment(batch, config.scalar_augmentation, augment_rng);

            std::vector<std::size_t> labels(end - begin);
            for (std::size_t i = 0; i < labels.size(); ++i)
                labels[i] = train_ds.labels[order[begin + i]];

            std::vector<LayerCache> caches(net.layers.size());
            Tensor x = batch;
            for (std::size_t i = 0; i < net.layers.size(); ++i) {
                ForwardCtx ctx{Mode::Train, &caches[i], &dropout_rng, nullptr};
                x = layer_forward(net.layers[i], x, ctx);
            }

            const CrossEntropyResult ce = cross_entropy(x, labels);
            if (!std::isfinite(ce.loss))
                throw NumericalError("training loss is not finite at epoch " +
                                     std::to_string(epoch));
            epoch_loss += ce.loss * static_cast<double>(end - begin);
            seen += end - begin;

            // backward in reverse, then reassemble gradients in forward order
            std::vector<std::vector<Tensor>> per_layer(net.layers.size());
            Tensor g = ce.grad;
            for (std::size_t i = net.layers.size(); i-- > 0;)
                g = layer_backward(net.layers[i], caches[i], g, &per_layer[i]);
            std::vector<Tensor> grads;
            grads.reserve(params.size());
            for (auto& list : per_layer)
                for (auto& t : list) grads.push_back(std::move(t));

            apply_update(config, params, grads, state);
        }

        run.train_loss.push_back(epoch_loss / static_cast<double>(seen));
        run.test_accuracy.push_back(evaluate_accuracy(net, test_ds));
    }

    run.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

std::string train_run_to_json(const TrainRun& run) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["config"] = {
        {"epochs", run.config.epochs},
        {"batch_size", run.config.batch_size},
        {"learning_rate", run.config.learning_rate},
        {"optimizer",
         run.config.optimizer == Optimizer::Adadelta ? "adadelta" : "sgd_momentum"},
        {"momentum", run.config.momentum},
        {"rho", run.config.rho},
        {"eps", run.config.eps},
        {"seed", std::to_string(run.config.seed)},
        {"scalar_augmentation", run.config.scalar_augmentation},
        {"weight_decay", run.config.weight_decay},
    };
    j["train_loss"] = run.train_loss;
    j["test_accuracy"] = run.test_accuracy;
    j["wall_seconds"] = run.wall_seconds;
    j["checkpoint"] = run.checkpoint_path;
    return j.dump(2);
}

}  // namespace zbnn
