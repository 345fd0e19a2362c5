#ifndef ZBNN_TRAINING_HPP
#define ZBNN_TRAINING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "zbnn/datasets.hpp"
#include "zbnn/network.hpp"

namespace zbnn {

enum class Optimizer { SgdMomentum, Adadelta };

struct TrainConfig {
    std::size_t epochs = 1;
    std::size_t batch_size = 1;
    double learning_rate = 0.01;
    Optimizer optimizer = Optimizer::Adadelta;
    double momentum = 0.9;  // sgd
    double rho = 0.9;       // adadelta
    double eps = 1e-6;      // adadelta
    std::uint64_t seed = 0;
    std::vector<double> scalar_augmentation;  // empty = identity only
    double weight_decay = 0.0;
};

struct TrainRun {
    TrainConfig config;
    std::vector<double> train_loss;     // one entry per epoch
    std::vector<double> test_accuracy;  // one entry per epoch
    double wall_seconds = 0.0;
    std::string checkpoint_path;
};

struct CrossEntropyResult {
    double loss = 0.0;
    Tensor grad;  // [B, C]
};

// mean over the batch of -log softmax(logits)[label]
CrossEntropyResult cross_entropy(const Tensor& logits,
                                 const std::vector<std::size_t>& labels);

// Multiplies every sample of a batch by a scalar drawn uniformly from
// `scalars`; an empty list leaves the batch unchanged.
Tensor scalar_augment(const Tensor& batch, const std::vector<double>& scalars,
                      Rng& rng);

// Cross-entropy training; parameters are updated in place. Deterministic
// given (config, seed, dataset): init, shuffle and augmentation streams all
// derive from config.seed.
TrainRun train(Network& net, const LabeledDataset& train_ds,
               const LabeledDataset& test_ds, const TrainConfig& config);

// fraction of correctly predicted samples (argmax, lowest-index tie-break)
double evaluate_accuracy(const Network& net, const LabeledDataset& ds);

std::string train_run_to_json(const TrainRun& run);

}  // namespace zbnn

#endif  // ZBNN_TRAINING_HPP
