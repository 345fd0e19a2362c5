#ifndef ZBNN_NETWORK_HPP
#define ZBNN_NETWORK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "zbnn/layers.hpp"
#include "zbnn/tensor.hpp"

namespace zbnn {

struct Network {
    std::vector<Layer> layers;
    std::size_t class_count = 0;
    bool zero_bias = false;
    std::string name;
    Shape input_shape;  // single-sample shape, e.g. [784] or [1,28,28]

    // init provenance recorded in checkpoints
    std::string init_scheme = "he_fan_in";
    std::uint64_t init_seed = 0;
};

struct Prediction {
    std::size_t class_index = 0;
    Tensor logits;        // [C]
    Tensor distribution;  // softmax of logits, sums to 1
};

// Throws InvalidConfig when the zero_bias flag contradicts the layer stack
// (a bias field or a batch-norm layer present).
void validate(const Network& net);

// argmax with lowest-index tie-break
std::size_t argmax_lowest(const Tensor& v);

// numerically stable softmax (max subtraction)
Tensor softmax(const Tensor& logits);

// O(x) for a single sample; no final activation applied.
Tensor logits(const Network& net, const Tensor& x);
// batched variant; x is [B, ...]
Tensor logits_batch(const Network& net, const Tensor& x);
// forward with observation hooks (activation-pattern capture)
Tensor logits_hooked(const Network& net, const Tensor& x, const ForwardHooks& hooks);

Prediction predict(const Network& net, const Tensor& x);

// Initialize all weight layers with He fan-in draws from a stream seeded by
// `seed`; biases (when present) start at zero. Records provenance.
void initialize_he(Network& net, std::uint64_t seed);

// FNV-1a over all state tensors plus the name; identifies a set of weights.
std::uint64_t param_digest(const Network& net);

// number of ReLU sites of the network for its declared input shape
std::size_t relu_site_count(const Network& net);

// Checkpoint file format (extension .zbnn): magic "ZBNN", version u32 LE,
// u32 LE metadata length, UTF-8 JSON metadata, each state tensor as raw
// little-endian float64 in declaration order, trailing CRC32 of everything
// prior. Round-trips are bit-exact.
void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

std::uint32_t crc32_ieee(const unsigned char* data, std::size_t len,
                         std::uint32_t seed = 0);

}  // namespace zbnn

#endif  // ZBNN_NETWORK_HPP
