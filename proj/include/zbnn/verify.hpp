#ifndef ZBNN_VERIFY_HPP
#define ZBNN_VERIFY_HPP

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "zbnn/datasets.hpp"
#include "zbnn/network.hpp"

namespace zbnn {

// Per-ReLU-site activation pattern in canonical traversal order. A site is
// activated (bit 1) when its pre-activation is strictly positive; exactly 0
// counts as deactivated.
struct NAP {
    std::vector<std::uint8_t> bits;

    std::size_t site_count() const { return bits.size(); }
    bool operator==(const NAP& o) const { return bits == o.bits; }
    bool operator!=(const NAP& o) const { return bits != o.bits; }
    std::uint64_t digest() const;
    std::string to_string() const;  // '0'/'1' per site
};

NAP extract_nap(const Network& net, const Tensor& x);

// NAP plus the smallest |pre-activation| seen, for boundary guards.
struct NapWithMargin {
    NAP nap;
    double min_abs_preactivation = 0.0;
};
NapWithMargin extract_nap_with_margin(const Network& net, const Tensor& x);

enum class Verdict { Certified, Falsified, Inapplicable };

const char* verdict_name(Verdict v);

struct Certificate {
    std::string kind;  // "directional" | "interpolation" | "convex"
    std::uint64_t network_digest = 0;
    Verdict verdict = Verdict::Inapplicable;
    std::string reason;  // set for falsified/inapplicable
    std::size_t predicted_class = 0;
    std::vector<std::uint64_t> witness_digests;
    // parameters, by kind
    std::vector<double> scalars;
    std::size_t lambda_count = 0;
    std::size_t sample_count = 0;
    std::uint64_t sample_seed = 0;
    std::vector<std::string> evidence;
};

std::string certificate_to_json(const Certificate& c);

// Lemma-style directional check: prediction unchanged under every positive
// scalar in `scalars`. Non-zero-bias networks yield verdict inapplicable.
Certificate certify_directional(const Network& net, const Tensor& x,
                                const std::vector<double>& scalars);

// Interpolation check over an inclusive lambda grid of `lambda_count` points.
// Hypotheses (same prediction, same NAP at the endpoints) failing yields
// inapplicable, never falsified.
Certificate certify_interpolation(const Network& net, const Tensor& x1,
                                  const Tensor& x2, std::size_t lambda_count);

// Convex-hull check: `samples` flat-simplex combinations of the vertices.
Certificate certify_convex(const Network& net, const std::vector<Tensor>& vertices,
                           std::size_t samples, Rng& rng);

struct PairSearchResult {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // dataset indices
    std::map<std::size_t, std::size_t> group_size_histogram;  // size -> #groups
    std::size_t group_count = 0;
};

// Groups dataset inputs by exact NAP and returns up to `limit` within-group
// pairs, optionally restricted to pairs with equal predictions.
PairSearchResult search_same_nap_pairs(const Network& net, const LabeledDataset& ds,
                                       bool same_class_required, std::size_t limit);

struct FairnessReport {
    Tensor distribution;  // softmax(logits(0))
    double max_deviation = 0.0;  // from 1/|C|
    double entropy = 0.0;
};

FairnessReport fairness_zero_image(const Network& net);
std::string fairness_to_json(const FairnessReport& report, const Network& net);

std::uint64_t tensor_digest(const Tensor& t);

}  // namespace zbnn

#endif  // ZBNN_VERIFY_HPP
