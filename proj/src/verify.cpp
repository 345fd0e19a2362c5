#include "zbnn/verify.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include <json.hpp>

#include "zbnn/version.hpp"

namespace zbnn {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(const unsigned char* p, std::size_t n,
                    std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr const char* kNapZeroConvention =
    "pre-activation exactly 0 counts as deactivated";

}  // namespace

std::uint64_t NAP::digest() const {
    return fnv1a(bits.data(), bits.size());
}

std::string NAP::to_string() const {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) s[i] = '1';
    return s;
}

std::uint64_t tensor_digest(const Tensor& t) {
    return fnv1a(reinterpret_cast<const unsigned char*>(t.data()),
                 t.size() * sizeof(double));
}

NAP extract_nap(const Network& net, const Tensor& x) {
    NAP nap;
    ForwardHooks hooks;
    hooks.on_relu_pre = [&](const Tensor& pre) {
        for (std::size_t i = 0; i < pre.size(); ++i)
            nap.bits.push_back(pre[i] > 0.0 ? 1 : 0);
    };
    logits_hooked(net, x, hooks);
    return nap;
}

NapWithMargin extract_nap_with_margin(const Network& net, const Tensor& x) {
    NapWithMargin r;
    r.min_abs_preactivation = std::numeric_limits<double>::infinity();
    ForwardHooks hooks;
    hooks.on_relu_pre = [&](const Tensor& pre) {
        for (std::size_t i = 0; i < pre.size(); ++i) {
            r.nap.bits.push_back(pre[i] > 0.0 ? 1 : 0);
            r.min_abs_preactivation =
                std::min(r.min_abs_preactivation, std::fabs(pre[i]));
        }
    };
    logits_hooked(net, x, hooks);
    return r;
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Certified: return "certified";
        case Verdict::Falsified: return "falsified";
        default: return "inapplicable";
    }
}

std::string certificate_to_json(const Certificate& c) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = c.kind;
    j["network_digest"] = c.network_digest;
    j["verdict"] = verdict_name(c.verdict);
    j["reason"] = c.reason;
    j["predicted_class"] = c.predicted_class;
    j["witness_digests"] = c.witness_digests;
    j["nap_zero_convention"] = kNapZeroConvention;
    if (!c.scalars.empty()) j["scalars"] = c.scalars;
    if (c.lambda_count) j["lambda_count"] = c.lambda_count;
    if (c.sample_count) {
        j["sample_count"] = c.sample_count;
        j["sample_seed"] = std::to_string(c.sample_seed);
    }
    j["evidence"] = c.evidence;
    return j.dump(2);
}

Certificate certify_directional(const Network& net, const Tensor& x,
                                const std::vector<double>& scalars) {
    for (double s : scalars)
        if (s <= 0.0) throw InvalidConfig("directional scalars must be positive");

    Certificate cert;
    cert.kind = "directional";
    cert.network_digest = param_digest(net);
    cert.scalars = scalars;
    cert.witness_digests = {tensor_digest(x)};

    if (!net.zero_bias) {
        cert.verdict = Verdict::Inapplicable;
        cert.reason = "network is not zero-bias";
        return cert;
    }

    const std::size_t base = predict(net, x).class_index;
    cert.predicted_class = base;
    for (double s : scalars) {
        const std::size_t got = predict(net, x.scaled(s)).class_index;
        if (got != base) {
            cert.verdict = Verdict::Falsified;
            cert.reason = "prediction changed at s=" + std::to_string(s);
            cert.evidence.push_back("s=" + std::to_string(s) + ": class " +
                                    std::to_string(got) + " != " +
                                    std::to_string(base));
            return cert;
        }
    }
    cert.verdict = Verdict::Certified;
    cert.evidence.push_back("prediction class " + std::to_string(base) +
                            " identical across " + std::to_string(scalars.size()) +
                            " scalars");
    return cert;
}

Certificate certify_interpolation(const Network& net, const Tensor& x1,
                                  const Tensor& x2, std::size_t lambda_count) {
    if (lambda_count < 2)
        throw InvalidConfig("interpolation needs at least the two endpoints");
    if (x1.shape() != x2.shape())
        throw ShapeMismatch("interpolation endpoints " + x1.shape().str() + " vs " +
                            x2.shape().str());

    Certificate cert;
    cert.kind = "interpolation";
    cert.network_digest = param_digest(net);
    cert.lambda_count = lambda_count;
    cert.witness_digests = {tensor_digest(x1), tensor_digest(x2)};

    const std::size_t c1 = predict(net, x1).class_index;
    const std::size_t c2 = predict(net, x2).class_index;
    if (c1 != c2) {
        cert.verdict = Verdict::Inapplicable;
        cert.reason = "endpoint predictions differ: " + std::to_string(c1) +
                      " vs " + std::to_string(c2);
        return cert;
    }
    const NAP nap1 = extract_nap(net, x1);
    const NAP nap2 = extract_nap(net, x2);
    if (nap1 != nap2) {
        cert.verdict = Verdict::Inapplicable;
        cert.reason = "endpoint activation patterns differ";
        return cert;
    }

    cert.predicted_class = c1;
    for (std::size_t k = 0; k < lambda_count; ++k) {
        const double lambda =
            static_cast<double>(k) / static_cast<double>(lambda_count - 1);
        const Tensor point = lerp(x1, x2, lambda);
        const std::size_t got = predict(net, point).class_index;
        if (got != c1) {
            cert.verdict = Verdict::Falsified;
            cert.reason = "class changed at lambda=" + std::to_string(lambda);
            cert.evidence.push_back("lambda=" + std::to_string(lambda) + ": class " +
                                    std::to_string(got));
            return cert;
        }
        if (extract_nap(net, point) != nap1) {
            cert.verdict = Verdict::Falsified;
            cert.reason = "activation pattern changed at lambda=" +
                          std::to_string(lambda);
            return cert;
        }
    }
    cert.verdict = Verdict::Certified;
    cert.evidence.push_back("all " + std::to_string(lambda_count) +
                            " interpolants share class " + std::to_string(c1) +
                            " and the endpoint activation pattern");
    return cert;
}

Certificate certify_convex(const Network& net, const std::vector<Tensor>& vertices,
                           std::size_t samples, Rng& rng) {
    if (vertices.size() < 2)
        throw InvalidConfig("convex certificate needs at least 2 vertices");
    for (const Tensor& v : vertices)
        if (v.shape() != vertices[0].shape())
            throw ShapeMismatch("convex vertices have mixed shapes");

    Certificate cert;
    cert.kind = "convex";
    cert.network_digest = param_digest(net);
    cert.sample_count = samples;
    cert.sample_seed = rng.next_u64();
    Rng sample_rng(cert.sample_seed);
    for (const Tensor& v : vertices)
        cert.witness_digests.push_back(tensor_digest(v));

    const std::size_t base = predict(net, vertices[0]).class_index;
    const NAP base_nap = extract_nap(net, vertices[0]);
    for (std::size_t i = 1; i < vertices.size(); ++i) {
        if (predict(net, vertices[i]).class_index != base) {
            cert.verdict = Verdict::Inapplicable;
            cert.reason = "vertex " + std::to_string(i) + " predicts a different class";
            return cert;
        }
        if (extract_nap(net, vertices[i]) != base_nap) {
            cert.verdict = Verdict::Inapplicable;
            cert.reason = "vertex " + std::to_string(i) +
                          " has a different activation pattern";
            return cert;
        }
    }

    cert.predicted_class = base;
    const std::size_t n = vertices.size();
    std::vector<double> w(n);
    for (std::size_t s = 0; s < samples; ++s) {
        // flat Dirichlet via normalized exponentials
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double u = sample_rng.uniform();
            while (u <= 0.0) u = sample_rng.uniform();
            w[i] = -std::log(u);
            sum += w[i];
        }
        Tensor point(vertices[0].shape());
        for (std::size_t i = 0; i < n; ++i) {
            const double wi = w[i] / sum;
            for (std::size_t j = 0; j < point.size(); ++j)
                point[j] += wi * vertices[i][j];
        }
        if (predict(net, point).class_index != base) {
            cert.verdict = Verdict::Falsified;
            cert.reason = "class changed at sample " + std::to_string(s);
            return cert;
        }
        if (extract_nap(net, point) != base_nap) {
            cert.verdict = Verdict::Falsified;
            cert.reason = "activation pattern changed at sample " + std::to_string(s);
            return cert;
        }
    }
    cert.verdict = Verdict::Certified;
    cert.evidence.push_back(std::to_string(samples) + " simplex samples over " +
                            std::to_string(n) + " vertices share class " +
                            std::to_string(base));
    return cert;
}

PairSearchResult search_same_nap_pairs(const Network& net, const LabeledDataset& ds,
                                       bool same_class_required, std::size_t limit) {
    PairSearchResult result;
    std::unordered_map<std::string, std::vector<std::size_t>> groups;
    std::vector<std::size_t> predictions(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Tensor x = ds.sample(i);
        predictions[i] = predict(net, x).class_index;
        groups[extract_nap(net, x).to_string()].push_back(i);
    }
    result.group_count = groups.size();
    for (const auto& [key, members] : groups)
        result.group_size_histogram[members.size()] += 1;

    for (const auto& [key, members] : groups) {
        for (std::size_t a = 0; a < members.size() && result.pairs.size() < limit; ++a)
            for (std::size_t b = a + 1;
                 b < members.size() && result.pairs.size() < limit; ++b) {
                if (same_class_required &&
                    predictions[members[a]] != predictions[members[b]])
                    continue;
                result.pairs.emplace_back(members[a], members[b]);
            }
        if (result.pairs.size() >= limit) break;
    }
    return result;
}

FairnessReport fairness_zero_image(const Network& net) {
    FairnessReport report;
    const Tensor zero(net.input_shape);
    report.distribution = softmax(logits(net, zero));
    const double uniform = 1.0 / static_cast<double>(net.class_count);
    double dev = 0.0, entropy = 0.0;
    for (std::size_t c = 0; c < report.distribution.size(); ++c) {
        const double p = report.distribution[c];
        dev = std::max(dev, std::fabs(p - uniform));
        if (p > 0.0) entropy -= p * std::log(p);
    }
    report.max_deviation = dev;
    report.entropy = entropy;
    return report;
}

std::string fairness_to_json(const FairnessReport& report, const Network& net) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["network_digest"] = param_digest(net);
    j["zero_bias"] = net.zero_bias;
    j["class_count"] = net.class_count;
    j["distribution"] = report.distribution.vec();
    j["max_deviation_from_uniform"] = report.max_deviation;
    j["entropy"] = report.entropy;
    return j.dump(2);
}

}  // namespace zbnn
