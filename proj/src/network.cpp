#include "zbnn/network.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace zbnn {

using nlohmann::json;

void validate(const Network& net) {
    if (net.layers.empty()) throw InvalidConfig("network has no layers");
    if (net.class_count < 1) throw InvalidConfig("network needs class_count >= 1");
    if (net.zero_bias) {
        for (const Layer& l : net.layers)
            if (!is_zero_bias(l))
                throw InvalidConfig(
                    "network flagged zero-bias but a layer carries a bias or "
                    "batch norm");
    }
}

std::size_t argmax_lowest(const Tensor& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

Tensor softmax(const Tensor& z) {
    Tensor out(z.shape());
    double mx = z[0];
    for (std::size_t i = 1; i < z.size(); ++i) mx = std::max(mx, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - mx);
        sum += out[i];
    }
    for (std::size_t i = 0; i < z.size(); ++i) out[i] /= sum;
    return out;
}

namespace {

Tensor add_batch_dim(const Tensor& x) {
    std::vector<std::size_t> dims{1};
    for (std::size_t d : x.shape().dims) dims.push_back(d);
    return x.reshaped(Shape(dims));
}

Tensor forward_all(const Network& net, const Tensor& batched,
                   const ForwardHooks* hooks) {
    ForwardCtx ctx{Mode::Eval, nullptr, nullptr, hooks};
    Tensor x = batched;
    for (const Layer& l : net.layers) x = layer_forward(l, x, ctx);
    if (x.rank() != 2 || x.dim(1) != net.class_count)
        throw ShapeMismatch("network output " + x.shape().str() + " vs class count " +
                            std::to_string(net.class_count));
    return x;
}

}  // namespace

Tensor logits(const Network& net, const Tensor& x) {
    if (x.shape() != net.input_shape)
        throw ShapeMismatch("input " + x.shape().str() + " vs network input " +
                            net.input_shape.str());
    Tensor out = forward_all(net, add_batch_dim(x), nullptr);
    return out.reshaped(Shape{net.class_count});
}

Tensor logits_batch(const Network& net, const Tensor& x) {
    if (x.rank() != net.input_shape.rank() + 1)
        throw ShapeMismatch("batched input " + x.shape().str());
    for (std::size_t i = 0; i < net.input_shape.rank(); ++i)
        if (x.dim(i + 1) != net.input_shape[i])
            throw ShapeMismatch("batched input " + x.shape().str() +
                                " vs network input " + net.input_shape.str());
    return forward_all(net, x, nullptr);
}

Tensor logits_hooked(const Network& net, const Tensor& x, const ForwardHooks& hooks) {
    if (x.shape() != net.input_shape)
        throw ShapeMismatch("input " + x.shape().str() + " vs network input " +
                            net.input_shape.str());
    Tensor out = forward_all(net, add_batch_dim(x), &hooks);
    return out.reshaped(Shape{net.class_count});
}

Prediction predict(const Network& net, const Tensor& x) {
    Prediction p;
    p.logits = logits(net, x);
    p.distribution = softmax(p.logits);
    p.class_index = argmax_lowest(p.logits);
    return p;
}

void initialize_he(Network& net, std::uint64_t seed) {
    Rng rng(seed);
    for (Layer& layer : net.layers) {
        std::visit(
            [&](auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, LinearLayer>) {
                    he_init(l.weights, l.weights.dim(1), rng);
                    if (l.bias)
                        for (std::size_t i = 0; i < l.bias->size(); ++i)
                            (*l.bias)[i] = 0.0;
                } else if constexpr (std::is_same_v<T, ConvLayer>) {
                    he_init(l.kernel,
                            l.kernel.dim(1) * l.kernel.dim(2) * l.kernel.dim(3), rng);
                    if (l.bias)
                        for (std::size_t i = 0; i < l.bias->size(); ++i)
                            (*l.bias)[i] = 0.0;
                }
            },
            layer.v);
    }
    net.init_scheme = "he_fan_in";
    net.init_seed = seed;
}

std::uint64_t param_digest(const Network& net) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const unsigned char* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    mix(reinterpret_cast<const unsigned char*>(net.name.data()), net.name.size());
    for (const Layer& layer : net.layers) {
        std::vector<const Tensor*> state;
        collect_state_tensors(layer, state);
        for (const Tensor* t : state)
            mix(reinterpret_cast<const unsigned char*>(t->data()),
                t->size() * sizeof(double));
    }
    return h;
}

std::size_t relu_site_count(const Network& net) {
    return count_relu_sites(net.layers, net.input_shape);
}

// --- checkpoint io ---

std::uint32_t crc32_ieee(const unsigned char* data, std::size_t len,
                         std::uint32_t seed) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = seed ^ 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i)
        crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

namespace {

json layer_to_json(const Layer& layer) {
    return std::visit(
        [&](auto const& l) -> json {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, LinearLayer>) {
                return {{"type", "linear"},
                        {"out", l.weights.dim(0)},
                        {"in", l.weights.dim(1)},
                        {"bias", l.bias.has_value()}};
            } else if constexpr (std::is_same_v<T, ConvLayer>) {
                return {{"type", "conv"},
                        {"out_ch", l.kernel.dim(0)},
                        {"in_ch", l.kernel.dim(1)},
                        {"kh", l.kernel.dim(2)},
                        {"kw", l.kernel.dim(3)},
                        {"bias", l.bias.has_value()},
                        {"stride", l.stride},
                        {"padding", l.padding}};
            } else if constexpr (std::is_same_v<T, PoolLayer>) {
                return {{"type", "pool"},
                        {"kind", l.kind == PoolKind::Max ? "max" : "avg"},
                        {"window", l.window},
                        {"stride", l.stride}};
            } else if constexpr (std::is_same_v<T, ReluLayer>) {
                return {{"type", "relu"}};
            } else if constexpr (std::is_same_v<T, FlattenLayer>) {
                return {{"type", "flatten"}};
            } else if constexpr (std::is_same_v<T, DropoutLayer>) {
                return {{"type", "dropout"}, {"rate", l.rate}};
            } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                return {{"type", "batch_norm"},
                        {"channels", l.gamma.size()},
                        {"epsilon", l.epsilon}};
            } else {
                const ResidualBlock& rb = l;
                json branch = json::array();
                for (const Layer& sub : rb.branch) branch.push_back(layer_to_json(sub));
                const char* variant = rb.variant == ResidualVariant::Plain ? "plain"
                                      : rb.variant == ResidualVariant::Fixup
                                          ? "fixup"
                                          : "nf";
                return {{"type", "residual"},
                        {"variant", variant},
                        {"alpha", rb.alpha},
                        {"beta_l", rb.beta_l},
                        {"branch", branch}};
            }
        },
        layer.v);
}

Layer layer_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "linear") {
        LinearLayer l;
        l.weights = Tensor(Shape{j.at("out").get<std::size_t>(),
                                 j.at("in").get<std::size_t>()});
        if (j.at("bias").get<bool>())
            l.bias = Tensor(Shape{j.at("out").get<std::size_t>()});
        return Layer{std::move(l)};
    }
    if (type == "conv") {
        ConvLayer l;
        l.kernel = Tensor(Shape{j.at("out_ch").get<std::size_t>(),
                                j.at("in_ch").get<std::size_t>(),
                                j.at("kh").get<std::size_t>(),
                                j.at("kw").get<std::size_t>()});
        if (j.at("bias").get<bool>())
            l.bias = Tensor(Shape{j.at("out_ch").get<std::size_t>()});
        l.stride = j.at("stride").get<std::size_t>();
        l.padding = j.at("padding").get<std::size_t>();
        return Layer{std::move(l)};
    }
    if (type == "pool") {
        PoolLayer l;
        l.kind = j.at("kind").get<std::string>() == "max" ? PoolKind::Max
                                                          : PoolKind::Avg;
        l.window = j.at("window").get<std::size_t>();
        l.stride = j.at("stride").get<std::size_t>();
        return Layer{l};
    }
    if (type == "relu") return Layer{ReluLayer{}};
    if (type == "flatten") return Layer{FlattenLayer{}};
    if (type == "dropout") return Layer{DropoutLayer{j.at("rate").get<double>()}};
    if (type == "batch_norm") {
        BatchNormLayer l;
        const std::size_t c = j.at("channels").get<std::size_t>();
        l.gamma = Tensor(Shape{c});
        l.beta = Tensor(Shape{c});
        l.running_mean = Tensor(Shape{c});
        l.running_var = Tensor(Shape{c});
        l.epsilon = j.at("epsilon").get<double>();
        return Layer{std::move(l)};
    }
    if (type == "residual") {
        ResidualBlock rb;
        const std::string variant = j.at("variant").get<std::string>();
        rb.variant = variant == "plain"   ? ResidualVariant::Plain
                     : variant == "fixup" ? ResidualVariant::Fixup
                                          : ResidualVariant::Nf;
        rb.alpha = j.at("alpha").get<double>();
        rb.beta_l = j.at("beta_l").get<double>();
        for (const json& sub : j.at("branch")) rb.branch.push_back(layer_from_json(sub));
        if (rb.variant == ResidualVariant::Fixup) rb.multiplier = Tensor(Shape{1});
        return Layer{std::move(rb)};
    }
    throw FormatError("unknown layer type '" + type + "' in checkpoint");
}

void append_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void append_f64_le(std::string& out, double d) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

double read_f64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

constexpr char kMagic[4] = {'Z', 'B', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const Network& net, const std::string& path) {
    validate(net);
    json meta;
    meta["name"] = net.name;
    meta["zero_bias"] = net.zero_bias;
    meta["class_count"] = net.class_count;
    meta["input_shape"] = net.input_shape.dims;
    meta["init"] = {{"scheme", net.init_scheme},
                    {"seed", std::to_string(net.init_seed)}};
    json jl = json::array();
    for (const Layer& l : net.layers) jl.push_back(layer_to_json(l));
    meta["layers"] = jl;
    const std::string meta_str = meta.dump();

    std::string blob;
    blob.append(kMagic, 4);
    append_u32_le(blob, kVersion);
    append_u32_le(blob, static_cast<std::uint32_t>(meta_str.size()));
    blob += meta_str;
    for (const Layer& layer : net.layers) {
        std::vector<const Tensor*> state;
        collect_state_tensors(layer, state);
        for (const Tensor* t : state)
            for (std::size_t i = 0; i < t->size(); ++i) append_f64_le(blob, (*t)[i]);
    }
    append_u32_le(blob, crc32_ieee(reinterpret_cast<const unsigned char*>(blob.data()),
                                   blob.size()));

    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open '" + tmp + "' for writing");
        os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        if (!os) throw IoError("short write to '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
}

Network load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    std::string blob((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
    const std::size_t n = blob.size();
    if (n < 16) throw FormatError("checkpoint truncated: " + std::to_string(n) + " bytes");
    if (std::memcmp(p, kMagic, 4) != 0) throw FormatError("bad checkpoint magic");
    if (read_u32_le(p + 4) != kVersion)
        throw FormatError("unsupported checkpoint version");
    const std::uint32_t meta_len = read_u32_le(p + 8);
    if (12 + static_cast<std::size_t>(meta_len) + 4 > n)
        throw FormatError("checkpoint truncated inside metadata");

    const std::uint32_t stored_crc = read_u32_le(p + n - 4);
    if (crc32_ieee(p, n - 4) != stored_crc)
        throw FormatError("checkpoint digest mismatch");

    json meta;
    try {
        meta = json::parse(blob.substr(12, meta_len));
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint metadata is not valid JSON: ") +
                          e.what());
    }

    Network net;
    net.name = meta.at("name").get<std::string>();
    net.zero_bias = meta.at("zero_bias").get<bool>();
    net.class_count = meta.at("class_count").get<std::size_t>();
    net.input_shape = Shape(meta.at("input_shape").get<std::vector<std::size_t>>());
    net.init_scheme = meta.at("init").at("scheme").get<std::string>();
    net.init_seed = std::stoull(meta.at("init").at("seed").get<std::string>());
    for (const json& j : meta.at("layers")) net.layers.push_back(layer_from_json(j));

    std::size_t off = 12 + meta_len;
    for (Layer& layer : net.layers) {
        std::vector<Tensor*> state;
        collect_state_tensors(layer, state);
        for (Tensor* t : state) {
            const std::size_t need = t->size() * 8;
            if (off + need + 4 > n)
                throw FormatError("checkpoint truncated inside parameters");
            for (std::size_t i = 0; i < t->size(); ++i)
                (*t)[i] = read_f64_le(p + off + i * 8);
            off += need;
        }
    }
    if (off + 4 != n) throw FormatError("checkpoint has trailing bytes");

    validate(net);  // re-checks the zero_bias flag against the loaded stack
    return net;
}

}  // namespace zbnn
