#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "oracles.hpp"
#include "zbnn/datasets.hpp"
#include "zbnn/network.hpp"

using namespace zbnn;

namespace {

Network random_fcn(std::size_t in, std::vector<std::size_t> hidden,
                   std::size_t classes, bool with_bias, std::uint64_t seed) {
    Network net;
    net.name = "test_fcn";
    net.class_count = classes;
    net.zero_bias = !with_bias;
    net.input_shape = Shape{in};
    std::size_t prev = in;
    for (std::size_t h : hidden) {
        LinearLayer lin;
        lin.weights = Tensor(Shape{h, prev});
        if (with_bias) lin.bias = Tensor(Shape{h});
        net.layers.push_back(Layer{std::move(lin)});
        net.layers.push_back(Layer{ReluLayer{}});
        prev = h;
    }
    LinearLayer out;
    out.weights = Tensor(Shape{classes, prev});
    if (with_bias) out.bias = Tensor(Shape{classes});
    net.layers.push_back(Layer{std::move(out)});
    initialize_he(net, seed);
    return net;
}

}  // namespace

TEST_CASE("zero-bias logits vanish at the zero input") {
    const Network net = random_fcn(6, {5, 4}, 3, false, 1);
    const Tensor z = logits(net, Tensor::zeros(Shape{6}));
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0);
}

TEST_CASE("zero-bias logit homogeneity at s = 1e-4") {
    Rng rng(2);
    const Network net = random_fcn(8, {10}, 4, false, 3);
    const Tensor x = oracles::random_tensor(Shape{8}, rng);
    const double s = 1e-4;
    const Tensor lhs = logits(net, x.scaled(s));
    const Tensor rhs = logits(net, x).scaled(s);
    const double scale = std::max(1.0, max_abs(rhs));
    CHECK(max_abs_diff(lhs, rhs) / scale < 1e-10);
}

TEST_CASE("single layer logits") {
    Network net;
    net.name = "tiny";
    net.class_count = 2;
    net.zero_bias = true;
    net.input_shape = Shape{2};
    LinearLayer lin;
    lin.weights = Tensor::matrix(2, 2, {1, 0, 0, -1});
    net.layers.push_back(Layer{std::move(lin)});
    const Tensor z = logits(net, Tensor::vector({2, 3}));
    CHECK(z[0] == 2.0);
    CHECK(z[1] == -3.0);
}

TEST_CASE("softmax of zeros is uniform") {
    const Tensor z = Tensor::zeros(Shape{10});
    const Tensor p = softmax(z);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(std::fabs(p[i] - 0.1) < 1e-15);
}

TEST_CASE("softmax keeps the argmax under temperature scaling") {
    Rng rng(4);
    for (int round = 0; round < 50; ++round) {
        const Tensor z = oracles::random_tensor(Shape{6}, rng, -3.0, 3.0);
        CHECK(argmax_lowest(softmax(z.scaled(7.3))) == argmax_lowest(softmax(z)));
    }
}

TEST_CASE("softmax closed form for two logits") {
    const Tensor p = softmax(Tensor::vector({1, 2}));
    CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-9));
    CHECK(p[1] == doctest::Approx(std::exp(1.0) / (1.0 + std::exp(1.0))).epsilon(1e-9));
}

TEST_CASE("softmax sums to one and shrugs off constant shifts") {
    Rng rng(5);
    for (int round = 0; round < 30; ++round) {
        const Tensor z = oracles::random_tensor(Shape{7}, rng, -20.0, 20.0);
        const Tensor p = softmax(z);
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) sum += p[i];
        CHECK(std::fabs(sum - 1.0) < 1e-12);
        Tensor shifted = z;
        for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += 11.25;
        CHECK(max_abs_diff(softmax(shifted), p) < 1e-12);
    }
}

TEST_CASE("predict breaks ties toward the lowest class") {
    Network net;
    net.name = "tie";
    net.class_count = 2;
    net.zero_bias = true;
    net.input_shape = Shape{1};
    LinearLayer lin;
    lin.weights = Tensor::matrix(2, 1, {3, 3});
    net.layers.push_back(Layer{std::move(lin)});
    CHECK(predict(net, Tensor::vector({1})).class_index == 0);
}

TEST_CASE("zero-bias prediction is scalar invariant over the sweep list") {
    Rng rng(6);
    const Network net = random_fcn(10, {12}, 5, false, 7);
    for (int round = 0; round < 10; ++round) {
        const Tensor x = oracles::random_tensor(Shape{10}, rng);
        const std::size_t base = predict(net, x).class_index;
        for (double s : kTable1Scalars)
            CHECK(predict(net, x.scaled(s)).class_index == base);
    }
}

TEST_CASE("zero-bias zero input predicts uniformly") {
    const Network net = random_fcn(6, {8}, 10, false, 8);
    const Prediction p = predict(net, Tensor::zeros(Shape{6}));
    for (std::size_t c = 0; c < 10; ++c)
        CHECK(std::fabs(p.distribution[c] - 0.1) < 1e-12);
    CHECK(p.class_index == 0);  // tie broken to the lowest class
}

TEST_CASE("validate rejects an inconsistent zero-bias flag") {
    Network net = random_fcn(4, {3}, 2, true, 9);
    net.zero_bias = true;  // layers still carry biases
    CHECK_THROWS_AS(validate(net), InvalidConfig);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    Rng rng(10);
    // a stack exercising every serializable layer kind
    Network net;
    net.name = "mixed";
    net.class_count = 3;
    net.zero_bias = false;
    net.input_shape = Shape{1, 8, 8};
    ConvLayer conv;
    conv.kernel = oracles::random_tensor(Shape{4, 1, 3, 3}, rng);
    conv.bias = oracles::random_tensor(Shape{4}, rng);
    conv.padding = 1;
    net.layers.push_back(Layer{std::move(conv)});
    net.layers.push_back(Layer{ReluLayer{}});
    net.layers.push_back(Layer{PoolLayer{PoolKind::Max, 2, 2}});
    BatchNormLayer bn;
    bn.gamma = oracles::random_tensor(Shape{4}, rng);
    bn.beta = oracles::random_tensor(Shape{4}, rng);
    bn.running_mean = oracles::random_tensor(Shape{4}, rng);
    bn.running_var = oracles::random_tensor(Shape{4}, rng, 0.5, 2.0);
    net.layers.push_back(Layer{std::move(bn)});
    // round-trips only serialize, so branch shapes need not line up
    ResidualBlock rb;
    rb.variant = ResidualVariant::Fixup;
    LinearLayer rlin;
    rlin.weights = oracles::random_tensor(Shape{4, 4}, rng);
    rb.branch.push_back(Layer{std::move(rlin)});
    rb.branch.push_back(Layer{ReluLayer{}});
    rb.multiplier = Tensor::vector({0.77});
    net.layers.push_back(Layer{std::move(rb)});
    net.layers.push_back(Layer{DropoutLayer{0.25}});
    net.layers.push_back(Layer{FlattenLayer{}});
    LinearLayer out;
    out.weights = oracles::random_tensor(Shape{3, 64}, rng);
    out.bias = oracles::random_tensor(Shape{3}, rng);
    net.layers.push_back(Layer{std::move(out)});

    const std::string path = "roundtrip_test.zbnn";
    save_checkpoint(net, path);
    const Network loaded = load_checkpoint(path);

    CHECK(loaded.name == net.name);
    CHECK(loaded.zero_bias == net.zero_bias);
    CHECK(loaded.class_count == net.class_count);
    CHECK(loaded.input_shape == net.input_shape);
    CHECK(loaded.init_scheme == net.init_scheme);

    std::vector<const Tensor*> a, b;
    for (const Layer& l : net.layers) collect_state_tensors(l, a);
    for (const Layer& l : loaded.layers) collect_state_tensors(l, b);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i]->size() == b[i]->size());
        CHECK(std::memcmp(a[i]->data(), b[i]->data(),
                          a[i]->size() * sizeof(double)) == 0);
    }
    CHECK(param_digest(loaded) == param_digest(net));

    // saving the loaded network reproduces the file byte for byte
    save_checkpoint(loaded, path + ".again");
    std::ifstream f1(path, std::ios::binary), f2(path + ".again", std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)),
                         std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)),
                         std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    std::remove(path.c_str());
    std::remove((path + ".again").c_str());
}

TEST_CASE("checkpoint corruption is detected") {
    const Network net = random_fcn(4, {3}, 2, false, 11);
    const std::string path = "corrupt_test.zbnn";
    save_checkpoint(net, path);

    SUBCASE("truncation") {
        std::ifstream is(path, std::ios::binary);
        std::string blob((std::istreambuf_iterator<char>(is)),
                         std::istreambuf_iterator<char>());
        is.close();
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write(blob.data(), static_cast<std::streamsize>(blob.size() / 2));
        os.close();
        CHECK_THROWS_AS((void)load_checkpoint(path), FormatError);
    }
    SUBCASE("bad magic") {
        std::fstream fs(path, std::ios::binary | std::ios::in | std::ios::out);
        fs.put('X');
        fs.close();
        CHECK_THROWS_AS((void)load_checkpoint(path), FormatError);
    }
    SUBCASE("flipped parameter byte fails the digest") {
        std::fstream fs(path, std::ios::binary | std::ios::in | std::ios::out);
        fs.seekp(-12, std::ios::end);
        fs.put('\x5a');
        fs.close();
        CHECK_THROWS_AS((void)load_checkpoint(path), FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS((void)load_checkpoint("not_there.zbnn"), IoError);
    }
    std::remove(path.c_str());
}

TEST_CASE("zero_bias flag survives the round trip") {
    const Network net = random_fcn(4, {3}, 2, false, 12);
    const std::string path = "flag_test.zbnn";
    save_checkpoint(net, path);
    CHECK(load_checkpoint(path).zero_bias);
    std::remove(path.c_str());
}
