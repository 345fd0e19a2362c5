#include <doctest.h>

#include <cstring>

#include "oracles.hpp"
#include "zbnn/kernels.hpp"

using namespace zbnn;

namespace {

bool bit_identical(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("matmul identity") {
    const Tensor id = Tensor::matrix(2, 2, {1, 0, 0, 1});
    const Tensor m = Tensor::matrix(2, 2, {3, 4, 5, 6});
    CHECK(matmul(id, m).vec() == m.vec());
}

TEST_CASE("matmul hand example") {
    const Tensor a = Tensor::matrix(1, 2, {1, 2});
    const Tensor b = Tensor::matrix(2, 1, {3, 4});
    const Tensor c = matmul(a, b);
    CHECK(c.shape() == Shape{1, 1});
    CHECK(c[0] == 11.0);
}

TEST_CASE("matmul bilinearity in a scalar") {
    Rng rng(11);
    const Tensor a = oracles::random_tensor(Shape{3, 3}, rng);
    const Tensor b = oracles::random_tensor(Shape{3, 3}, rng);
    const double s = 0.3;
    const Tensor lhs = matmul(a.scaled(s), b);
    const Tensor rhs = matmul(a, b).scaled(s);
    CHECK(oracles::relative_gap(lhs, rhs) < 1e-12);
}

TEST_CASE("matmul shape mismatch") {
    const Tensor a = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
    const Tensor b = Tensor::matrix(2, 2, {1, 2, 3, 4});
    CHECK_THROWS_AS((void)matmul(a, b), ShapeMismatch);
}

TEST_CASE("matmul against naive oracle") {
    Rng rng(5);
    for (int round = 0; round < 20; ++round) {
        const std::size_t m = 1 + rng.uniform_index(8);
        const std::size_t k = 1 + rng.uniform_index(8);
        const std::size_t n = 1 + rng.uniform_index(8);
        const Tensor a = oracles::random_tensor(Shape{m, k}, rng);
        const Tensor b = oracles::random_tensor(Shape{k, n}, rng);
        CHECK(oracles::relative_gap(matmul(a, b), oracles::matmul_naive(a, b)) <
              1e-13);
    }
}

TEST_CASE("matmul_nt and matmul_tn against naive transposes") {
    Rng rng(6);
    const Tensor a = oracles::random_tensor(Shape{4, 6}, rng);
    const Tensor b = oracles::random_tensor(Shape{5, 6}, rng);
    // a * b^T
    Tensor bt(Shape{6, 5});
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 6; ++j) bt.at2(j, i) = b.at2(i, j);
    CHECK(oracles::relative_gap(matmul_nt(a, b), oracles::matmul_naive(a, bt)) <
          1e-13);

    const Tensor c = oracles::random_tensor(Shape{6, 4}, rng);
    const Tensor d = oracles::random_tensor(Shape{6, 3}, rng);
    Tensor ct(Shape{4, 6});
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 4; ++j) ct.at2(j, i) = c.at2(i, j);
    CHECK(oracles::relative_gap(matmul_tn(c, d), oracles::matmul_naive(ct, d)) <
          1e-13);
}

TEST_CASE("xcorr2d zero input stays zero") {
    Rng rng(7);
    const Tensor in = Tensor::zeros(Shape{2, 5, 5});
    const Tensor ker = oracles::random_tensor(Shape{3, 2, 3, 3}, rng);
    const Tensor out = xcorr2d(in, ker, 1, 1, 1, 1);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("xcorr2d sums a 2x2 window") {
    const Tensor in = Tensor(Shape{1, 2, 2}, {1, 2, 3, 4});
    const Tensor ker = Tensor::full(Shape{1, 1, 2, 2}, 1.0);
    const Tensor out = xcorr2d(in, ker, 1, 1, 0, 0);
    CHECK(out.shape() == Shape{1, 1, 1});
    CHECK(out[0] == 10.0);
}

TEST_CASE("xcorr2d scalar associativity") {
    Rng rng(8);
    const Tensor in = oracles::random_tensor(Shape{2, 6, 6}, rng);
    const Tensor ker = oracles::random_tensor(Shape{4, 2, 3, 3}, rng);
    const double s = 0.01;
    const Tensor lhs = xcorr2d(in.scaled(s), ker, 1, 1, 1, 1);
    const Tensor rhs = xcorr2d(in, ker, 1, 1, 1, 1).scaled(s);
    CHECK(oracles::relative_gap(lhs, rhs) < 1e-12);
}

TEST_CASE("xcorr2d against brute force, strides and padding") {
    Rng rng(9);
    for (int round = 0; round < 12; ++round) {
        const std::size_t C = 1 + rng.uniform_index(3);
        const std::size_t H = 3 + rng.uniform_index(6);
        const std::size_t W = 3 + rng.uniform_index(6);
        const std::size_t K = 1 + rng.uniform_index(3);
        const std::size_t k = 1 + rng.uniform_index(3);
        const std::size_t s = 1 + rng.uniform_index(2);
        const std::size_t p = rng.uniform_index(2);
        const Tensor in = oracles::random_tensor(Shape{C, H, W}, rng);
        const Tensor ker = oracles::random_tensor(Shape{K, C, k, k}, rng);
        CHECK(oracles::relative_gap(xcorr2d(in, ker, s, s, p, p),
                                    oracles::xcorr2d_naive(in, ker, s, s, p, p)) <
              1e-13);
    }
}

TEST_CASE("xcorr2d rejects bad configs") {
    const Tensor in = Tensor::zeros(Shape{2, 4, 4});
    const Tensor ker = Tensor::zeros(Shape{1, 3, 2, 2});  // channel mismatch
    CHECK_THROWS_AS((void)xcorr2d(in, ker, 1, 1, 0, 0), ShapeMismatch);
    const Tensor ok = Tensor::zeros(Shape{1, 2, 2, 2});
    CHECK_THROWS_AS((void)xcorr2d(in, ok, 0, 1, 0, 0), InvalidConfig);
}

TEST_CASE("reduce examples") {
    const Tensor v = Tensor::vector({-1, 0, 2});
    CHECK(reduce(v, ReduceKind::Max, {0})[0] == 2.0);
    const Tensor m = Tensor::vector({2, 4});
    CHECK(reduce(m, ReduceKind::Mean, {0})[0] == 3.0);
    const Tensor sum = Tensor::matrix(2, 2, {1, 2, 3, 4});
    const Tensor rows = reduce(sum, ReduceKind::Sum, {1});
    CHECK(rows.shape() == Shape{2});
    CHECK(rows[0] == 3.0);
    CHECK(rows[1] == 7.0);
}

TEST_CASE("reduce axis ordering preserved") {
    Rng rng(10);
    const Tensor t = oracles::random_tensor(Shape{2, 3, 4}, rng);
    const Tensor r = reduce(t, ReduceKind::Sum, {1});
    CHECK(r.shape() == Shape{2, 4});
    double expect = 0.0;
    for (std::size_t j = 0; j < 3; ++j) expect += t[(1 * 3 + j) * 4 + 2];
    CHECK(r[1 * 4 + 2] == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("reduce max homogeneity") {
    Rng rng(11);
    const Tensor t = oracles::random_tensor(Shape{4, 4}, rng, 0.0, 1.0);
    const double s = 0.5;
    const Tensor lhs = reduce(t.scaled(s), ReduceKind::Max, {0, 1});
    const Tensor rhs = reduce(t, ReduceKind::Max, {0, 1}).scaled(s);
    CHECK(lhs[0] == rhs[0]);

    // also over arbitrary-sign inputs
    const Tensor u = oracles::random_tensor(Shape{5}, rng, -1.0, 1.0);
    CHECK(reduce(u.scaled(2.0), ReduceKind::Max, {0})[0] ==
          doctest::Approx(2.0 * reduce(u, ReduceKind::Max, {0})[0]).epsilon(1e-12));
}

TEST_CASE("reduce invalid axis") {
    const Tensor t = Tensor::matrix(2, 2, {1, 2, 3, 4});
    CHECK_THROWS_AS((void)reduce(t, ReduceKind::Sum, {2}), InvalidAxis);
    CHECK_THROWS_AS((void)reduce(t, ReduceKind::Sum, {0, 0}), InvalidAxis);
}

TEST_CASE("positive homogeneity of every kernel op, randomized") {
    Rng rng(12);
    for (int round = 0; round < 200; ++round) {
        const double s = std::exp(rng.uniform(-4.0, 4.0));
        const Tensor a = oracles::random_tensor(Shape{3, 4}, rng);
        const Tensor b = oracles::random_tensor(Shape{4, 2}, rng);
        CHECK(oracles::relative_gap(matmul(a.scaled(s), b), matmul(a, b).scaled(s)) <
              1e-12);
        const Tensor in = oracles::random_tensor(Shape{1, 5, 5}, rng);
        const Tensor ker = oracles::random_tensor(Shape{2, 1, 3, 3}, rng);
        CHECK(oracles::relative_gap(xcorr2d(in.scaled(s), ker, 1, 1, 0, 0),
                                    xcorr2d(in, ker, 1, 1, 0, 0).scaled(s)) < 1e-12);
        const Tensor t = oracles::random_tensor(Shape{3, 3}, rng);
        for (ReduceKind kind : {ReduceKind::Max, ReduceKind::Mean, ReduceKind::Sum})
            CHECK(oracles::relative_gap(reduce(t.scaled(s), kind, {0}),
                                        reduce(t, kind, {0}).scaled(s)) < 1e-12);
    }
}

TEST_CASE("serial and parallel kernels are bit-identical") {
    Rng rng(13);
    const Tensor a = oracles::random_tensor(Shape{33, 17}, rng);
    const Tensor b = oracles::random_tensor(Shape{17, 29}, rng);
    const Tensor in = oracles::random_tensor(Shape{3, 17, 13}, rng);
    const Tensor ker = oracles::random_tensor(Shape{5, 3, 3, 3}, rng);
    const Tensor big = oracles::random_tensor(Shape{64, 64}, rng);

    exec::set_mode(exec::Mode::Serial);
    const Tensor mm_s = matmul(a, b);
    const Tensor xc_s = xcorr2d(in, ker, 2, 1, 1, 0);
    const Tensor rd_s = reduce(big, ReduceKind::Sum, {1});
    const Tensor tn_s = matmul_tn(a, a);

    exec::set_mode(exec::Mode::Parallel);
    const Tensor mm_p = matmul(a, b);
    const Tensor xc_p = xcorr2d(in, ker, 2, 1, 1, 0);
    const Tensor rd_p = reduce(big, ReduceKind::Sum, {1});
    const Tensor tn_p = matmul_tn(a, a);

    CHECK(bit_identical(mm_s, mm_p));
    CHECK(bit_identical(xc_s, xc_p));
    CHECK(bit_identical(rd_s, rd_p));
    CHECK(bit_identical(tn_s, tn_p));

    // repeated runs are bit-identical too
    CHECK(bit_identical(mm_p, matmul(a, b)));
}

TEST_CASE("tensor invariants") {
    CHECK_THROWS_AS(Tensor(Shape{2, 2}, {1.0, 2.0}), ShapeMismatch);
    const Tensor t = Tensor::vector({1.0, -2.0});
    CHECK(t.all_finite());
    CHECK(Shape{2, 3}.count() == 6);
}
