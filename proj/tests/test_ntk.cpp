#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "zbnn/ntk.hpp"

using namespace zbnn;

TEST_CASE("depth-1 kernel matches the closed form exactly") {
    Rng rng(60);
    const std::size_t n0 = 7, N = 5;
    const Tensor inputs = oracles::random_tensor(Shape{N, n0}, rng);

    for (double beta : {0.0, 0.5}) {
        NtkConfig cfg = make_mlp_config(n0, 1, 0, 1, beta);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const KernelMatrix k =
                empirical_ntk(cfg, sample_params(cfg, seed), inputs);
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) {
                    double dot = 0.0;
                    for (std::size_t d = 0; d < n0; ++d)
                        dot += inputs[i * n0 + d] * inputs[j * n0 + d];
                    const double expect =
                        dot / static_cast<double>(n0) + beta * beta;
                    CHECK(std::fabs(k.matrix[i * N + j] - expect) < 1e-12);
                }
        }
    }
}

TEST_CASE("depth-1 kernels with and without bias differ by beta^2") {
    Rng rng(61);
    const std::size_t n0 = 6, N = 4;
    const Tensor inputs = oracles::random_tensor(Shape{N, n0}, rng);
    NtkConfig plain = make_mlp_config(n0, 1, 0, 1, 0.0);
    NtkConfig biased = make_mlp_config(n0, 1, 0, 1, 0.5);
    const Tensor k0 = empirical_ntk(plain, sample_params(plain, 3), inputs).matrix;
    const Tensor kb = empirical_ntk(biased, sample_params(biased, 3), inputs).matrix;
    for (std::size_t i = 0; i < k0.size(); ++i)
        CHECK(kb[i] - k0[i] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("kernel matrices are symmetric with nonnegative diagonal") {
    Rng rng(62);
    const Tensor inputs = oracles::random_tensor(Shape{6, 5}, rng);
    NtkConfig cfg = make_mlp_config(5, 16, 2, 2, 0.0);
    const KernelMatrix k = empirical_ntk(cfg, sample_params(cfg, 9), inputs);
    CHECK(k.max_asymmetry() == 0.0);
    const std::size_t n = k.matrix.dim(0);
    for (std::size_t i = 0; i < n; ++i) CHECK(k.matrix[i * n + i] >= 0.0);
}

TEST_CASE("kernel matrices are positive semidefinite within tolerance") {
    Rng rng(63);
    const Tensor inputs = oracles::random_tensor(Shape{5, 4}, rng);
    NtkConfig cfg = make_mlp_config(4, 12, 1, 1, 0.0);
    const KernelMatrix k = empirical_ntk(cfg, sample_params(cfg, 4), inputs);
    Rng probe(64);
    CHECK(k.min_quadratic_form(200, probe) >= -1e-8 * k.trace());
}

TEST_CASE("the jacobian resource guard trips") {
    NtkConfig cfg = make_mlp_config(64, 1024, 2, 8, 0.0);
    cfg.resource_budget = 1000;
    Rng rng(65);
    const Tensor inputs = oracles::random_tensor(Shape{4, 64}, rng);
    CHECK_THROWS_AS((void)empirical_ntk(cfg, sample_params(cfg, 0), inputs),
                    ResourceLimit);
}

TEST_CASE("nngp layer-1 closed form") {
    const std::size_t n0 = 4;
    Tensor x(Shape{1, n0});
    for (std::size_t i = 0; i < n0; ++i) x[i] = 1.0;  // ||x||^2 = n0

    SUBCASE("unit diagonal at beta 0") {
        NtkConfig cfg = make_mlp_config(n0, 3, 1, 1, 0.0);
        Rng rng(66);
        const NngpCovariance cov = nngp_covariance(cfg, x, 10, rng);
        CHECK(cov.sigma[0][0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(cov.standard_error[0][0] == 0.0);
    }
    SUBCASE("beta adds beta^2 to layer 1") {
        NtkConfig a = make_mlp_config(n0, 3, 1, 1, 0.0);
        NtkConfig b = make_mlp_config(n0, 3, 1, 1, 0.5);
        Rng r1(67), r2(67);
        const NngpCovariance ca = nngp_covariance(a, x, 10, r1);
        const NngpCovariance cb = nngp_covariance(b, x, 10, r2);
        CHECK(cb.sigma[0][0] - ca.sigma[0][0] ==
              doctest::Approx(0.25).epsilon(1e-15));
    }
}

TEST_CASE("monte carlo layer-2 covariance agrees with a larger-sample oracle") {
    Rng rng(68);
    const std::size_t n0 = 5, N = 3;
    const Tensor inputs = oracles::random_tensor(Shape{N, n0}, rng);
    NtkConfig cfg = make_mlp_config(n0, 8, 1, 1, 0.3);

    Rng mc_rng(69);
    const NngpCovariance mc = nngp_covariance(cfg, inputs, 20000, mc_rng);
    Rng oracle_rng(70713);
    const NngpCovariance oracle = nngp_covariance(cfg, inputs, 1000000, oracle_rng);

    REQUIRE(mc.sigma.size() >= 2);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            const double se = std::sqrt(
                mc.standard_error[1][i * N + j] * mc.standard_error[1][i * N + j] +
                oracle.standard_error[1][i * N + j] *
                    oracle.standard_error[1][i * N + j]);
            CHECK(std::fabs(mc.sigma[1][i * N + j] - oracle.sigma[1][i * N + j]) <=
                  3.0 * se + 1e-12);
        }
}

TEST_CASE("width convergence study narrows with width") {
    Rng rng(70);
    const Tensor inputs = oracles::random_tensor(Shape{8, 6}, rng);
    NtkConfig base = make_mlp_config(6, 8, 1, 1, 0.0);
    const WidthConvergenceReport report =
        width_convergence_study(base, {8, 32, 128}, 6, inputs);
    CHECK(report.mean_entry_std.size() == 3);
    CHECK(report.mean_entry_std.back() < report.mean_entry_std.front());
    CHECK(report.monotone_with_one_inversion);
    CHECK(report.beta_pair_distance > 0.0);
    CHECK(report.twin_ensemble_distance <= report.twin_ensemble_tolerance);
    CHECK(width_report_to_json(report).find("width_convergence") !=
          std::string::npos);
}

TEST_CASE("width study rejects thin configurations") {
    Rng rng(71);
    const Tensor inputs = oracles::random_tensor(Shape{4, 3}, rng);
    NtkConfig base = make_mlp_config(3, 4, 1, 1, 0.0);
    CHECK_THROWS_AS((void)width_convergence_study(base, {8}, 6, inputs),
                    InvalidConfig);
    CHECK_THROWS_AS((void)width_convergence_study(base, {8, 16}, 2, inputs),
                    InvalidConfig);
}

TEST_CASE("zero training steps leave the kernel untouched") {
    Rng rng(72);
    const Tensor inputs = oracles::random_tensor(Shape{10, 6}, rng);
    std::vector<double> targets;
    for (std::size_t i = 0; i < 10; ++i) targets.push_back(rng.uniform(-1.0, 1.0));
    NtkConfig base = make_mlp_config(6, 16, 1, 1, 0.0);
    const DriftReport report =
        training_drift_study(base, {16, 32}, inputs, targets, 0, 0.2, 10, 5);
    CHECK(report.relative_drift[0] == 0.0);
    CHECK(report.relative_drift[1] == 0.0);
}

TEST_CASE("kernel drift shrinks as width grows") {
    Rng rng(73);
    const std::size_t M = 24, n0 = 8;
    const Tensor inputs = oracles::random_tensor(Shape{M, n0}, rng);
    std::vector<double> targets;
    for (std::size_t i = 0; i < M; ++i) targets.push_back(rng.uniform(-1.0, 1.0));
    NtkConfig base = make_mlp_config(n0, 16, 1, 1, 0.0);
    const DriftReport report =
        training_drift_study(base, {16, 256}, inputs, targets, 60, 0.2, 12, 6);
    CHECK(report.relative_drift[1] < report.relative_drift[0]);
    CHECK(report.decreasing_with_width);
    CHECK(drift_report_to_json(report).find("training_drift") != std::string::npos);
}

TEST_CASE("zero-bias and biased drift are comparable at matched width") {
    Rng rng(74);
    const std::size_t M = 20, n0 = 6;
    const Tensor inputs = oracles::random_tensor(Shape{M, n0}, rng);
    std::vector<double> targets;
    for (std::size_t i = 0; i < M; ++i) targets.push_back(rng.uniform(-1.0, 1.0));
    NtkConfig zb = make_mlp_config(n0, 64, 1, 1, 0.0);
    NtkConfig wb = make_mlp_config(n0, 64, 1, 1, 0.5);
    const DriftReport dz =
        training_drift_study(zb, {64}, inputs, targets, 40, 0.2, 10, 7);
    const DriftReport dw =
        training_drift_study(wb, {64}, inputs, targets, 40, 0.2, 10, 7);
    CHECK(dz.relative_drift[0] > 0.0);
    CHECK(dw.relative_drift[0] > 0.0);
    // same order of magnitude
    const double ratio = dz.relative_drift[0] / dw.relative_drift[0];
    CHECK(ratio > 0.1);
    CHECK(ratio < 10.0);
}
