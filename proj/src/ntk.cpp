#include "zbnn/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "zbnn/errors.hpp"
#include "zbnn/kernels.hpp"
#include "zbnn/version.hpp"

namespace zbnn {

using nlohmann::json;

std::size_t NtkConfig::param_count() const {
    std::size_t p = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        p += widths[l] * widths[l + 1];
        if (beta > 0.0) p += widths[l + 1];
    }
    return p;
}

NtkConfig make_mlp_config(std::size_t input_dim, std::size_t hidden_width,
                          std::size_t hidden_layers, std::size_t output_dim,
                          double beta) {
    if (beta < 0.0) throw InvalidConfig("beta must be >= 0");
    NtkConfig cfg;
    cfg.beta = beta;
    cfg.widths.push_back(input_dim);
    for (std::size_t i = 0; i < hidden_layers; ++i)
        cfg.widths.push_back(hidden_width);
    cfg.widths.push_back(output_dim);
    for (std::size_t w : cfg.widths)
        if (w < 1) throw InvalidConfig("widths must be >= 1");
    return cfg;
}

NtkParams sample_params(const NtkConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    NtkParams params;
    for (std::size_t l = 0; l + 1 < cfg.widths.size(); ++l) {
        Tensor w(Shape{cfg.widths[l], cfg.widths[l + 1]});
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.normal();
        params.weights.push_back(std::move(w));
        if (cfg.beta > 0.0) {
            Tensor b(Shape{cfg.widths[l + 1]});
            for (std::size_t i = 0; i < b.size(); ++i) b[i] = rng.normal();
            params.biases.push_back(std::move(b));
        }
    }
    return params;
}

namespace {

struct ForwardTrace {
    std::vector<Tensor> activations;     // A_0 .. A_{L-1} (post-nonlinearity)
    std::vector<Tensor> preactivations;  // pre_1 .. pre_L
};

Tensor forward_traced(const NtkConfig& cfg, const NtkParams& params,
                      const Tensor& inputs, ForwardTrace* trace) {
    if (inputs.rank() != 2 || inputs.dim(1) != cfg.widths[0])
        throw ShapeMismatch("ntk inputs " + inputs.shape().str() + " vs n_0 = " +
                            std::to_string(cfg.widths[0]));
    const std::size_t L = cfg.depth();
    Tensor a = inputs;
    for (std::size_t l = 0; l < L; ++l) {
        if (trace) trace->activations.push_back(a);
        Tensor pre = matmul(a, params.weights[l]);
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.widths[l]));
        pre.scale_inplace(scale);
        if (cfg.beta > 0.0) {
            const Tensor& b = params.biases[l];
            const std::size_t n = pre.dim(1);
            for (std::size_t r = 0; r < pre.dim(0); ++r)
                for (std::size_t c = 0; c < n; ++c)
                    pre[r * n + c] += cfg.beta * b[c];
        }
        if (trace) trace->preactivations.push_back(pre);
        if (l + 1 < L) {
            Tensor act(pre.shape());
            for (std::size_t i = 0; i < pre.size(); ++i)
                act[i] = pre[i] > 0.0 ? pre[i] : 0.0;
            a = std::move(act);
        } else {
            a = std::move(pre);
        }
    }
    return a;
}

// Writes the flattened parameter gradient of output coordinate `m` for the
// single sample in `trace` (batch row `row`) into `out`.
void jacobian_row(const NtkConfig& cfg, const NtkParams& params,
                  const ForwardTrace& trace, std::size_t row, std::size_t m,
                  double* out) {
    const std::size_t L = cfg.depth();
    // delta over layer outputs, starting as one-hot at the output layer
    std::vector<double> delta(cfg.widths[L], 0.0);
    delta[m] = 1.0;
    for (std::size_t l = L; l-- > 0;) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.widths[l]));
        const std::size_t nl = cfg.widths[l], nl1 = cfg.widths[l + 1];
        const Tensor& a = trace.activations[l];
        // parameter offset of layer l
        std::size_t off = 0;
        for (std::size_t q = 0; q < l; ++q) {
            off += cfg.widths[q] * cfg.widths[q + 1];
            if (cfg.beta > 0.0) off += cfg.widths[q + 1];
        }
        for (std::size_t i = 0; i < nl; ++i) {
            const double ai = a[row * nl + i] * scale;
            for (std::size_t j = 0; j < nl1; ++j)
                out[off + i * nl1 + j] = ai * delta[j];
        }
        if (cfg.beta > 0.0) {
            const std::size_t boff = off + nl * nl1;
            for (std::size_t j = 0; j < nl1; ++j)
                out[boff + j] = cfg.beta * delta[j];
        }
        if (l == 0) break;
        // propagate delta through W_l and the ReLU of layer l
        std::vector<double> prev(nl, 0.0);
        const Tensor& pre = trace.preactivations[l - 1];
        for (std::size_t i = 0; i < nl; ++i) {
            if (pre[row * nl + i] <= 0.0) continue;  // relu gate
            double acc = 0.0;
            for (std::size_t j = 0; j < nl1; ++j)
                acc += params.weights[l][i * nl1 + j] * delta[j];
            prev[i] = acc * scale;
        }
        delta = std::move(prev);
    }
}

}  // namespace

Tensor ntk_forward(const NtkConfig& cfg, const NtkParams& params,
                   const Tensor& inputs) {
    return forward_traced(cfg, params, inputs, nullptr);
}

double KernelMatrix::max_asymmetry() const {
    const std::size_t n = matrix.dim(0);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            m = std::max(m, std::fabs(matrix[i * n + j] - matrix[j * n + i]));
    return m;
}

double KernelMatrix::trace() const {
    const std::size_t n = matrix.dim(0);
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) t += matrix[i * n + i];
    return t;
}

double KernelMatrix::min_quadratic_form(std::size_t samples, Rng& rng) const {
    const std::size_t n = matrix.dim(0);
    double worst = std::numeric_limits<double>::infinity();
    std::vector<double> x(n);
    for (std::size_t s = 0; s < samples; ++s) {
        double norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
            norm2 += x[i] * x[i];
        }
        double q = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) row += matrix[i * n + j] * x[j];
            q += x[i] * row;
        }
        worst = std::min(worst, q / norm2);
    }
    return worst;
}

KernelMatrix empirical_ntk(const NtkConfig& cfg, const NtkParams& params,
                           const Tensor& inputs) {
    const std::size_t N = inputs.dim(0);
    const std::size_t nL = cfg.widths.back();
    const std::size_t P = cfg.param_count();
    if (N * nL * P > cfg.resource_budget)
        throw ResourceLimit("jacobian needs " + std::to_string(N * nL * P) +
                            " doubles, budget is " +
                            std::to_string(cfg.resource_budget));

    ForwardTrace trace;
    forward_traced(cfg, params, inputs, &trace);

    Tensor jac(Shape{N * nL, P});
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t m = 0; m < nL; ++m)
            jacobian_row(cfg, params, trace, i, m, jac.data() + (i * nL + m) * P);

    KernelMatrix k;
    k.matrix = matmul_nt(jac, jac);
    k.outputs_per_input = nL;
    return k;
}

NngpCovariance nngp_covariance(const NtkConfig& cfg, const Tensor& inputs,
                               std::size_t mc_samples, Rng& rng) {
    if (mc_samples < 1) throw InvalidConfig("mc_samples must be >= 1");
    const std::size_t N = inputs.dim(0);
    const std::size_t n0 = cfg.widths[0];
    if (inputs.rank() != 2 || inputs.dim(1) != n0)
        throw ShapeMismatch("nngp inputs " + inputs.shape().str());

    NngpCovariance cov;
    cov.beta = cfg.beta;

    // layer 1: closed form
    Tensor sigma1(Shape{N, N});
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            double dot = 0.0;
            for (std::size_t d = 0; d < n0; ++d)
                dot += inputs[i * n0 + d] * inputs[j * n0 + d];
            sigma1[i * N + j] = dot / static_cast<double>(n0) + cfg.beta * cfg.beta;
        }
    cov.sigma.push_back(sigma1);
    cov.standard_error.push_back(Tensor(Shape{N, N}));

    for (std::size_t layer = 1; layer < cfg.depth(); ++layer) {
        const Tensor& prev = cov.sigma.back();
        Tensor next(Shape{N, N}), se(Shape{N, N});
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = i; j < N; ++j) {
                const double sii = prev[i * N + i], sjj = prev[j * N + j],
                             sij = prev[i * N + j];
                const double a = std::sqrt(std::max(sii, 0.0));
                const double c = a > 0.0 ? sij / a : 0.0;
                double d2 = sjj - c * c;
                if (d2 < -1e-8 * std::max(1.0, std::max(sii, sjj)))
                    cov.warnings.push_back(
                        "layer " + std::to_string(layer + 1) + " pair (" +
                        std::to_string(i) + "," + std::to_string(j) +
                        ") clamped: residual variance " + std::to_string(d2));
                const double d = std::sqrt(std::max(d2, 0.0));
                double sum = 0.0, sum_sq = 0.0;
                for (std::size_t s = 0; s < mc_samples; ++s) {
                    const double z1 = rng.normal(), z2 = rng.normal();
                    const double u = a * z1;
                    const double v = c * z1 + d * z2;
                    const double prod = (u > 0.0 ? u : 0.0) * (v > 0.0 ? v : 0.0);
                    sum += prod;
                    sum_sq += prod * prod;
                }
                const double mean = sum / static_cast<double>(mc_samples);
                const double var =
                    std::max(0.0, sum_sq / static_cast<double>(mc_samples) -
                                      mean * mean);
                const double entry = mean + cfg.beta * cfg.beta;
                next[i * N + j] = entry;
                next[j * N + i] = entry;
                const double err = std::sqrt(var / static_cast<double>(mc_samples));
                se[i * N + j] = err;
                se[j * N + i] = err;
            }
        }
        cov.sigma.push_back(std::move(next));
        cov.standard_error.push_back(std::move(se));
    }
    return cov;
}

WidthConvergenceReport width_convergence_study(const NtkConfig& base,
                                               const std::vector<std::size_t>& widths,
                                               std::size_t seeds,
                                               const Tensor& inputs,
                                               double beta_alt) {
    if (widths.size() < 2) throw InvalidConfig("need >= 2 widths");
    if (seeds < 5) throw InvalidConfig("need >= 5 seeds");

    WidthConvergenceReport report;
    report.widths = widths;
    report.beta_alt = beta_alt;

    const std::size_t hidden_layers = base.depth() > 0 ? base.depth() - 1 : 0;
    if (hidden_layers == 0)
        throw InvalidConfig("width study needs at least one hidden layer");

    std::vector<std::vector<Tensor>> kernels_per_width;
    for (std::size_t w : widths) {
        NtkConfig cfg = make_mlp_config(base.widths.front(), w, hidden_layers,
                                        base.widths.back(), base.beta);
        cfg.resource_budget = base.resource_budget;
        std::vector<Tensor> kernels;
        for (std::size_t s = 0; s < seeds; ++s) {
            const NtkParams params = sample_params(cfg, 1000 + s);
            kernels.push_back(empirical_ntk(cfg, params, inputs).matrix);
        }
        const std::size_t n = kernels[0].dim(0);
        Tensor mean(Shape{n, n}), sd(Shape{n, n});
        for (const Tensor& k : kernels) mean.add_inplace(k);
        mean.scale_inplace(1.0 / static_cast<double>(seeds));
        for (const Tensor& k : kernels)
            for (std::size_t i = 0; i < sd.size(); ++i) {
                const double dlt = k[i] - mean[i];
                sd[i] += dlt * dlt;
            }
        double mean_std = 0.0, max_std = 0.0;
        for (std::size_t i = 0; i < sd.size(); ++i) {
            const double s = std::sqrt(sd[i] / static_cast<double>(seeds - 1));
            mean_std += s;
            max_std = std::max(max_std, s);
        }
        mean_std /= static_cast<double>(sd.size());
        report.mean_entry_std.push_back(mean_std);
        report.max_entry_std.push_back(max_std);
        report.mean_kernels.push_back(std::move(mean));
        kernels_per_width.push_back(std::move(kernels));
    }

    std::size_t inversions = 0;
    for (std::size_t i = 1; i < report.mean_entry_std.size(); ++i)
        if (report.mean_entry_std[i] >= report.mean_entry_std[i - 1]) ++inversions;
    report.monotone_with_one_inversion = inversions <= 1;

    // beta comparisons at the largest width
    {
        const std::size_t w = widths.back();
        NtkConfig cfg_alt = make_mlp_config(base.widths.front(), w, hidden_layers,
                                            base.widths.back(), beta_alt);
        cfg_alt.resource_budget = base.resource_budget;
        const std::size_t n = report.mean_kernels.back().dim(0);
        Tensor mean_alt(Shape{n, n});
        for (std::size_t s = 0; s < seeds; ++s) {
            const NtkParams params = sample_params(cfg_alt, 1000 + s);
            mean_alt.add_inplace(empirical_ntk(cfg_alt, params, inputs).matrix);
        }
        mean_alt.scale_inplace(1.0 / static_cast<double>(seeds));
        report.beta_pair_distance =
            max_abs_diff(report.mean_kernels.back(), mean_alt);

        // two disjoint-seed ensembles at base beta
        NtkConfig cfg = make_mlp_config(base.widths.front(), w, hidden_layers,
                                        base.widths.back(), base.beta);
        cfg.resource_budget = base.resource_budget;
        Tensor mean_a(Shape{n, n}), mean_b(Shape{n, n});
        std::vector<Tensor> ens_a, ens_b;
        for (std::size_t s = 0; s < seeds; ++s) {
            ens_a.push_back(
                empirical_ntk(cfg, sample_params(cfg, 50000 + s), inputs).matrix);
            ens_b.push_back(
                empirical_ntk(cfg, sample_params(cfg, 90000 + s), inputs).matrix);
            mean_a.add_inplace(ens_a.back());
            mean_b.add_inplace(ens_b.back());
        }
        mean_a.scale_inplace(1.0 / static_cast<double>(seeds));
        mean_b.scale_inplace(1.0 / static_cast<double>(seeds));
        report.twin_ensemble_distance = max_abs_diff(mean_a, mean_b);

        // 3x the largest combined standard error of the mean over entries
        double max_se = 0.0;
        for (std::size_t i = 0; i < mean_a.size(); ++i) {
            double va = 0.0, vb = 0.0;
            for (std::size_t s = 0; s < seeds; ++s) {
                va += (ens_a[s][i] - mean_a[i]) * (ens_a[s][i] - mean_a[i]);
                vb += (ens_b[s][i] - mean_b[i]) * (ens_b[s][i] - mean_b[i]);
            }
            va /= static_cast<double>(seeds - 1) * static_cast<double>(seeds);
            vb /= static_cast<double>(seeds - 1) * static_cast<double>(seeds);
            max_se = std::max(max_se, std::sqrt(va + vb));
        }
        report.twin_ensemble_tolerance = 3.0 * max_se;
    }
    return report;
}

DriftReport training_drift_study(const NtkConfig& base,
                                 const std::vector<std::size_t>& widths,
                                 const Tensor& inputs,
                                 const std::vector<double>& targets,
                                 std::size_t steps, double learning_rate,
                                 std::size_t probe_inputs, std::uint64_t seed) {
    const std::size_t M = inputs.dim(0);
    if (targets.size() != M)
        throw ShapeMismatch("drift targets " + std::to_string(targets.size()) +
                            " vs inputs " + std::to_string(M));
    if (base.widths.back() != 1)
        throw InvalidConfig("drift study uses a scalar output head");
    probe_inputs = std::min(probe_inputs, M);
    const std::size_t hidden_layers = base.depth() > 0 ? base.depth() - 1 : 0;
    if (hidden_layers == 0)
        throw InvalidConfig("drift study needs at least one hidden layer");

    // probe subset for kernel evaluation
    Tensor probe(Shape{probe_inputs, inputs.dim(1)});
    std::copy(inputs.data(), inputs.data() + probe.size(), probe.data());

    DriftReport report;
    report.widths = widths;
    report.steps = steps;
    report.learning_rate = learning_rate;
    report.probe_inputs = probe_inputs;

    for (std::size_t w : widths) {
        NtkConfig cfg = make_mlp_config(base.widths.front(), w, hidden_layers, 1,
                                        base.beta);
        cfg.resource_budget = base.resource_budget;
        NtkParams params = sample_params(cfg, seed);

        const Tensor before = empirical_ntk(cfg, params, probe).matrix;

        // full-batch gradient descent on MSE
        const std::size_t L = cfg.depth();
        for (std::size_t step = 0; step < steps; ++step) {
            ForwardTrace trace;
            const Tensor out = forward_traced(cfg, params, inputs, &trace);
            Tensor delta(Shape{M, 1});
            for (std::size_t i = 0; i < M; ++i)
                delta[i] = (out[i] - targets[i]) / static_cast<double>(M);
            // backprop through the stack, updating as we go
            Tensor cur = delta;
            for (std::size_t l = L; l-- > 0;) {
                const double scale =
                    1.0 / std::sqrt(static_cast<double>(cfg.widths[l]));
                Tensor dw = matmul_tn(trace.activations[l], cur);
                dw.scale_inplace(scale);
                Tensor db;
                if (cfg.beta > 0.0) {
                    db = Tensor(Shape{cfg.widths[l + 1]});
                    const std::size_t n = cur.dim(1);
                    for (std::size_t r = 0; r < cur.dim(0); ++r)
                        for (std::size_t c = 0; c < n; ++c)
                            db[c] += cfg.beta * cur[r * n + c];
                }
                if (l > 0) {
                    Tensor prev = matmul_nt(cur, params.weights[l]);
                    prev.scale_inplace(scale);
                    const Tensor& pre = trace.preactivations[l - 1];
                    for (std::size_t i = 0; i < prev.size(); ++i)
                        if (pre[i] <= 0.0) prev[i] = 0.0;
                    cur = std::move(prev);
                }
                for (std::size_t i = 0; i < dw.size(); ++i)
                    params.weights[l][i] -= learning_rate * dw[i];
                if (cfg.beta > 0.0)
                    for (std::size_t i = 0; i < db.size(); ++i)
                        params.biases[l][i] -= learning_rate * db[i];
            }
        }

        const Tensor after = empirical_ntk(cfg, params, probe).matrix;
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < before.size(); ++i) {
            const double d = after[i] - before[i];
            num += d * d;
            den += before[i] * before[i];
        }
        report.relative_drift.push_back(std::sqrt(num) / std::sqrt(den));
    }

    report.decreasing_with_width = true;
    for (std::size_t i = 1; i < report.relative_drift.size(); ++i)
        if (report.relative_drift[i] >= report.relative_drift[i - 1])
            report.decreasing_with_width = false;
    return report;
}

std::string width_report_to_json(const WidthConvergenceReport& r) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["study"] = "width_convergence";
    j["widths"] = r.widths;
    j["mean_entry_std"] = r.mean_entry_std;
    j["max_entry_std"] = r.max_entry_std;
    j["monotone_with_one_inversion"] = r.monotone_with_one_inversion;
    j["beta_alt"] = r.beta_alt;
    j["beta_pair_distance"] = r.beta_pair_distance;
    j["twin_ensemble_distance"] = r.twin_ensemble_distance;
    j["twin_ensemble_tolerance"] = r.twin_ensemble_tolerance;
    return j.dump(2);
}

std::string drift_report_to_json(const DriftReport& r) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["study"] = "training_drift";
    j["widths"] = r.widths;
    j["relative_drift"] = r.relative_drift;
    j["decreasing_with_width"] = r.decreasing_with_width;
    j["steps"] = r.steps;
    j["learning_rate"] = r.learning_rate;
    j["probe_inputs"] = r.probe_inputs;
    return j.dump(2);
}

void kernel_to_csv(const Tensor& kernel, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.precision(17);
    const std::size_t n = kernel.dim(0), m = kernel.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (j) os << ",";
            os << kernel[i * m + j];
        }
        os << "\n";
    }
    if (!os) throw IoError("short write to '" + path + "'");
}

}  // namespace zbnn
