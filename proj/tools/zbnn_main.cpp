// zbnn command line: training, scalar sweeps, robustness certificates,
// fairness reports, region rasters, ray profiles, activation-pattern search,
// and NTK studies. Every command writes a JSON run manifest next to its
// primary output.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zbnn/datasets.hpp"
#include "zbnn/geometry.hpp"
#include "zbnn/image_io.hpp"
#include "zbnn/network.hpp"
#include "zbnn/ntk.hpp"
#include "zbnn/training.hpp"
#include "zbnn/verify.hpp"
#include "zbnn/version.hpp"

using json = nlohmann::json;
using namespace zbnn;

namespace {

// exit codes shared by all commands
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitInvariance = 5;
constexpr int kExitFalsified = 6;
constexpr int kExitInapplicable = 7;

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open '" + tmp + "' for writing");
        os << content;
        if (!os) throw IoError("short write to '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
}

std::uint32_t file_crc32(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    std::string blob((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
    return crc32_ieee(reinterpret_cast<const unsigned char*>(blob.data()),
                      blob.size());
}

struct Manifest {
    std::string command;
    json config = json::object();
    json input_digests = json::object();
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void add_input(const std::string& path) {
        input_digests[path] = file_crc32(path);
    }
    void write(int exit_status) const {
        if (outputs.empty()) return;
        json j;
        j["schema_version"] = kReportSchemaVersion;
        j["command"] = command;
        j["config"] = config;
        j["input_digests"] = input_digests;
        j["outputs"] = outputs;
        j["tool_version"] = kVersion;
        j["wall_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        j["exit_status"] = exit_status;
        write_text_atomic(outputs.front() + ".manifest.json", j.dump(2));
    }
};

Network build_fcn(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                  std::size_t classes, bool with_bias, const std::string& name) {
    Network net;
    net.name = name;
    net.class_count = classes;
    net.zero_bias = !with_bias;
    net.input_shape = Shape{input_dim};
    std::size_t in = input_dim;
    for (std::size_t h : hidden) {
        LinearLayer lin;
        lin.weights = Tensor(Shape{h, in});
        if (with_bias) lin.bias = Tensor(Shape{h});
        net.layers.push_back(Layer{std::move(lin)});
        net.layers.push_back(Layer{ReluLayer{}});
        in = h;
    }
    LinearLayer out;
    out.weights = Tensor(Shape{classes, in});
    if (with_bias) out.bias = Tensor(Shape{classes});
    net.layers.push_back(Layer{std::move(out)});
    return net;
}

Network build_cnn(std::size_t rows, std::size_t cols, std::size_t classes,
                  bool with_bias, const std::string& name) {
    Network net;
    net.name = name;
    net.class_count = classes;
    net.zero_bias = !with_bias;
    net.input_shape = Shape{1, rows, cols};
    auto conv = [&](std::size_t in_ch, std::size_t out_ch) {
        ConvLayer c;
        c.kernel = Tensor(Shape{out_ch, in_ch, 3, 3});
        if (with_bias) c.bias = Tensor(Shape{out_ch});
        c.stride = 1;
        c.padding = 1;
        return Layer{std::move(c)};
    };
    net.layers.push_back(conv(1, 8));
    net.layers.push_back(Layer{ReluLayer{}});
    net.layers.push_back(Layer{PoolLayer{PoolKind::Max, 2, 2}});
    net.layers.push_back(conv(8, 16));
    net.layers.push_back(Layer{ReluLayer{}});
    net.layers.push_back(Layer{PoolLayer{PoolKind::Max, 2, 2}});
    net.layers.push_back(Layer{FlattenLayer{}});
    LinearLayer out;
    out.weights = Tensor(Shape{classes, 16 * (rows / 4) * (cols / 4)});
    if (with_bias) out.bias = Tensor(Shape{classes});
    net.layers.push_back(Layer{std::move(out)});
    return net;
}

double accuracy_of_view(const Network& net, const LabeledDataset& view) {
    return evaluate_accuracy(net, view);
}

bool bitwise_equal(double a, double b) {
    std::uint64_t ua, ub;
    std::memcpy(&ua, &a, 8);
    std::memcpy(&ub, &b, 8);
    return ua == ub;
}

int run_train(Manifest& manifest, const std::string& data_dir,
              const std::string& out_path, const std::string& arch,
              std::vector<std::size_t> hidden, bool with_bias, TrainConfig cfg,
              const std::string& name) {
    const DatasetPair data = load_idx_dir(data_dir);
    manifest.add_input(data_dir + "/train-images-idx3-ubyte");
    manifest.add_input(data_dir + "/train-labels-idx1-ubyte");

    Network net;
    if (arch == "fcn") {
        net = build_fcn(data.train.rows * data.train.cols, hidden,
                        data.train.class_count, with_bias, name);
    } else if (arch == "cnn") {
        net = build_cnn(data.train.rows, data.train.cols, data.train.class_count,
                        with_bias, name);
    } else {
        std::cerr << "unknown arch '" << arch << "'\n";
        return kExitConfig;
    }
    initialize_he(net, cfg.seed);

    TrainRun run = train(net, data.train, data.test, cfg);
    save_checkpoint(net, out_path);
    run.checkpoint_path = out_path;
    write_text_atomic(out_path + ".run.json", train_run_to_json(run));
    manifest.outputs = {out_path, out_path + ".run.json"};
    std::cout << "final test accuracy " << run.test_accuracy.back() << "\n";
    return kExitOk;
}

int run_scalar_sweep(Manifest& manifest, const std::string& ckpt,
                     const std::string& data_dir, std::vector<double> scalars,
                     const std::string& out_prefix) {
    if (scalars.empty()) scalars = kTable1Scalars;
    const Network net = load_checkpoint(ckpt);
    manifest.add_input(ckpt);
    const DatasetPair data = load_idx_dir(data_dir);

    std::vector<double> accuracies;
    for (const LabeledDataset& view : scalar_sweep_views(data.test, scalars))
        accuracies.push_back(accuracy_of_view(net, view));

    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["checkpoint"] = ckpt;
    j["zero_bias"] = net.zero_bias;
    j["scalars"] = scalars;
    j["accuracies"] = accuracies;

    std::string csv = "scalar,accuracy\n";
    for (std::size_t i = 0; i < scalars.size(); ++i)
        csv += std::to_string(scalars[i]) + "," + std::to_string(accuracies[i]) + "\n";

    bool invariant = true;
    for (double a : accuracies)
        if (!bitwise_equal(a, accuracies[0])) invariant = false;
    j["invariant"] = invariant;

    write_text_atomic(out_prefix + ".json", j.dump(2));
    write_text_atomic(out_prefix + ".csv", csv);
    manifest.outputs = {out_prefix + ".json", out_prefix + ".csv"};

    for (std::size_t i = 0; i < scalars.size(); ++i)
        std::cout << "s=" << scalars[i] << " accuracy=" << accuracies[i] << "\n";
    if (net.zero_bias && !invariant) {
        std::cerr << "zero-bias checkpoint failed scalar invariance\n";
        return kExitInvariance;
    }
    return kExitOk;
}

int run_certify(Manifest& manifest, const std::string& ckpt,
                const std::string& mode, const std::string& data_dir,
                const std::vector<std::size_t>& indices,
                std::vector<double> scalars, std::size_t lambdas,
                std::size_t samples, std::uint64_t seed,
                const std::string& out_path, const std::string& image_prefix) {
    const Network net = load_checkpoint(ckpt);
    manifest.add_input(ckpt);
    const DatasetPair data = load_idx_dir(data_dir);

    auto sample_of = [&](std::size_t i) {
        if (i >= data.test.size())
            throw InvalidConfig("index " + std::to_string(i) + " out of range");
        return data.test.sample(i).reshaped(net.input_shape);
    };

    Certificate cert;
    if (mode == "directional") {
        if (indices.size() != 1) {
            std::cerr << "directional mode needs exactly one --indices entry\n";
            return kExitConfig;
        }
        if (scalars.empty()) scalars = kTable1Scalars;
        cert = certify_directional(net, sample_of(indices[0]), scalars);
    } else if (mode == "interpolation") {
        if (indices.size() != 2) {
            std::cerr << "interpolation mode needs exactly two --indices entries\n";
            return kExitConfig;
        }
        const Tensor x1 = sample_of(indices[0]), x2 = sample_of(indices[1]);
        cert = certify_interpolation(net, x1, x2, lambdas);
        if (!image_prefix.empty() && data.test.rows > 1) {
            write_pgm(image_prefix + "_left.pgm", x1.reshaped(Shape{data.test.rows * data.test.cols}),
                      data.test.rows, data.test.cols);
            write_pgm(image_prefix + "_mid.pgm",
                      lerp(x1, x2, 0.5).reshaped(Shape{data.test.rows * data.test.cols}),
                      data.test.rows, data.test.cols);
            write_pgm(image_prefix + "_right.pgm", x2.reshaped(Shape{data.test.rows * data.test.cols}),
                      data.test.rows, data.test.cols);
        }
    } else if (mode == "convex") {
        if (indices.size() < 2) {
            std::cerr << "convex mode needs at least two --indices entries\n";
            return kExitConfig;
        }
        std::vector<Tensor> vertices;
        for (std::size_t i : indices) vertices.push_back(sample_of(i));
        Rng rng(seed);
        cert = certify_convex(net, vertices, samples, rng);
    } else {
        std::cerr << "unknown certify mode '" << mode << "'\n";
        return kExitConfig;
    }

    write_text_atomic(out_path, certificate_to_json(cert));
    manifest.outputs = {out_path};
    std::cout << cert.kind << ": " << verdict_name(cert.verdict);
    if (!cert.reason.empty()) std::cout << " (" << cert.reason << ")";
    std::cout << "\n";
    if (cert.verdict == Verdict::Falsified) return kExitFalsified;
    if (cert.verdict == Verdict::Inapplicable) return kExitInapplicable;
    return kExitOk;
}

int run_fairness(Manifest& manifest, const std::string& ckpt,
                 const std::string& out_path) {
    const Network net = load_checkpoint(ckpt);
    manifest.add_input(ckpt);
    const FairnessReport report = fairness_zero_image(net);
    write_text_atomic(out_path, fairness_to_json(report, net));
    manifest.outputs = {out_path};
    std::cout << "max deviation from uniform: " << report.max_deviation
              << ", entropy: " << report.entropy << "\n";
    return kExitOk;
}

int run_regions(Manifest& manifest, const std::string& ckpt,
                const std::vector<double>& bounds, std::size_t width,
                std::size_t height, const std::string& out_prefix) {
    const Network net = load_checkpoint(ckpt);
    manifest.add_input(ckpt);
    RasterBounds rb;
    if (!bounds.empty()) {
        if (bounds.size() != 4) {
            std::cerr << "--bounds needs xmin,xmax,ymin,ymax\n";
            return kExitConfig;
        }
        rb = {bounds[0], bounds[1], bounds[2], bounds[3]};
    }
    const RegionRaster raster = rasterize_regions(net, rb, width, height);
    export_ppm(raster, out_prefix + ".ppm");
    export_csv(raster, out_prefix + ".csv");
    manifest.outputs = {out_prefix + ".ppm", out_prefix + ".csv"};
    std::cout << "distinct regions: " << raster.region_count << "\n";
    return kExitOk;
}

int run_ray(Manifest& manifest, const std::string& ckpt,
            const std::vector<double>& direction, const std::vector<double>& radii,
            const std::string& out_path) {
    const Network net = load_checkpoint(ckpt);
    manifest.add_input(ckpt);
    if (direction.size() != 2) {
        std::cerr << "--direction needs dx,dy\n";
        return kExitConfig;
    }
    const double norm =
        std::sqrt(direction[0] * direction[0] + direction[1] * direction[1]);
    if (norm == 0.0) {
        std::cerr << "--direction must be nonzero\n";
        return kExitConfig;
    }
    std::vector<double> rs = radii;
    if (rs.empty())
        for (int i = 1; i <= 100; ++i) rs.push_back(0.02 * i);
    const RayProfile profile =
        ray_profile(net, direction[0] / norm, direction[1] / norm, rs);
    export_csv(profile, out_path);
    manifest.outputs = {out_path};
    return kExitOk;
}

int run_nap_search(Manifest& manifest, const std::string& ckpt,
                   const std::string& data_dir, bool same_class,
                   std::size_t limit, const std::string& out_path) {
    const Network net = load_checkpoint(ckpt);
    manifest.add_input(ckpt);
    const DatasetPair data = load_idx_dir(data_dir);

    const PairSearchResult result =
        search_same_nap_pairs(net, data.test, same_class, limit);

    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["checkpoint"] = ckpt;
    j["same_class_required"] = same_class;
    j["group_count"] = result.group_count;
    json pairs = json::array();
    for (const auto& [a, b] : result.pairs) pairs.push_back({a, b});
    j["pairs"] = pairs;
    json hist = json::object();
    for (const auto& [size, count] : result.group_size_histogram)
        hist[std::to_string(size)] = count;
    j["group_size_histogram"] = hist;

    write_text_atomic(out_path, j.dump(2));
    manifest.outputs = {out_path};
    std::cout << result.pairs.size() << " pairs across " << result.group_count
              << " groups\n";
    return kExitOk;
}

int run_ntk(Manifest& manifest, const std::string& study,
            std::vector<std::size_t> widths, std::size_t seeds,
            std::size_t hidden_layers, std::size_t input_count,
            std::size_t input_dim, double beta, std::size_t steps,
            const std::string& data_dir, const std::string& out_prefix) {
    Rng rng(20240u);

    if (study == "l1") {
        // direct check of the depth-1 closed form
        Tensor inputs(Shape{input_count, input_dim});
        for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i] = rng.normal();
        double worst = 0.0;
        for (std::size_t s = 0; s < seeds; ++s) {
            NtkConfig cfg = make_mlp_config(input_dim, 1, 0, 1, beta);
            const KernelMatrix k =
                empirical_ntk(cfg, sample_params(cfg, 77 + s), inputs);
            for (std::size_t i = 0; i < input_count; ++i)
                for (std::size_t j = 0; j < input_count; ++j) {
                    double dot = 0.0;
                    for (std::size_t d = 0; d < input_dim; ++d)
                        dot += inputs[i * input_dim + d] * inputs[j * input_dim + d];
                    const double expect =
                        dot / static_cast<double>(input_dim) + beta * beta;
                    worst = std::max(
                        worst, std::fabs(k.matrix[i * input_count + j] - expect));
                }
        }
        json j;
        j["schema_version"] = kReportSchemaVersion;
        j["study"] = "l1_closed_form";
        j["seeds"] = seeds;
        j["beta"] = beta;
        j["max_abs_deviation"] = worst;
        write_text_atomic(out_prefix + ".json", j.dump(2));
        manifest.outputs = {out_prefix + ".json"};
        std::cout << "max |K - closed form| = " << worst << "\n";
        return kExitOk;
    }

    if (study == "convergence") {
        Tensor inputs(Shape{input_count, input_dim});
        for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i] = rng.normal();
        const NtkConfig base = make_mlp_config(input_dim, widths[0], hidden_layers, 1, beta);
        const WidthConvergenceReport report =
            width_convergence_study(base, widths, seeds, inputs);
        write_text_atomic(out_prefix + ".json", width_report_to_json(report));
        manifest.outputs = {out_prefix + ".json"};
        for (std::size_t i = 0; i < report.widths.size(); ++i) {
            kernel_to_csv(report.mean_kernels[i],
                          out_prefix + "_w" + std::to_string(report.widths[i]) + ".csv");
            manifest.outputs.push_back(out_prefix + "_w" +
                                       std::to_string(report.widths[i]) + ".csv");
            std::cout << "width " << report.widths[i] << ": mean entry std "
                      << report.mean_entry_std[i] << "\n";
        }
        return kExitOk;
    }

    if (study == "drift") {
        Tensor inputs;
        std::vector<double> targets;
        if (!data_dir.empty()) {
            const DatasetPair data = load_idx_dir(data_dir);
            const std::size_t M = std::min<std::size_t>(input_count, data.train.size());
            const std::size_t d = data.train.rows * data.train.cols;
            inputs = Tensor(Shape{M, d});
            std::copy(data.train.inputs.data(), data.train.inputs.data() + M * d,
                      inputs.data());
            for (std::size_t i = 0; i < M; ++i)
                targets.push_back(static_cast<double>(data.train.labels[i]) / 10.0 - 0.45);
        } else {
            inputs = Tensor(Shape{input_count, input_dim});
            for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i] = rng.normal();
            for (std::size_t i = 0; i < input_count; ++i)
                targets.push_back(rng.uniform(-1.0, 1.0));
        }
        const NtkConfig base =
            make_mlp_config(inputs.dim(1), widths[0], hidden_layers, 1, beta);
        const DriftReport report = training_drift_study(
            base, widths, inputs, targets, steps, 0.2, 20, 4242u);
        write_text_atomic(out_prefix + ".json", drift_report_to_json(report));
        manifest.outputs = {out_prefix + ".json"};
        for (std::size_t i = 0; i < report.widths.size(); ++i)
            std::cout << "width " << report.widths[i] << ": drift "
                      << report.relative_drift[i] << "\n";
        return kExitOk;
    }

    std::cerr << "unknown ntk study '" << study << "'\n";
    return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
    exec::init_from_env();

    CLI::App app{"zero-bias neural network toolkit"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a network on IDX data");
    std::string data_dir, out_path, arch = "fcn", name = "net";
    std::vector<std::size_t> hidden{256};
    bool with_bias = false;
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 512;
    cfg.learning_rate = 0.01;
    std::string optimizer = "adadelta";
    train_cmd->set_config("--config", "", "TOML config file");
    train_cmd->add_option("--data", data_dir, "IDX data directory")->required();
    train_cmd->add_option("--out", out_path, "checkpoint output path")->required();
    train_cmd->add_option("--arch", arch, "fcn|cnn");
    train_cmd->add_option("--hidden", hidden, "hidden widths (fcn)")->delimiter(',');
    train_cmd->add_flag("--with-bias", with_bias, "train the biased twin");
    train_cmd->add_option("--epochs", cfg.epochs);
    train_cmd->add_option("--batch-size", cfg.batch_size);
    train_cmd->add_option("--lr", cfg.learning_rate);
    train_cmd->add_option("--optimizer", optimizer, "adadelta|sgd");
    train_cmd->add_option("--momentum", cfg.momentum);
    train_cmd->add_option("--rho", cfg.rho);
    train_cmd->add_option("--eps", cfg.eps);
    train_cmd->add_option("--seed", cfg.seed);
    train_cmd->add_option("--weight-decay", cfg.weight_decay);
    train_cmd->add_option("--augment", cfg.scalar_augmentation,
                          "scalar augmentation list")->delimiter(',');
    train_cmd->add_option("--name", name, "network name");

    // scalar-sweep
    auto* sweep_cmd = app.add_subcommand("scalar-sweep",
                                         "accuracy across scalar multipliers");
    std::string sweep_ckpt, sweep_data, sweep_out = "sweep";
    std::vector<double> sweep_scalars;
    sweep_cmd->add_option("--ckpt", sweep_ckpt)->required();
    sweep_cmd->add_option("--data", sweep_data)->required();
    sweep_cmd->add_option("--scalars", sweep_scalars, "defaults to the 11-entry list")->delimiter(',');
    sweep_cmd->add_option("--out", sweep_out, "output prefix");

    // certify
    auto* cert_cmd = app.add_subcommand("certify", "emit a robustness certificate");
    std::string cert_ckpt, cert_mode, cert_data, cert_out = "certificate.json",
                cert_images;
    std::vector<std::size_t> cert_indices;
    std::vector<double> cert_scalars;
    std::size_t cert_lambdas = 1000, cert_samples = 1000;
    std::uint64_t cert_seed = 1;
    cert_cmd->add_option("--ckpt", cert_ckpt)->required();
    cert_cmd->add_option("--mode", cert_mode, "directional|interpolation|convex")
        ->required();
    cert_cmd->add_option("--data", cert_data, "IDX data directory")->required();
    cert_cmd->add_option("--indices", cert_indices, "test-set indices")->required()->delimiter(',');
    cert_cmd->add_option("--scalars", cert_scalars)->delimiter(',');
    cert_cmd->add_option("--lambdas", cert_lambdas);
    cert_cmd->add_option("--samples", cert_samples);
    cert_cmd->add_option("--seed", cert_seed);
    cert_cmd->add_option("--out", cert_out);
    cert_cmd->add_option("--export-images", cert_images,
                         "PGM triplet path prefix (interpolation)");

    // fairness
    auto* fair_cmd = app.add_subcommand("fairness", "zero-image fairness report");
    std::string fair_ckpt, fair_out = "fairness.json";
    fair_cmd->add_option("--ckpt", fair_ckpt)->required();
    fair_cmd->add_option("--out", fair_out);

    // regions
    auto* regions_cmd = app.add_subcommand("regions", "linear-region raster (2D nets)");
    std::string regions_ckpt, regions_out = "regions";
    std::vector<double> regions_bounds;
    std::size_t regions_w = 512, regions_h = 512;
    regions_cmd->add_option("--ckpt", regions_ckpt)->required();
    regions_cmd->add_option("--bounds", regions_bounds, "xmin,xmax,ymin,ymax")->delimiter(',');
    regions_cmd->add_option("--width", regions_w);
    regions_cmd->add_option("--height", regions_h);
    regions_cmd->add_option("--out", regions_out, "output prefix");

    // ray
    auto* ray_cmd = app.add_subcommand("ray", "logit profile along a ray");
    std::string ray_ckpt, ray_out = "ray.csv";
    std::vector<double> ray_dir, ray_radii;
    ray_cmd->add_option("--ckpt", ray_ckpt)->required();
    ray_cmd->add_option("--direction", ray_dir, "dx,dy")->required()->delimiter(',');
    ray_cmd->add_option("--radii", ray_radii)->delimiter(',');
    ray_cmd->add_option("--out", ray_out);

    // nap-search
    auto* nap_cmd = app.add_subcommand("nap-search",
                                       "same activation-pattern pair search");
    std::string nap_ckpt, nap_data, nap_out = "nap_pairs.json";
    bool nap_same_class = false;
    std::size_t nap_limit = 100;
    nap_cmd->add_option("--ckpt", nap_ckpt)->required();
    nap_cmd->add_option("--data", nap_data)->required();
    nap_cmd->add_flag("--same-class", nap_same_class);
    nap_cmd->add_option("--limit", nap_limit);
    nap_cmd->add_option("--out", nap_out);

    // ntk
    auto* ntk_cmd = app.add_subcommand("ntk", "finite-width NTK studies");
    std::string ntk_study = "convergence", ntk_data, ntk_out = "ntk";
    std::vector<std::size_t> ntk_widths{64, 256};
    std::size_t ntk_seeds = 5, ntk_depth = 1, ntk_inputs = 20, ntk_dim = 32,
                ntk_steps = 200;
    double ntk_beta = 0.0;
    ntk_cmd->add_option("--study", ntk_study, "l1|convergence|drift");
    ntk_cmd->add_option("--widths", ntk_widths)->delimiter(',');
    ntk_cmd->add_option("--seeds", ntk_seeds);
    ntk_cmd->add_option("--hidden-layers", ntk_depth);
    ntk_cmd->add_option("--inputs", ntk_inputs);
    ntk_cmd->add_option("--input-dim", ntk_dim);
    ntk_cmd->add_option("--beta", ntk_beta);
    ntk_cmd->add_option("--steps", ntk_steps);
    ntk_cmd->add_option("--data", ntk_data, "IDX dir for drift inputs");
    ntk_cmd->add_option("--out", ntk_out, "output prefix");

    // synth-data
    auto* synth_cmd = app.add_subcommand("synth-data",
                                         "write the synthetic digit corpus");
    std::string synth_out = "data";
    std::size_t synth_train = 60000, synth_test = 10000;
    std::uint64_t synth_seed = 7;
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--train", synth_train);
    synth_cmd->add_option("--test", synth_test);
    synth_cmd->add_option("--seed", synth_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    Manifest manifest;
    int status = kExitOk;
    try {
        if (*train_cmd) {
            manifest.command = "train";
            cfg.optimizer = optimizer == "sgd" ? Optimizer::SgdMomentum
                                               : Optimizer::Adadelta;
            manifest.config = {{"data", data_dir},     {"out", out_path},
                               {"arch", arch},         {"hidden", hidden},
                               {"with_bias", with_bias},
                               {"epochs", cfg.epochs}, {"batch_size", cfg.batch_size},
                               {"lr", cfg.learning_rate},
                               {"optimizer", optimizer},
                               {"seed", std::to_string(cfg.seed)},
                               {"weight_decay", cfg.weight_decay},
                               {"augment", cfg.scalar_augmentation},
                               {"name", name}};
            status = run_train(manifest, data_dir, out_path, arch, hidden,
                               with_bias, cfg, name);
        } else if (*sweep_cmd) {
            manifest.command = "scalar-sweep";
            manifest.config = {{"ckpt", sweep_ckpt},
                               {"data", sweep_data},
                               {"scalars", sweep_scalars},
                               {"out", sweep_out}};
            status = run_scalar_sweep(manifest, sweep_ckpt, sweep_data,
                                      sweep_scalars, sweep_out);
        } else if (*cert_cmd) {
            manifest.command = "certify";
            manifest.config = {{"ckpt", cert_ckpt},      {"mode", cert_mode},
                               {"data", cert_data},      {"indices", cert_indices},
                               {"scalars", cert_scalars},{"lambdas", cert_lambdas},
                               {"samples", cert_samples},
                               {"seed", std::to_string(cert_seed)}};
            status = run_certify(manifest, cert_ckpt, cert_mode, cert_data,
                                 cert_indices, cert_scalars, cert_lambdas,
                                 cert_samples, cert_seed, cert_out, cert_images);
        } else if (*fair_cmd) {
            manifest.command = "fairness";
            manifest.config = {{"ckpt", fair_ckpt}, {"out", fair_out}};
            status = run_fairness(manifest, fair_ckpt, fair_out);
        } else if (*regions_cmd) {
            manifest.command = "regions";
            manifest.config = {{"ckpt", regions_ckpt},
                               {"bounds", regions_bounds},
                               {"width", regions_w},
                               {"height", regions_h}};
            status = run_regions(manifest, regions_ckpt, regions_bounds, regions_w,
                                 regions_h, regions_out);
        } else if (*ray_cmd) {
            manifest.command = "ray";
            manifest.config = {{"ckpt", ray_ckpt},
                               {"direction", ray_dir},
                               {"radii", ray_radii}};
            status = run_ray(manifest, ray_ckpt, ray_dir, ray_radii, ray_out);
        } else if (*nap_cmd) {
            manifest.command = "nap-search";
            manifest.config = {{"ckpt", nap_ckpt},
                               {"data", nap_data},
                               {"same_class", nap_same_class},
                               {"limit", nap_limit}};
            status = run_nap_search(manifest, nap_ckpt, nap_data, nap_same_class,
                                    nap_limit, nap_out);
        } else if (*ntk_cmd) {
            manifest.command = "ntk";
            manifest.config = {{"study", ntk_study},   {"widths", ntk_widths},
                               {"seeds", ntk_seeds},   {"hidden_layers", ntk_depth},
                               {"inputs", ntk_inputs}, {"input_dim", ntk_dim},
                               {"beta", ntk_beta},     {"steps", ntk_steps}};
            status = run_ntk(manifest, ntk_study, ntk_widths, ntk_seeds, ntk_depth,
                             ntk_inputs, ntk_dim, ntk_beta, ntk_steps, ntk_data,
                             ntk_out);
        } else if (*synth_cmd) {
            manifest.command = "synth-data";
            manifest.config = {{"out", synth_out},
                               {"train", synth_train},
                               {"test", synth_test},
                               {"seed", std::to_string(synth_seed)}};
            write_synthetic_corpus(synth_out, synth_train, synth_test, synth_seed);
            manifest.outputs = {synth_out + "/train-images-idx3-ubyte",
                                synth_out + "/train-labels-idx1-ubyte",
                                synth_out + "/t10k-images-idx3-ubyte",
                                synth_out + "/t10k-labels-idx1-ubyte"};
            status = kExitOk;
        }
    } catch (const InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << "\n";
        status = kExitConfig;
    } catch (const InvalidAxis& e) {
        std::cerr << "config error: " << e.what() << "\n";
        status = kExitConfig;
    } catch (const InvalidLabel& e) {
        std::cerr << "config error: " << e.what() << "\n";
        status = kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        status = kExitIo;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        status = kExitIo;
    } catch (const NumericalError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        status = kExitNumeric;
    } catch (const ShapeMismatch& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        status = kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        status = 1;
    }

    try {
        manifest.write(status);
    } catch (const std::exception& e) {
        std::cerr << "manifest write failed: " << e.what() << "\n";
        if (status == kExitOk) status = kExitIo;
    }
    return status;
}
