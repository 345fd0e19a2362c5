// End-to-end checks of the command line binary. The binary path comes from
// the ZBNN_CLI_PATH compile definition; work happens in a scratch directory.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "zbnn/datasets.hpp"
#include "zbnn/network.hpp"

#ifndef ZBNN_CLI_PATH
#define ZBNN_CLI_PATH "zbnn"
#endif

using namespace zbnn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ZBNN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::path("cli_scratch");
        fs::create_directories(dir);
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

const Scratch& scratch() {
    static Scratch s;
    return s;
}

const std::string& data_dir() {
    static std::string dir = [] {
        const std::string d = scratch().path("data");
        if (!fs::exists(d + "/train-images-idx3-ubyte"))
            write_synthetic_corpus(d, 1024, 256, 12345);
        return d;
    }();
    return dir;
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)),
                       std::istreambuf_iterator<char>());
}

const std::string& trained_ckpt() {
    static std::string ckpt = [] {
        const std::string out = scratch().path("zb.zbnn");
        const int rc = run_cli("train --data " + data_dir() + " --out " + out +
                               " --hidden 32 --epochs 4 --batch-size 64 --lr 0.5 "
                               "--seed 9 --name cli_zb");
        REQUIRE(rc == 0);
        return out;
    }();
    return ckpt;
}

}  // namespace

TEST_CASE("train writes checkpoint, run log and manifest") {
    const std::string ckpt = trained_ckpt();
    CHECK(fs::exists(ckpt));
    CHECK(fs::exists(ckpt + ".run.json"));
    CHECK(fs::exists(ckpt + ".manifest.json"));

    const json manifest = json::parse(read_file(ckpt + ".manifest.json"));
    CHECK(manifest.at("command") == "train");
    CHECK(manifest.at("exit_status") == 0);
    CHECK(manifest.at("schema_version") == 1);

    const Network net = load_checkpoint(ckpt);
    CHECK(net.zero_bias);
}

TEST_CASE("train is reproducible for a fixed seed") {
    const std::string a = scratch().path("rep_a.zbnn");
    const std::string b = scratch().path("rep_b.zbnn");
    const std::string flags = " --hidden 16 --epochs 2 --batch-size 64 --lr 0.5 "
                              "--seed 33 --name rep";
    REQUIRE(run_cli("train --data " + data_dir() + " --out " + a + flags) == 0);
    REQUIRE(run_cli("train --data " + data_dir() + " --out " + b + flags) == 0);
    CHECK(read_file(a) == read_file(b));
}

TEST_CASE("train on a missing directory exits with the io code") {
    CHECK(run_cli("train --data no_such_dir --out " + scratch().path("x.zbnn")) == 3);
}

TEST_CASE("scalar sweep on a zero-bias checkpoint reports identical entries") {
    const std::string out = scratch().path("sweep");
    CHECK(run_cli("scalar-sweep --ckpt " + trained_ckpt() + " --data " + data_dir() +
                  " --out " + out) == 0);
    const json j = json::parse(read_file(out + ".json"));
    CHECK(j.at("invariant") == true);
    const auto acc = j.at("accuracies").get<std::vector<double>>();
    REQUIRE(acc.size() == 11);
    for (double a : acc) CHECK(a == acc[0]);
    CHECK(fs::exists(out + ".csv"));
}

TEST_CASE("scalar sweep accepts a custom single-scalar list") {
    const std::string out = scratch().path("sweep1");
    CHECK(run_cli("scalar-sweep --ckpt " + trained_ckpt() + " --data " + data_dir() +
                  " --scalars 1 --out " + out) == 0);
    const json j = json::parse(read_file(out + ".json"));
    CHECK(j.at("accuracies").size() == 1);
}

TEST_CASE("certify directional on a zero-bias checkpoint passes") {
    const std::string out = scratch().path("cert_dir.json");
    CHECK(run_cli("certify --ckpt " + trained_ckpt() + " --data " + data_dir() +
                  " --mode directional --indices 0 --out " + out) == 0);
    const json j = json::parse(read_file(out));
    CHECK(j.at("verdict") == "certified");
    CHECK(j.at("kind") == "directional");
}

TEST_CASE("certify convex with a single vertex is a usage error") {
    CHECK(run_cli("certify --ckpt " + trained_ckpt() + " --data " + data_dir() +
                  " --mode convex --indices 0 --out " +
                  scratch().path("cert_bad.json")) == 2);
}

TEST_CASE("certify interpolation with a mismatched pair is inapplicable") {
    // two arbitrary test images will nearly surely differ in pattern
    const std::string out = scratch().path("cert_interp.json");
    const int rc = run_cli("certify --ckpt " + trained_ckpt() + " --data " +
                           data_dir() + " --mode interpolation --indices 0,1 " +
                           "--lambdas 5 --out " + out);
    const json j = json::parse(read_file(out));
    if (rc == 7) {
        CHECK(j.at("verdict") == "inapplicable");
    } else {
        CHECK(rc == 0);
        CHECK(j.at("verdict") == "certified");
    }
}

TEST_CASE("fairness report on a zero-bias checkpoint is uniform") {
    const std::string out = scratch().path("fairness.json");
    CHECK(run_cli("fairness --ckpt " + trained_ckpt() + " --out " + out) == 0);
    const json j = json::parse(read_file(out));
    CHECK(j.at("max_deviation_from_uniform").get<double>() <= 1e-12);
    CHECK(fs::exists(out + ".manifest.json"));
}

TEST_CASE("regions and ray commands work on a 2d checkpoint") {
    // build a 2d toy net directly and save it for the cli
    Network net;
    net.name = "toy2d";
    net.class_count = 2;
    net.zero_bias = true;
    net.input_shape = Shape{2};
    LinearLayer lin;
    lin.weights = Tensor(Shape{6, 2});
    net.layers.push_back(Layer{std::move(lin)});
    net.layers.push_back(Layer{ReluLayer{}});
    LinearLayer out;
    out.weights = Tensor(Shape{2, 6});
    net.layers.push_back(Layer{std::move(out)});
    initialize_he(net, 77);
    const std::string ckpt = scratch().path("toy2d.zbnn");
    save_checkpoint(net, ckpt);

    const std::string regions_out = scratch().path("regions");
    CHECK(run_cli("regions --ckpt " + ckpt + " --width 32 --height 32 --out " +
                  regions_out) == 0);
    CHECK(fs::exists(regions_out + ".ppm"));
    CHECK(fs::exists(regions_out + ".csv"));

    const std::string ray_out = scratch().path("ray.csv");
    CHECK(run_cli("ray --ckpt " + ckpt + " --direction 1,0 --out " + ray_out) == 0);
    CHECK(fs::exists(ray_out));
}

TEST_CASE("regions on a non-2d checkpoint is a config error") {
    CHECK(run_cli("regions --ckpt " + trained_ckpt() + " --out " +
                  scratch().path("regions_bad")) == 2);
}

TEST_CASE("nap-search finds pairs on a tiny network") {
    const std::string ckpt = scratch().path("tiny.zbnn");
    REQUIRE(run_cli("train --data " + data_dir() + " --out " + ckpt +
                    " --hidden 4 --epochs 1 --batch-size 64 --lr 0.5 --seed 3 "
                    "--name tiny") == 0);
    const std::string out = scratch().path("pairs.json");
    CHECK(run_cli("nap-search --ckpt " + ckpt + " --data " + data_dir() +
                  " --same-class --limit 16 --out " + out) == 0);
    const json j = json::parse(read_file(out));
    CHECK(j.at("group_count").get<std::size_t>() > 0);
}

TEST_CASE("ntk l1 study reports a tiny closed-form deviation") {
    const std::string out = scratch().path("ntk_l1");
    CHECK(run_cli("ntk --study l1 --seeds 5 --inputs 6 --input-dim 5 --out " +
                  out) == 0);
    const json j = json::parse(read_file(out + ".json"));
    CHECK(j.at("max_abs_deviation").get<double>() < 1e-12);
}

TEST_CASE("unknown subcommand is a usage error") {
    CHECK(run_cli("frobnicate") == 2);
}

TEST_CASE("train accepts a toml config file") {
    const std::string cfg_path = scratch().path("train.toml");
    {
        std::ofstream os(cfg_path);
        os << "hidden = [24]\n"
              "epochs = 2\n"
              "batch-size = 64\n"
              "lr = 0.5\n"
              "seed = 21\n"
              "name = \"toml_net\"\n";
    }
    const std::string out = scratch().path("toml.zbnn");
    CHECK(run_cli("train --config " + cfg_path + " --data " + data_dir() +
                  " --out " + out) == 0);
    const Network net = load_checkpoint(out);
    CHECK(net.name == "toml_net");
    const json manifest = json::parse(read_file(out + ".manifest.json"));
    CHECK(manifest.at("config").at("hidden")[0] == 24);
}
