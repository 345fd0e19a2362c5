#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "oracles.hpp"
#include "zbnn/datasets.hpp"

using namespace zbnn;

TEST_CASE("idx round-trip is exact") {
    const LabeledDataset ds = make_synthetic_digits(32, 100);
    save_idx(ds, "idx_rt_images", "idx_rt_labels");
    const LabeledDataset back = load_idx("idx_rt_images", "idx_rt_labels");
    CHECK(back.size() == ds.size());
    CHECK(back.rows == ds.rows);
    CHECK(back.cols == ds.cols);
    CHECK(back.labels == ds.labels);
    CHECK(back.inputs.vec() == ds.inputs.vec());
    std::remove("idx_rt_images");
    std::remove("idx_rt_labels");
}

TEST_CASE("idx with zero items is an empty dataset") {
    {
        std::ofstream img("idx_empty_images", std::ios::binary);
        const unsigned char ih[] = {0, 0, 8, 3, 0, 0, 0, 0, 0, 0, 0, 28, 0, 0, 0, 28};
        img.write(reinterpret_cast<const char*>(ih), sizeof(ih));
        std::ofstream lab("idx_empty_labels", std::ios::binary);
        const unsigned char lh[] = {0, 0, 8, 1, 0, 0, 0, 0};
        lab.write(reinterpret_cast<const char*>(lh), sizeof(lh));
    }
    const LabeledDataset ds = load_idx("idx_empty_images", "idx_empty_labels");
    CHECK(ds.size() == 0);
    CHECK(ds.rows == 28);
    std::remove("idx_empty_images");
    std::remove("idx_empty_labels");
}

TEST_CASE("idx rejects a wrong magic") {
    {
        std::ofstream img("idx_bad_images", std::ios::binary);
        const unsigned char ih[] = {0, 0, 9, 9, 0, 0, 0, 0};
        img.write(reinterpret_cast<const char*>(ih), sizeof(ih));
        std::ofstream lab("idx_bad_labels", std::ios::binary);
        const unsigned char lh[] = {0, 0, 8, 1, 0, 0, 0, 0};
        lab.write(reinterpret_cast<const char*>(lh), sizeof(lh));
    }
    CHECK_THROWS_AS((void)load_idx("idx_bad_images", "idx_bad_labels"), FormatError);
    std::remove("idx_bad_images");
    std::remove("idx_bad_labels");
}

TEST_CASE("idx missing file raises io error") {
    CHECK_THROWS_AS((void)load_idx("missing_img", "missing_lab"), IoError);
}

TEST_CASE("scalar sweep views") {
    const LabeledDataset ds = make_synthetic_digits(8, 101);

    SUBCASE("scalar 1 view is identical") {
        const auto views = scalar_sweep_views(ds, {1.0});
        CHECK(views[0].inputs.vec() == ds.inputs.vec());
    }
    SUBCASE("scalar 0.5 halves every pixel") {
        const auto views = scalar_sweep_views(ds, {0.5});
        for (std::size_t i = 0; i < ds.inputs.size(); ++i)
            CHECK(views[0].inputs[i] == 0.5 * ds.inputs[i]);
    }
    SUBCASE("default table list has 11 entries") {
        CHECK(kTable1Scalars.size() == 11);
        CHECK(scalar_sweep_views(ds, kTable1Scalars).size() == 11);
    }
    SUBCASE("nonpositive scalars rejected") {
        CHECK_THROWS_AS((void)scalar_sweep_views(ds, {0.0}), InvalidConfig);
    }
}

TEST_CASE("ray datasets") {
    Rng rng(102);

    SUBCASE("dir2 labels whole rays") {
        const RayDataset2D ds = make_ray_dataset(RayVariant::Dir2, 4, 3, rng);
        CHECK(ds.size() == 12);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t j = 1; j < 3; ++j)
                CHECK(ds.labels[r * 3 + j] == ds.labels[r * 3]);
    }
    SUBCASE("dir1 rays carry both classes") {
        const RayDataset2D ds = make_ray_dataset(RayVariant::Dir1, 3, 4, rng);
        for (std::size_t r = 0; r < 3; ++r) {
            bool saw0 = false, saw1 = false;
            for (std::size_t j = 0; j < 4; ++j)
                (ds.labels[r * 4 + j] == 0 ? saw0 : saw1) = true;
            CHECK(saw0);
            CHECK(saw1);
        }
    }
    SUBCASE("dir1 two points per ray have opposite labels") {
        const RayDataset2D ds = make_ray_dataset(RayVariant::Dir1, 5, 2, rng);
        for (std::size_t r = 0; r < 5; ++r)
            CHECK(ds.labels[r * 2] != ds.labels[r * 2 + 1]);
    }
    SUBCASE("radii live in [0.2, 2] and points sit on their rays") {
        const RayDataset2D ds = make_ray_dataset(RayVariant::Dir2, 4, 5, rng);
        for (const RayDescriptor& ray : ds.rays)
            for (double r : ray.radii) {
                CHECK(r >= 0.2);
                CHECK(r <= 2.0);
            }
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const double x = ds.points[2 * i], y = ds.points[2 * i + 1];
            const RayDescriptor& ray = ds.rays[i / 5];
            // cross product with the direction vanishes on the ray
            CHECK(std::fabs(x * ray.dir_y - y * ray.dir_x) < 1e-12);
        }
    }
    SUBCASE("bad configs rejected") {
        CHECK_THROWS_AS((void)make_ray_dataset(RayVariant::Dir1, 1, 2, rng),
                        InvalidConfig);
        CHECK_THROWS_AS((void)make_ray_dataset(RayVariant::Dir1, 2, 1, rng),
                        InvalidConfig);
    }
}

TEST_CASE("ray dataset csv export") {
    Rng rng(103);
    const RayDataset2D ds = make_ray_dataset(RayVariant::Dir2, 2, 2, rng);
    export_csv(ds, "rays_test.csv");
    std::ifstream is("rays_test.csv");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(is, line)) {
        ++lines;
        CHECK(line.find(',') != std::string::npos);
    }
    CHECK(lines == 4);
    std::remove("rays_test.csv");
}

TEST_CASE("synthetic digits are deterministic and labeled sanely") {
    const LabeledDataset a = make_synthetic_digits(64, 200);
    const LabeledDataset b = make_synthetic_digits(64, 200);
    CHECK(a.inputs.vec() == b.inputs.vec());
    CHECK(a.labels == b.labels);
    const LabeledDataset c = make_synthetic_digits(64, 201);
    CHECK(a.inputs.vec() != c.inputs.vec());
    for (std::size_t label : a.labels) CHECK(label < 10);
    // pixels are byte-quantized into [0,1]
    for (std::size_t i = 0; i < a.inputs.size(); ++i) {
        CHECK(a.inputs[i] >= 0.0);
        CHECK(a.inputs[i] <= 1.0);
    }
}
