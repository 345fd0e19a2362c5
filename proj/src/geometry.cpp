#include "zbnn/geometry.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "zbnn/image_io.hpp"

namespace zbnn {

RegionRaster rasterize_regions(const Network& net, const RasterBounds& bounds,
                               std::size_t width, std::size_t height) {
    if (net.input_shape != Shape{2})
        throw InvalidConfig("region raster needs a 2D-input network, input is " +
                            net.input_shape.str());
    if (width < 1 || height < 1) throw InvalidConfig("raster resolution must be >= 1");
    if (!(bounds.x_min < bounds.x_max && bounds.y_min < bounds.y_max))
        throw InvalidConfig("raster bounds are empty");

    RegionRaster raster;
    raster.bounds = bounds;
    raster.width = width;
    raster.height = height;
    raster.cell_digests.assign(width * height, 0);
    raster.color_seed = 0x9e3779b97f4a7c15ULL;

    const double dx = (bounds.x_max - bounds.x_min) / static_cast<double>(width);
    const double dy = (bounds.y_max - bounds.y_min) / static_cast<double>(height);

    auto cell_body = [&](std::size_t idx) {
        const std::size_t row = idx / width, col = idx % width;
        const double x = bounds.x_min + (static_cast<double>(col) + 0.5) * dx;
        const double y = bounds.y_min + (static_cast<double>(row) + 0.5) * dy;
        const Tensor point(Shape{2}, {x, y});
        raster.cell_digests[idx] = extract_nap(net, point).digest();
    };

    const std::size_t total = width * height;
    if (exec::mode() == exec::Mode::Parallel) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(total); ++i)
            cell_body(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < total; ++i) cell_body(i);
    }

    // digest collisions would silently merge regions; count with a cross-check
    std::unordered_map<std::uint64_t, std::string> seen;
    for (std::size_t idx = 0; idx < total; ++idx) {
        const std::size_t row = idx / width, col = idx % width;
        const double x = bounds.x_min + (static_cast<double>(col) + 0.5) * dx;
        const double y = bounds.y_min + (static_cast<double>(row) + 0.5) * dy;
        auto it = seen.find(raster.cell_digests[idx]);
        if (it == seen.end()) {
            const Tensor point(Shape{2}, {x, y});
            seen.emplace(raster.cell_digests[idx],
                         extract_nap(net, point).to_string());
        }
    }
    raster.region_count = seen.size();
    return raster;
}

void export_ppm(const RegionRaster& raster, const std::string& path) {
    std::vector<std::uint8_t> rgb(raster.width * raster.height * 3);
    for (std::size_t i = 0; i < raster.cell_digests.size(); ++i) {
        std::uint64_t h = raster.cell_digests[i] ^ raster.color_seed;
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
        rgb[3 * i] = static_cast<std::uint8_t>(64 + (h & 0xBF));
        rgb[3 * i + 1] = static_cast<std::uint8_t>(64 + ((h >> 8) & 0xBF));
        rgb[3 * i + 2] = static_cast<std::uint8_t>(64 + ((h >> 16) & 0xBF));
    }
    write_ppm(path, rgb, raster.height, raster.width);
}

void export_csv(const RegionRaster& raster, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.precision(17);
    const double dx =
        (raster.bounds.x_max - raster.bounds.x_min) / static_cast<double>(raster.width);
    const double dy = (raster.bounds.y_max - raster.bounds.y_min) /
                      static_cast<double>(raster.height);
    for (std::size_t row = 0; row < raster.height; ++row)
        for (std::size_t col = 0; col < raster.width; ++col) {
            const double x =
                raster.bounds.x_min + (static_cast<double>(col) + 0.5) * dx;
            const double y =
                raster.bounds.y_min + (static_cast<double>(row) + 0.5) * dy;
            os << x << "," << y << "," << raster.cell(row, col) << "\n";
        }
    if (!os) throw IoError("short write to '" + path + "'");
}

RayProfile ray_profile(const Network& net, double dir_x, double dir_y,
                       const std::vector<double>& radii) {
    const double norm = std::sqrt(dir_x * dir_x + dir_y * dir_y);
    if (std::fabs(norm - 1.0) > 1e-9)
        throw InvalidConfig("ray direction must be a unit vector");
    if (net.input_shape != Shape{2})
        throw InvalidConfig("ray profile needs a 2D-input network");
    if (radii.empty()) throw InvalidConfig("ray profile needs radii");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (radii[i] <= 0.0) throw InvalidConfig("radii must be positive");
        if (i && radii[i] <= radii[i - 1])
            throw InvalidConfig("radii must be strictly increasing");
    }

    RayProfile profile;
    profile.dir_x = dir_x;
    profile.dir_y = dir_y;
    profile.radii = radii;
    profile.logit_values = Tensor(Shape{radii.size(), net.class_count});
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const Tensor point(Shape{2}, {radii[i] * dir_x, radii[i] * dir_y});
        const Tensor z = logits(net, point);
        for (std::size_t c = 0; c < net.class_count; ++c)
            profile.logit_values[i * net.class_count + c] = z[c];
    }
    return profile;
}

void export_csv(const RayProfile& profile, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.precision(17);
    const std::size_t C = profile.logit_values.dim(1);
    for (std::size_t i = 0; i < profile.radii.size(); ++i) {
        os << profile.radii[i];
        for (std::size_t c = 0; c < C; ++c)
            os << "," << profile.logit_values[i * C + c];
        os << "\n";
    }
    if (!os) throw IoError("short write to '" + path + "'");
}

FitReport fit_report(const Network& net, const RayDataset2D& ds) {
    if (net.class_count != 2)
        throw ShapeMismatch("fit report needs a binary network, class_count is " +
                            std::to_string(net.class_count));
    if (net.input_shape != Shape{2})
        throw ShapeMismatch("fit report needs a 2D-input network");

    FitReport report;
    report.variant = ds.variant;
    report.fits.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Tensor z = logits(net, ds.point(i));
        const double margin = z[1] - z[0];
        const bool fit =
            ds.labels[i] == 0 ? margin < 0.0 : margin > 0.0;
        report.fits[i] = fit;
        if (fit) ++report.fit_count;
    }
    report.accuracy =
        static_cast<double>(report.fit_count) / static_cast<double>(ds.size());
    return report;
}

}  // namespace zbnn
