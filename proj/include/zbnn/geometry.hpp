#ifndef ZBNN_GEOMETRY_HPP
#define ZBNN_GEOMETRY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "zbnn/datasets.hpp"
#include "zbnn/network.hpp"
#include "zbnn/verify.hpp"

namespace zbnn {

struct RasterBounds {
    double x_min = -2.0, x_max = 2.0;
    double y_min = -2.0, y_max = 2.0;
};

// Linear-region raster of a 2D-input network: one NAP digest per grid cell.
struct RegionRaster {
    RasterBounds bounds;
    std::size_t width = 0, height = 0;
    std::vector<std::uint64_t> cell_digests;  // row-major, height*width
    std::size_t region_count = 0;
    std::uint64_t color_seed = 0;

    std::uint64_t cell(std::size_t row, std::size_t col) const {
        return cell_digests[row * width + col];
    }
};

RegionRaster rasterize_regions(const Network& net, const RasterBounds& bounds,
                               std::size_t width, std::size_t height);

// PPM with colors derived from the NAP digests
void export_ppm(const RegionRaster& raster, const std::string& path);
// cell x, y, nap digest per line
void export_csv(const RegionRaster& raster, const std::string& path);

struct RayProfile {
    double dir_x = 0.0, dir_y = 0.0;
    std::vector<double> radii;   // strictly increasing, > 0
    Tensor logit_values;         // [radii, classes]
};

RayProfile ray_profile(const Network& net, double dir_x, double dir_y,
                       const std::vector<double>& radii);

// r, logit_0, logit_1, ... per line
void export_csv(const RayProfile& profile, const std::string& path);

// Per-point fit verdicts for a binary 2D network under the sign convention:
// the margin logit[1]-logit[0] must be negative for label 0 and positive for
// label 1; a margin of exactly 0 fits neither.
struct FitReport {
    std::vector<bool> fits;
    std::size_t fit_count = 0;
    double accuracy = 0.0;
    RayVariant variant = RayVariant::Dir2;
};

FitReport fit_report(const Network& net, const RayDataset2D& ds);

}  // namespace zbnn

#endif  // ZBNN_GEOMETRY_HPP
