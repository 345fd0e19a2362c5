#ifndef ZBNN_DATASETS_HPP
#define ZBNN_DATASETS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "zbnn/rng.hpp"
#include "zbnn/tensor.hpp"

namespace zbnn {

struct LabeledDataset {
    Tensor inputs;  // [N, rows*cols], pixels scaled to [0,1]
    std::vector<std::size_t> labels;
    std::size_t class_count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    // normalization applied at load time: stored = raw * scale + shift
    double norm_scale = 1.0;
    double norm_shift = 0.0;

    std::size_t size() const { return labels.size(); }
    Tensor sample(std::size_t i) const;
    // [N,1,rows,cols] copy for convolutional networks
    Tensor as_image_batch() const;
};

// IDX files, big-endian headers: magic 0x00000803 + count/rows/cols + bytes
// for images, 0x00000801 + count + bytes for labels. Pixels divided by 255.
LabeledDataset load_idx(const std::string& images_path,
                        const std::string& labels_path);
// inverse of load_idx; values are rounded back to bytes
void save_idx(const LabeledDataset& ds, const std::string& images_path,
              const std::string& labels_path);

// Table 1 multipliers
extern const std::vector<double> kTable1Scalars;

// one dataset view per scalar, inputs multiplied
std::vector<LabeledDataset> scalar_sweep_views(const LabeledDataset& ds,
                                               const std::vector<double>& scalars);

enum class RayVariant { Dir1, Dir2 };

struct RayDescriptor {
    double dir_x = 0.0, dir_y = 0.0;  // unit direction
    std::vector<double> radii;
};

// 2D binary dataset built from rays through the origin. Dir2 labels whole
// rays (directionality holds); Dir1 alternates the label along each ray.
struct RayDataset2D {
    Tensor points;  // [N,2]
    std::vector<std::size_t> labels;
    RayVariant variant = RayVariant::Dir2;
    std::vector<RayDescriptor> rays;

    std::size_t size() const { return labels.size(); }
    Tensor point(std::size_t i) const;
};

RayDataset2D make_ray_dataset(RayVariant variant, std::size_t rays,
                              std::size_t per_ray, Rng& rng);

// x,y,label per line
void export_csv(const RayDataset2D& ds, const std::string& path);

// Deterministic synthetic 10-class digit corpus (seven-segment glyphs with
// affine jitter, stroke-width and contrast variation, and sensor noise),
// written as MNIST-layout IDX files. Offline stand-in when the real corpus
// is not on disk.
LabeledDataset make_synthetic_digits(std::size_t count, std::uint64_t seed);
void write_synthetic_corpus(const std::string& dir, std::size_t train_count,
                            std::size_t test_count, std::uint64_t seed);

// Resolves a train/test IDX pair from a directory (MNIST file names).
struct DatasetPair {
    LabeledDataset train;
    LabeledDataset test;
};
DatasetPair load_idx_dir(const std::string& dir);

}  // namespace zbnn

#endif  // ZBNN_DATASETS_HPP
