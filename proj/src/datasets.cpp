#include "zbnn/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "zbnn/errors.hpp"

namespace zbnn {

namespace {

std::uint32_t read_u32_be(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw FormatError("unexpected end of IDX file '" + path + "'");
    return (static_cast<std::uint32_t>(b[0]) << 24) |
           (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | b[3];
}

void write_u32_be(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

}  // namespace

Tensor LabeledDataset::sample(std::size_t i) const {
    const std::size_t d = rows * cols;
    std::vector<double> v(inputs.data() + i * d, inputs.data() + (i + 1) * d);
    return Tensor(Shape{d}, std::move(v));
}

Tensor LabeledDataset::as_image_batch() const {
    return inputs.reshaped(Shape{size(), 1, rows, cols});
}

LabeledDataset load_idx(const std::string& images_path,
                        const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw IoError("cannot open '" + images_path + "'");
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw IoError("cannot open '" + labels_path + "'");

    if (read_u32_be(imgs, images_path) != kImageMagic)
        throw FormatError("'" + images_path + "' is not an IDX image file");
    const std::uint32_t n = read_u32_be(imgs, images_path);
    const std::uint32_t rows = read_u32_be(imgs, images_path);
    const std::uint32_t cols = read_u32_be(imgs, images_path);

    if (read_u32_be(labs, labels_path) != kLabelMagic)
        throw FormatError("'" + labels_path + "' is not an IDX label file");
    const std::uint32_t n_labels = read_u32_be(labs, labels_path);
    if (n != n_labels)
        throw FormatError("IDX image/label counts differ: " + std::to_string(n) +
                          " vs " + std::to_string(n_labels));

    LabeledDataset ds;
    ds.rows = rows;
    ds.cols = cols;
    ds.class_count = 10;
    ds.norm_scale = 1.0 / 255.0;
    ds.norm_shift = 0.0;

    const std::size_t d = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> buf(d);
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(n) * d);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!imgs.read(reinterpret_cast<char*>(buf.data()),
                       static_cast<std::streamsize>(d)))
            throw FormatError("'" + images_path + "' truncated at image " +
                              std::to_string(i));
        for (std::size_t j = 0; j < d; ++j)
            data.push_back(static_cast<double>(buf[j]) / 255.0);
    }
    ds.inputs = Tensor(Shape{n, d}, std::move(data));

    ds.labels.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        char c;
        if (!labs.read(&c, 1))
            throw FormatError("'" + labels_path + "' truncated at label " +
                              std::to_string(i));
        const auto label = static_cast<std::size_t>(static_cast<unsigned char>(c));
        if (label >= ds.class_count)
            throw FormatError("label " + std::to_string(label) + " out of range");
        ds.labels[i] = label;
    }
    return ds;
}

void save_idx(const LabeledDataset& ds, const std::string& images_path,
              const std::string& labels_path) {
    {
        std::ofstream os(images_path, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open '" + images_path + "' for writing");
        write_u32_be(os, kImageMagic);
        write_u32_be(os, static_cast<std::uint32_t>(ds.size()));
        write_u32_be(os, static_cast<std::uint32_t>(ds.rows));
        write_u32_be(os, static_cast<std::uint32_t>(ds.cols));
        const std::size_t d = ds.rows * ds.cols;
        std::vector<unsigned char> buf(d);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                const double v = std::clamp(ds.inputs[i * d + j], 0.0, 1.0);
                buf[j] = static_cast<unsigned char>(std::lround(v * 255.0));
            }
            os.write(reinterpret_cast<const char*>(buf.data()),
                     static_cast<std::streamsize>(d));
        }
        if (!os) throw IoError("short write to '" + images_path + "'");
    }
    {
        std::ofstream os(labels_path, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open '" + labels_path + "' for writing");
        write_u32_be(os, kLabelMagic);
        write_u32_be(os, static_cast<std::uint32_t>(ds.size()));
        for (std::size_t label : ds.labels)
            os.put(static_cast<char>(static_cast<unsigned char>(label)));
        if (!os) throw IoError("short write to '" + labels_path + "'");
    }
}

const std::vector<double> kTable1Scalars = {1,     0.25, 0.15,  0.125, 0.1, 0.075,
                                            0.05, 0.025, 0.01, 0.001, 0.0001};

std::vector<LabeledDataset> scalar_sweep_views(const LabeledDataset& ds,
                                               const std::vector<double>& scalars) {
    for (double s : scalars)
        if (s <= 0.0) throw InvalidConfig("sweep scalars must be positive");
    std::vector<LabeledDataset> views;
    views.reserve(scalars.size());
    for (double s : scalars) {
        LabeledDataset v = ds;
        v.inputs.scale_inplace(s);
        views.push_back(std::move(v));
    }
    return views;
}

Tensor RayDataset2D::point(std::size_t i) const {
    return Tensor(Shape{2}, {points[2 * i], points[2 * i + 1]});
}

RayDataset2D make_ray_dataset(RayVariant variant, std::size_t rays,
                              std::size_t per_ray, Rng& rng) {
    if (rays < 2) throw InvalidConfig("ray dataset needs >= 2 rays");
    if (per_ray < 2) throw InvalidConfig("ray dataset needs >= 2 points per ray");

    RayDataset2D ds;
    ds.variant = variant;
    const double jitter = rng.uniform(0.0, 0.3);  // rotate the whole fan
    std::vector<double> pts;
    for (std::size_t r = 0; r < rays; ++r) {
        RayDescriptor rd;
        const double angle =
            jitter + 2.0 * 3.14159265358979323846 * static_cast<double>(r) /
                         static_cast<double>(rays);
        rd.dir_x = std::cos(angle);
        rd.dir_y = std::sin(angle);
        for (std::size_t j = 0; j < per_ray; ++j) {
            const double t = static_cast<double>(j) / static_cast<double>(per_ray - 1);
            const double radius = 0.2 + t * (2.0 - 0.2);
            rd.radii.push_back(radius);
            pts.push_back(radius * rd.dir_x);
            pts.push_back(radius * rd.dir_y);
            ds.labels.push_back(variant == RayVariant::Dir2 ? r % 2 : j % 2);
        }
        ds.rays.push_back(std::move(rd));
    }
    ds.points = Tensor(Shape{ds.labels.size(), 2}, std::move(pts));

    // post-construction invariant check
    for (std::size_t r = 0; r < rays; ++r) {
        bool saw0 = false, saw1 = false;
        for (std::size_t j = 0; j < per_ray; ++j) {
            const std::size_t label = ds.labels[r * per_ray + j];
            (label == 0 ? saw0 : saw1) = true;
        }
        if (variant == RayVariant::Dir2 && saw0 && saw1)
            throw InvalidConfig("dir2 ray carries two labels");
        if (variant == RayVariant::Dir1 && !(saw0 && saw1))
            throw InvalidConfig("dir1 ray carries a single label");
    }
    return ds;
}

void export_csv(const RayDataset2D& ds, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.precision(17);
    for (std::size_t i = 0; i < ds.size(); ++i)
        os << ds.points[2 * i] << "," << ds.points[2 * i + 1] << ","
           << ds.labels[i] << "\n";
    if (!os) throw IoError("short write to '" + path + "'");
}

// --- synthetic digit corpus ---

namespace {

struct Segment {
    double x0, y0, x1, y1;
};

// seven-segment layout in a unit box, y grows downward
constexpr Segment kSegments[7] = {
    {0.15, 0.05, 0.85, 0.05},  // A top
    {0.85, 0.05, 0.85, 0.50},  // B top-right
    {0.85, 0.50, 0.85, 0.95},  // C bottom-right
    {0.15, 0.95, 0.85, 0.95},  // D bottom
    {0.15, 0.50, 0.15, 0.95},  // E bottom-left
    {0.15, 0.05, 0.15, 0.50},  // F top-left
    {0.15, 0.50, 0.85, 0.50},  // G middle
};

constexpr unsigned char kDigitSegments[10] = {
    0b0111111,  // 0: ABCDEF
    0b0000110,  // 1: BC
    0b1011011,  // 2: ABDEG
    0b1001111,  // 3: ABCDG
    0b1100110,  // 4: BCFG
    0b1101101,  // 5: ACDFG
    0b1111101,  // 6: ACDEFG
    0b0000111,  // 7: ABC
    0b1111111,  // 8: all
    0b1101111,  // 9: ABCDFG
};

double point_segment_distance(double px, double py, const Segment& s) {
    const double vx = s.x1 - s.x0, vy = s.y1 - s.y0;
    const double wx = px - s.x0, wy = py - s.y0;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? (wx * vx + wy * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (s.x0 + t * vx), dy = py - (s.y0 + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

LabeledDataset make_synthetic_digits(std::size_t count, std::uint64_t seed) {
    constexpr std::size_t kSide = 28;
    LabeledDataset ds;
    ds.rows = kSide;
    ds.cols = kSide;
    ds.class_count = 10;
    ds.norm_scale = 1.0 / 255.0;
    ds.labels.resize(count);

    Rng rng(seed);
    std::vector<double> data(count * kSide * kSide, 0.0);

    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t digit = rng.uniform_index(10);
        ds.labels[i] = digit;

        // per-sample glyph transform
        const double angle = rng.uniform(-0.20, 0.20);
        const double scale = rng.uniform(13.0, 17.0);   // glyph height in px
        const double aspect = rng.uniform(0.55, 0.75);  // width/height
        const double cx = 14.0 + rng.uniform(-1.5, 1.5);
        const double cy = 14.0 + rng.uniform(-1.5, 1.5);
        const double thickness = rng.uniform(1.0, 1.8);
        const double contrast = rng.uniform(0.80, 1.0);
        const double ca = std::cos(angle), sa = std::sin(angle);

        // transform the active segments into canvas coordinates
        std::vector<Segment> strokes;
        for (int s = 0; s < 7; ++s) {
            if (!(kDigitSegments[digit] >> s & 1)) continue;
            const Segment& seg = kSegments[s];
            auto map = [&](double ux, double uy, double& ox, double& oy) {
                const double gx = (ux - 0.5) * scale * aspect;
                const double gy = (uy - 0.5) * scale;
                ox = cx + ca * gx - sa * gy;
                oy = cy + sa * gx + ca * gy;
            };
            Segment t;
            map(seg.x0, seg.y0, t.x0, t.y0);
            map(seg.x1, seg.y1, t.x1, t.y1);
            strokes.push_back(t);
        }

        double* img = data.data() + i * kSide * kSide;
        for (std::size_t y = 0; y < kSide; ++y) {
            for (std::size_t x = 0; x < kSide; ++x) {
                double d = 1e9;
                for (const Segment& s : strokes)
                    d = std::min(d, point_segment_distance(static_cast<double>(x),
                                                           static_cast<double>(y), s));
                double v = std::clamp((thickness - d) / 0.9 + 0.5, 0.0, 1.0) * contrast;
                v += 0.02 * rng.normal();  // sensor noise
                img[y * kSide + x] = std::clamp(v, 0.0, 1.0);
            }
        }
    }

    // quantize to byte resolution so IDX round-trips are exact
    for (double& v : data)
        v = static_cast<double>(std::lround(v * 255.0)) / 255.0;

    ds.inputs = Tensor(Shape{count, kSide * kSide}, std::move(data));
    return ds;
}

void write_synthetic_corpus(const std::string& dir, std::size_t train_count,
                            std::size_t test_count, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    const LabeledDataset train = make_synthetic_digits(train_count, seed);
    const LabeledDataset test = make_synthetic_digits(test_count, seed + 1);
    save_idx(train, dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte");
    save_idx(test, dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte");
}

DatasetPair load_idx_dir(const std::string& dir) {
    DatasetPair pair;
    pair.train = load_idx(dir + "/train-images-idx3-ubyte",
                          dir + "/train-labels-idx1-ubyte");
    pair.test =
        load_idx(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte");
    return pair;
}

}  // namespace zbnn
