#include "zbnn/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "zbnn/errors.hpp"

namespace zbnn {

void write_pgm(const std::string& path, const Tensor& gray, std::size_t rows,
               std::size_t cols) {
    if (gray.size() != rows * cols)
        throw ShapeMismatch("pgm buffer size " + std::to_string(gray.size()) +
                            " vs " + std::to_string(rows * cols));
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "P5\n" << cols << " " << rows << "\n255\n";
    std::vector<unsigned char> buf(gray.size());
    for (std::size_t i = 0; i < gray.size(); ++i)
        buf[i] = static_cast<unsigned char>(
            std::lround(std::clamp(gray[i], 0.0, 1.0) * 255.0));
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("short write to '" + path + "'");
}

void write_ppm(const std::string& path, const std::vector<std::uint8_t>& rgb,
               std::size_t rows, std::size_t cols) {
    if (rgb.size() != rows * cols * 3)
        throw ShapeMismatch("ppm buffer size " + std::to_string(rgb.size()) +
                            " vs " + std::to_string(rows * cols * 3));
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "P6\n" << cols << " " << rows << "\n255\n";
    os.write(reinterpret_cast<const char*>(rgb.data()),
             static_cast<std::streamsize>(rgb.size()));
    if (!os) throw IoError("short write to '" + path + "'");
}

}  // namespace zbnn
