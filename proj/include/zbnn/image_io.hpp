#ifndef ZBNN_IMAGE_IO_HPP
#define ZBNN_IMAGE_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "zbnn/tensor.hpp"

namespace zbnn {

// binary PGM (P5); values clamped to [0,1] and quantized to bytes
void write_pgm(const std::string& path, const Tensor& gray, std::size_t rows,
               std::size_t cols);

// binary PPM (P6); rgb holds rows*cols*3 bytes
void write_ppm(const std::string& path, const std::vector<std::uint8_t>& rgb,
               std::size_t rows, std::size_t cols);

}  // namespace zbnn

#endif  // ZBNN_IMAGE_IO_HPP
