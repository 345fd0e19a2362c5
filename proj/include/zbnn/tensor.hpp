#ifndef ZBNN_TENSOR_HPP
#define ZBNN_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "zbnn/errors.hpp"

namespace zbnn {

// Row-major dense shape. Extents may be zero (empty tensor).
struct Shape {
    std::vector<std::size_t> dims;

    Shape() = default;
    Shape(std::initializer_list<std::size_t> d) : dims(d) {}
    explicit Shape(std::vector<std::size_t> d) : dims(std::move(d)) {}

    std::size_t rank() const { return dims.size(); }
    std::size_t operator[](std::size_t i) const { return dims[i]; }
    std::size_t& operator[](std::size_t i) { return dims[i]; }

    std::size_t count() const {
        std::size_t n = 1;
        for (std::size_t d : dims) n *= d;
        return dims.empty() ? 0 : n;
    }

    bool operator==(const Shape& o) const { return dims == o.dims; }
    bool operator!=(const Shape& o) const { return dims != o.dims; }

    std::string str() const;
};

// Dense tensor of 64-bit reals, row-major, owning storage.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(Shape shape)
        : shape_(std::move(shape)), data_(shape_.count(), 0.0) {}
    Tensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (shape_.count() != data_.size())
            throw ShapeMismatch("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_.str());
    }

    static Tensor vector(std::vector<double> v) {
        Shape s{v.size()};
        return Tensor(std::move(s), std::move(v));
    }
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
        return Tensor(Shape{rows, cols}, std::move(v));
    }
    static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
    static Tensor full(Shape s, double value) {
        Tensor t(std::move(s));
        for (double& x : t.data_) x = value;
        return t;
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.rank(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    // rank-2 accessor
    double at2(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& at2(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }

    Tensor reshaped(Shape s) const {
        if (s.count() != size())
            throw ShapeMismatch("reshape " + shape_.str() + " -> " + s.str());
        return Tensor(std::move(s), data_);
    }

    bool all_finite() const;

    Tensor& scale_inplace(double s);
    Tensor scaled(double s) const;
    Tensor& add_inplace(const Tensor& o);

  private:
    Shape shape_;
    std::vector<double> data_;
};

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& t);

// lambda*a + (1-lambda)*b
Tensor lerp(const Tensor& a, const Tensor& b, double lambda);

double max_abs_diff(const Tensor& a, const Tensor& b);
double max_abs(const Tensor& t);

}  // namespace zbnn

#endif  // ZBNN_TENSOR_HPP
