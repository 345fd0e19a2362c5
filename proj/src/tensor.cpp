#include "zbnn/tensor.hpp"

#include <cmath>
#include <sstream>

namespace zbnn {

std::string Shape::str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) os << ",";
        os << dims[i];
    }
    os << "]";
    return os.str();
}

bool Tensor::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

Tensor& Tensor::scale_inplace(double s) {
    for (double& x : data_) x *= s;
    return *this;
}

Tensor Tensor::scaled(double s) const {
    Tensor r = *this;
    r.scale_inplace(s);
    return r;
}

Tensor& Tensor::add_inplace(const Tensor& o) {
    if (shape_ != o.shape_)
        throw ShapeMismatch("add " + shape_.str() + " vs " + o.shape_.str());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
    Tensor r = a;
    r.add_inplace(b);
    return r;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeMismatch("sub " + a.shape().str() + " vs " + b.shape().str());
    Tensor r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

Tensor operator*(double s, const Tensor& t) { return t.scaled(s); }

Tensor lerp(const Tensor& a, const Tensor& b, double lambda) {
    if (a.shape() != b.shape())
        throw ShapeMismatch("lerp " + a.shape().str() + " vs " + b.shape().str());
    Tensor r(a.shape());
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = lambda * a[i] + (1.0 - lambda) * b[i];
    return r;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeMismatch("diff " + a.shape().str() + " vs " + b.shape().str());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::fabs(a[i] - b[i]);
        if (d > m) m = d;
    }
    return m;
}

double max_abs(const Tensor& t) {
    double m = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double a = std::fabs(t[i]);
        if (a > m) m = a;
    }
    return m;
}

}  // namespace zbnn
