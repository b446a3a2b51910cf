#include "chebmixer/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace chebmixer {

namespace {
int64_t shape_product(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t e : shape) n *= e;
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<int64_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape.empty() || shape.size() > 3) {
        throw ShapeError("tensor rank must be 1..3, got " + shape_str(shape));
    }
    for (int64_t e : shape) {
        if (e <= 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    }
    if (shape_product(shape) != static_cast<int64_t>(data.size())) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
    }
}

Tensor Tensor::zeros(std::vector<int64_t> shape) {
    int64_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0));
}

Tensor Tensor::full(std::vector<int64_t> shape, double value) {
    int64_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<size_t>(n), value));
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string shape_str(const std::vector<int64_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

void require_shape(bool ok, const std::string& message) {
    if (!ok) throw ShapeError(message);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_shape(a.same_shape(b), "max_abs_diff: shapes differ: " + shape_str(a.shape) + " vs " +
                                       shape_str(b.shape));
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    }
    return m;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

}  // namespace chebmixer
