#include "gfsl/tensor.hpp"

#include <cmath>
#include <sstream>

#include "gfsl/error.hpp"

namespace gfsl {

std::size_t shape_size(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) {
            throw ShapeError("tensor shape has non-positive dimension: " + shape_to_string(shape));
        }
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) out << ", ";
        out << shape[i];
    }
    out << "]";
    return out.str();
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(shape_size(shape_), 0.0f) {}

Tensor::Tensor(std::vector<int> shape, std::vector<float> values) : shape_(std::move(shape)) {
    const std::size_t expected = shape_size(shape_);
    if (values.size() != expected) {
        throw ShapeError("tensor data length " + std::to_string(values.size()) +
                         " does not match shape " + shape_to_string(shape_));
    }
    data_ = std::move(values);
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = value;
    return t;
}

int Tensor::dim(int axis) const {
    if (axis < 0 || axis >= rank()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str());
    }
    return shape_[static_cast<std::size_t>(axis)];
}

std::size_t Tensor::offset4(int a, int b, int c, int d) const {
    const std::size_t s1 = static_cast<std::size_t>(shape_[1]);
    const std::size_t s2 = static_cast<std::size_t>(shape_[2]);
    const std::size_t s3 = static_cast<std::size_t>(shape_[3]);
    return ((static_cast<std::size_t>(a) * s1 + static_cast<std::size_t>(b)) * s2 +
            static_cast<std::size_t>(c)) *
               s3 +
           static_cast<std::size_t>(d);
}

bool Tensor::all_finite() const {
    for (float v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

void ensure_finite(const Tensor& t, const char* op) {
    if (!t.all_finite()) {
        throw NumericsError(std::string(op) + " produced a non-finite value");
    }
}

}  // namespace gfsl
