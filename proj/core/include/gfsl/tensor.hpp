#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gfsl {

// Dense N-dimensional array of 32-bit floats, row-major.
//
// This is the universal numeric value of the library: images, activations,
// weights and gradients are all Tensors. Plain value semantics; copying
// copies the data.
class Tensor {
public:
    Tensor() = default;

    // Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<int> shape);

    // Takes ownership of `values`; product(shape) must equal values.size().
    Tensor(std::vector<int> shape, std::vector<float> values);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float value);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int axis) const;
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // Flat offset of a rank-4 index. No bounds checking beyond rank.
    std::size_t offset4(int a, int b, int c, int d) const;

    bool all_finite() const;

    // "[2, 3, 4]" — for error messages.
    std::string shape_str() const;

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

// Product of dims; throws ShapeError on non-positive entries.
std::size_t shape_size(const std::vector<int>& shape);

std::string shape_to_string(const std::vector<int>& shape);

// Throws NumericsError naming `op` if any element of `t` is NaN or Inf.
void ensure_finite(const Tensor& t, const char* op);

}  // namespace gfsl
