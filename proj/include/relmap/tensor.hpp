#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace relmap {

/// Dense N-dimensional array of doubles, row-major.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape. Extents must be positive.
    explicit Tensor(std::vector<std::size_t> shape);

    /// Tensor with explicit contents; data.size() must equal the shape product.
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Flat index of (i, j) in a rank-2 tensor, (i, j, k) in rank-3, etc.
    std::size_t offset2(std::size_t i, std::size_t j) const { return i * shape_[1] + j; }
    std::size_t offset3(std::size_t i, std::size_t j, std::size_t k) const {
        return (i * shape_[1] + j) * shape_[2] + k;
    }
    std::size_t offset4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return ((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l;
    }

    double& at2(std::size_t i, std::size_t j) { return data_[offset2(i, j)]; }
    double at2(std::size_t i, std::size_t j) const { return data_[offset2(i, j)]; }
    double& at3(std::size_t i, std::size_t j, std::size_t k) { return data_[offset3(i, j, k)]; }
    double at3(std::size_t i, std::size_t j, std::size_t k) const { return data_[offset3(i, j, k)]; }
    double& at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[offset4(i, j, k, l)];
    }
    double at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[offset4(i, j, k, l)];
    }

    /// Same data, new shape; element count must be unchanged.
    Tensor reshaped(std::vector<std::size_t> new_shape) const;

    /// Compensated (Neumaier) sum of all elements.
    double sum() const;

    bool all_finite() const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool operator==(const Tensor& other) const = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

/// Compensated sum over a raw range.
double neumaier_sum(const double* begin, std::size_t n);

}  // namespace relmap
