#include "relmap/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace relmap {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace {

void check_shape(const std::vector<std::size_t>& shape) {
    for (std::size_t e : shape) {
        if (e == 0) {
            throw std::invalid_argument("tensor shape has a zero extent: " + shape_to_string(shape));
        }
    }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_numel(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_numel(shape_)) {
        throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (shape_numel(new_shape) != data_.size()) {
        throw std::invalid_argument("reshape from " + shape_to_string(shape_) + " to " +
                                    shape_to_string(new_shape) + " changes element count");
    }
    return Tensor(std::move(new_shape), data_);
}

double neumaier_sum(const double* p, std::size_t n) {
    double s = 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = s + p[i];
        if (std::abs(s) >= std::abs(p[i])) {
            c += (s - t) + p[i];
        } else {
            c += (p[i] - t) + s;
        }
        s = t;
    }
    return s + c;
}

double Tensor::sum() const { return neumaier_sum(data_.data(), data_.size()); }

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace relmap
