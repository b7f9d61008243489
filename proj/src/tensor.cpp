#include "lznet/tensor.hpp"

#include <cmath>

namespace lznet::ad {

namespace {
std::size_t product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto s : shape) {
        if (s == 0) throw ShapeMismatchError("Tensor: zero-sized dimension");
        n *= s;
    }
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(product(shape_), 0.0) {
    if (shape_.size() > 2) throw ShapeMismatchError("Tensor: rank > 2 unsupported");
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.size() > 2) throw ShapeMismatchError("Tensor: rank > 2 unsupported");
    if (data_.size() != product(shape_)) {
        throw ShapeMismatchError("Tensor: data length does not match shape");
    }
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (auto& e : t.data_) e = v;
    return t;
}

Tensor Tensor::uniform(std::vector<std::size_t> shape, double lo, double hi,
                       std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& e : t.data_) e = dist(rng);
    return t;
}

std::size_t Tensor::rows() const { return rank() == 2 ? shape_[0] : 1; }

std::size_t Tensor::cols() const {
    if (rank() == 2) return shape_[1];
    if (rank() == 1) return shape_[0];
    return 1;
}

double Tensor::scalar_value() const {
    if (numel() != 1) throw ShapeMismatchError("Tensor: not a scalar");
    return data_[0];
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string shape_string(const Tensor& t) {
    std::string s = "(";
    for (std::size_t i = 0; i < t.shape().size(); ++i) {
        if (i) s += ",";
        s += std::to_string(t.shape()[i]);
    }
    return s + ")";
}

}  // namespace lznet::ad
