#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lznet/common.hpp"

namespace lznet::ad {

/// Dense row-major double tensor, rank 0 (scalar), 1 or 2. Plain value
/// type; differentiation bookkeeping lives on the tape, not here.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double v);
    static Tensor uniform(std::vector<std::size_t> shape, double lo, double hi,
                          std::mt19937_64& rng);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    bool is_scalar() const { return shape_.empty(); }

    /// Rows/cols of a rank-2 tensor; a rank-1 tensor counts as one row.
    std::size_t rows() const;
    std::size_t cols() const;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double scalar_value() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::string shape_string(const Tensor& t);

}  // namespace lznet::ad
