#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "actbench/errors.hpp"

namespace actbench {

// Dense row-major array of doubles.  Everything the engine computes on is
// one of these; 64-bit floats throughout.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<long> shape) : shape_(std::move(shape)) {
    data_.assign(element_count(shape_), 0.0);
  }

  Tensor(std::vector<long> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (element_count(shape_) != data_.size())
      throw DimensionError("tensor data length does not match shape");
  }

  static Tensor zeros(std::vector<long> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<long> shape, double value) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = value;
    return t;
  }

  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  // Row-major 2-D literal, e.g. Tensor::matrix({{1,2},{3,4}}).
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const long r = static_cast<long>(rows.size());
    const long c = r == 0 ? 0 : static_cast<long>(rows.begin()->size());
    Tensor t({r, c});
    long i = 0;
    for (const auto& row : rows) {
      if (static_cast<long>(row.size()) != c)
        throw DimensionError("ragged matrix literal");
      for (double v : row) t.data_[static_cast<std::size_t>(i++)] = v;
    }
    return t;
  }

  static Tensor vector(std::vector<double> values) {
    const long n = static_cast<long>(values.size());
    return Tensor({n}, std::move(values));
  }

  static Tensor identity(long n) {
    Tensor t({n, n});
    for (long i = 0; i < n; ++i) t.at2(i, i) = 1.0;
    return t;
  }

  const std::vector<long>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  long ndim() const { return static_cast<long>(shape_.size()); }
  long dim(long i) const { return shape_[static_cast<std::size_t>(i)]; }

  long rows() const { return ndim() == 1 ? 1 : dim(0); }
  long cols() const { return ndim() == 1 ? dim(0) : dim(ndim() - 1); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at2(long r, long c) { return data_[static_cast<std::size_t>(r * cols() + c)]; }
  double at2(long r, long c) const { return data_[static_cast<std::size_t>(r * cols() + c)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(double v) {
    for (auto& x : data_) x = v;
  }

  Tensor& operator+=(const Tensor& other) {
    if (!same_shape(other)) throw DimensionError("tensor += shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Tensor& scale(double s) {
    for (auto& x : data_) x *= s;
    return *this;
  }

  static std::size_t element_count(const std::vector<long>& shape) {
    std::size_t n = 1;
    for (long d : shape) {
      if (d < 0) throw DimensionError("negative dimension");
      n *= static_cast<std::size_t>(d);
    }
    return shape.empty() ? 0 : n;
  }

  std::string shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

 private:
  std::vector<long> shape_;
  std::vector<double> data_;
};

}  // namespace actbench
