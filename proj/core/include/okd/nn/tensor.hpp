#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace okd::nn {

using Dims = std::vector<size_t>;

std::string dims_to_string(const Dims& d);

/// Dense row-major fp64 array with an explicit shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Dims dims, double fill = 0.0);
  Tensor(Dims dims, std::vector<double> data);

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.dims_); }

  const Dims& dims() const { return dims_; }
  size_t dim(size_t i) const { return dims_.at(i); }
  size_t rank() const { return dims_.size(); }
  size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  void fill(double v);
  bool all_finite() const;
  /// Same data, new shape of equal element count.
  Tensor reshaped(Dims dims) const;
  bool operator==(const Tensor&) const = default;

 private:
  Dims dims_;
  std::vector<double> data_;
};

/// Throws ShapeError naming both shapes when t does not have dims `expected`.
void expect_dims(const Tensor& t, const Dims& expected, const char* what);

}  // namespace okd::nn
