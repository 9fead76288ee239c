#include "okd/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "okd/errors.hpp"

namespace okd::nn {

namespace {
size_t product(const Dims& d) {
  return std::accumulate(d.begin(), d.end(), size_t{1}, std::multiplies<>());
}
}  // namespace

std::string dims_to_string(const Dims& d) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < d.size(); ++i) os << (i ? ", " : "") << d[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Dims dims, double fill) : dims_(std::move(dims)), data_(product(dims_), fill) {}

Tensor::Tensor(Dims dims, std::vector<double> data) : dims_(std::move(dims)), data_(std::move(data)) {
  if (data_.size() != product(dims_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match dims " + dims_to_string(dims_));
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Dims dims) const { return Tensor(std::move(dims), data_); }

void expect_dims(const Tensor& t, const Dims& expected, const char* what) {
  if (t.dims() != expected) {
    throw ShapeError(std::string(what) + ": expected dims " + dims_to_string(expected) +
                     ", got " + dims_to_string(t.dims()));
  }
}

}  // namespace okd::nn
