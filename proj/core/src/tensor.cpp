#include "emots/tensor.hpp"

#include <cmath>
#include <numeric>

namespace emots {

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  t.shape_ = std::move(shape);
  t.data_.assign(n, 0.0);
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t = zeros({1});
  t.data_[0] = v;
  return t;
}

Tensor Tensor::vector(std::vector<double> values) {
  Tensor t;
  t.shape_ = {values.size()};
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols) {
  return zeros({rows, cols});
}

Tensor Tensor::zeros_like(const Tensor& other) {
  return zeros(other.shape_);
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

Tensor Tensor::row(std::size_t r) const {
  require_shape(rank() == 2, "Tensor::row requires rank 2");
  Tensor out = zeros({shape_[1]});
  for (std::size_t c = 0; c < shape_[1]; ++c) out[c] = (*this)(r, c);
  return out;
}

double Tensor::squared_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return s;
}

double Tensor::norm() const { return std::sqrt(squared_norm()); }

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace emots
