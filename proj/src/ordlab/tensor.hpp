#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "ordlab/errors.hpp"

namespace ordlab {

// Dense row-major numeric array with explicit shape. Carrier of images,
// activations and gradients across the whole lab.
template <class S>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<size_t> shape) : shape_(std::move(shape)) {
    v_.assign(checked_size(shape_), S(0));
  }

  static TensorT from(std::vector<size_t> shape, std::vector<S> values) {
    TensorT t;
    if (checked_size(shape) != values.size())
      fail(ErrorKind::invalid_argument, "tensor: value count does not match shape");
    t.shape_ = std::move(shape);
    t.v_ = std::move(values);
    return t;
  }

  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t extent(size_t i) const { return shape_[i]; }
  size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  S* data() { return v_.data(); }
  const S* data() const { return v_.data(); }
  S& operator[](size_t i) { return v_[i]; }
  S operator[](size_t i) const { return v_[i]; }

  std::vector<S>& values() { return v_; }
  const std::vector<S>& values() const { return v_; }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (S x : v_)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  void fill(S x) { std::fill(v_.begin(), v_.end(), x); }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape_.size(); ++i) s += (i ? "," : "") + std::to_string(shape_[i]);
    return s + ")";
  }

 private:
  static size_t checked_size(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t e : shape) {
      if (e == 0) fail(ErrorKind::invalid_argument, "tensor: zero extent");
      n *= e;
    }
    return n;
  }

  std::vector<size_t> shape_;
  std::vector<S> v_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace ordlab
