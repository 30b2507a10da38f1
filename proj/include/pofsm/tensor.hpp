#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <cmath>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pofsm/errors.hpp"

namespace pofsm {

// Dense row-major tensor of rank <= 4. Activations use the layout
// [batch, rows, cols, channels], so channels are contiguous and per-pixel
// reductions (softmax, LRN windows) touch adjacent memory.
template <typename Scalar>
class Tensor {
 public:
  using Storage = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;

  explicit Tensor(std::vector<int> dims) : dims_(std::move(dims)) {
    long n = 1;
    for (int d : dims_) {
      if (d <= 0) throw ConfigError("tensor dimension must be positive");
      n *= d;
    }
    if (dims_.size() > 4) throw ConfigError("tensor rank exceeds 4");
    data_ = Storage::Zero(n);
  }

  Tensor(std::vector<int> dims, std::initializer_list<Scalar> values) : Tensor(std::move(dims)) {
    if (static_cast<long>(values.size()) != data_.size())
      throw ConfigError("tensor initializer size mismatch");
    long i = 0;
    for (Scalar v : values) data_[i++] = v;
  }

  const std::vector<int>& dims() const { return dims_; }
  int dim(int i) const { return dims_[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(dims_.size()); }
  long size() const { return data_.size(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Eigen::Map<Storage> vec() { return Eigen::Map<Storage>(data_.data(), data_.size()); }
  Eigen::Map<const Storage> vec() const {
    return Eigen::Map<const Storage>(data_.data(), data_.size());
  }

  Scalar& operator[](long i) { return data_[i]; }
  Scalar operator[](long i) const { return data_[i]; }

  // Multi-index access requires the exact rank; use operator[] or data()
  // for layout-agnostic flat access.
  Scalar& operator()(int a, int b) {
    assert(rank() == 2);
    return data_[static_cast<long>(a) * dims_[1] + b];
  }
  Scalar operator()(int a, int b) const {
    assert(rank() == 2);
    return data_[static_cast<long>(a) * dims_[1] + b];
  }

  Scalar& operator()(int a, int b, int c) {
    assert(rank() == 3);
    return data_[(static_cast<long>(a) * dims_[1] + b) * dims_[2] + c];
  }
  Scalar operator()(int a, int b, int c) const {
    assert(rank() == 3);
    return data_[(static_cast<long>(a) * dims_[1] + b) * dims_[2] + c];
  }

  Scalar& operator()(int a, int b, int c, int d) {
    assert(rank() == 4);
    return data_[((static_cast<long>(a) * dims_[1] + b) * dims_[2] + c) * dims_[3] + d];
  }
  Scalar operator()(int a, int b, int c, int d) const {
    assert(rank() == 4);
    return data_[((static_cast<long>(a) * dims_[1] + b) * dims_[2] + c) * dims_[3] + d];
  }

  bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }

  bool all_finite() const {
    for (long i = 0; i < data_.size(); ++i)
      if (!std::isfinite(static_cast<double>(data_[i]))) return false;
    return true;
  }

  void set_zero() { data_.setZero(); }

  std::string dims_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < dims_.size(); ++i) os << (i ? "x" : "") << dims_[i];
    os << "]";
    return os.str();
  }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(dims_);
    for (long i = 0; i < data_.size(); ++i) out[i] = static_cast<Other>(data_[i]);
    return out;
  }

 private:
  std::vector<int> dims_;
  Storage data_;
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

}  // namespace pofsm
