#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <vector>

#include "eled/common.hpp"
#include "eled/rng.hpp"

namespace eled {

/*
 * Dense row-major double tensor. Storage is shared between copies; ops that
 * produce new values always allocate fresh storage, so sharing is safe as
 * long as nobody writes through data() on a tensor that has been handed out.
 * Mutation is confined to initializers, optimizers and op internals.
 */
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape) : Tensor(std::move(shape), Fill::Zero) {}

  Tensor(std::vector<int64_t> shape, std::vector<double> values)
      : Tensor(std::move(shape), Fill::None) {
    ELED_CHECK_SHAPE(static_cast<int64_t>(values.size()) == size_,
                     "tensor init: ", values.size(), " values for shape of ", size_);
    std::copy(values.begin(), values.end(), data_.get());
  }

  static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }

  // Uninitialized storage for buffers that are fully overwritten.
  static Tensor uninit(std::vector<int64_t> shape) {
    return Tensor(std::move(shape), Fill::None);
  }

  static Tensor full(std::vector<int64_t> shape, double v) {
    Tensor t(std::move(shape), Fill::None);
    t.fill(v);
    return t;
  }

  static Tensor randn(std::vector<int64_t> shape, Rng& rng, double stddev = 1.0) {
    Tensor t(std::move(shape), Fill::None);
    for (int64_t i = 0; i < t.size_; ++i) t.data_.get()[i] = rng.normal(0.0, stddev);
    return t;
  }

  static Tensor rand(std::vector<int64_t> shape, Rng& rng, double lo = 0.0, double hi = 1.0) {
    Tensor t(std::move(shape), Fill::None);
    for (int64_t i = 0; i < t.size_; ++i) t.data_.get()[i] = rng.uniform(lo, hi);
    return t;
  }

  bool defined() const { return static_cast<bool>(data_); }
  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t numel() const { return size_; }

  double* data() { return data_.get(); }
  const double* data() const { return data_.get(); }

  double at(int64_t i) const { return data_.get()[i]; }

  Tensor clone() const {
    Tensor t(shape_, Fill::None);
    std::copy(data_.get(), data_.get() + size_, t.data_.get());
    return t;
  }

  // Same storage, new shape (element count must match).
  Tensor reshaped(std::vector<int64_t> shape) const {
    ELED_CHECK_SHAPE(count(shape) == numel(), "reshape: ", count(shape), " vs ", numel());
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    t.size_ = size_;
    return t;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(double v) {
    for (int64_t i = 0; i < size_; ++i) data_.get()[i] = v;
  }

  double abs_max() const {
    double m = 0.0;
    for (int64_t i = 0; i < size_; ++i) m = std::max(m, std::abs(data_.get()[i]));
    return m;
  }

  double sum() const {
    double s = 0.0;
    for (int64_t i = 0; i < size_; ++i) s += data_.get()[i];
    return s;
  }

  bool all_finite() const;

  static int64_t count(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      ELED_CHECK_SHAPE(d >= 0, "negative dimension");
      n *= d;
    }
    return n;
  }

private:
  enum class Fill { Zero, None };

  Tensor(std::vector<int64_t> shape, Fill fill)
      : shape_(std::move(shape)), size_(count(shape_)),
        data_(new double[static_cast<size_t>(size_)], std::default_delete<double[]>()) {
    if (fill == Fill::Zero) std::fill(data_.get(), data_.get() + size_, 0.0);
  }

  std::vector<int64_t> shape_;
  int64_t size_ = 0;
  std::shared_ptr<double> data_;
};

std::string shape_str(const std::vector<int64_t>& shape);
std::string shape_str(const Tensor& t);

}  // namespace eled
