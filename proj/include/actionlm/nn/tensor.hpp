#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "actionlm/errors.hpp"

namespace actionlm::nn {

// Dense row-major n-dimensional array. Real is float for training and double
// for gradient verification; both instantiations share all code.
template <class Real>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<long> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(count(shape_)), Real(0));
  }

  Tensor(std::vector<long> shape, std::vector<Real> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (static_cast<long>(data_.size()) != count(shape_))
      throw ShapeError("tensor init: " + std::to_string(data_.size()) + " values for shape " + shape_str());
  }

  static Tensor zeros(std::vector<long> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<long> shape, Real v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  static Tensor scalar(Real v) { return Tensor({}, {v}); }

  long rank() const { return static_cast<long>(shape_.size()); }
  long dim(long i) const { return shape_[static_cast<std::size_t>(i)]; }
  const std::vector<long>& shape() const { return shape_; }
  long numel() const { return static_cast<long>(data_.size()); }
  bool empty() const { return data_.empty() && shape_.empty(); }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::vector<Real>& values() { return data_; }
  const std::vector<Real>& values() const { return data_; }

  Real& operator[](long i) { return data_[static_cast<std::size_t>(i)]; }
  Real operator[](long i) const { return data_[static_cast<std::size_t>(i)]; }

  // 2-D accessors (most of the engine works on matrices).
  Real& at(long i, long j) { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }
  Real at(long i, long j) const { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }

  long rows() const { return rank() >= 1 ? shape_[0] : 1; }
  long cols() const { return rank() >= 2 ? shape_[1] : 1; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  std::string shape_str() const {
    std::ostringstream ss;
    ss << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) ss << (i ? "," : "") << shape_[i];
    ss << ']';
    return ss.str();
  }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (Real v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  static long count(const std::vector<long>& shape) {
    long n = 1;
    for (long d : shape) {
      if (d < 0) throw ShapeError("negative extent in shape");
      n *= d;
    }
    return n;
  }

 private:
  std::vector<long> shape_;
  std::vector<Real> data_;
};

// C[m,n] += A[m,p] * B[p,n]; inner loop is unit-stride over j so it
// vectorizes. The k-ascending accumulation order is the documented, fixed
// reduction order.
template <class Real>
void matmul_acc(const Real* a, const Real* b, Real* c, long m, long p, long n) {
  for (long i = 0; i < m; ++i) {
    const Real* arow = a + i * p;
    Real* crow = c + i * n;
    for (long k = 0; k < p; ++k) {
      Real av = arow[k];
      if (av == Real(0)) continue;
      const Real* brow = b + k * n;
      for (long j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[m,p] * B[n,p]^T  (rows of B dotted against rows of A).
template <class Real>
void matmul_nt_acc(const Real* a, const Real* b, Real* c, long m, long p, long n) {
  for (long i = 0; i < m; ++i) {
    const Real* arow = a + i * p;
    Real* crow = c + i * n;
    for (long j = 0; j < n; ++j) {
      const Real* brow = b + j * p;
      Real s = 0;
      for (long k = 0; k < p; ++k) s += arow[k] * brow[k];
      crow[j] += s;
    }
  }
}

// C[p,n] += A[m,p]^T * B[m,n].
template <class Real>
void matmul_tn_acc(const Real* a, const Real* b, Real* c, long m, long p, long n) {
  for (long i = 0; i < m; ++i) {
    const Real* arow = a + i * p;
    const Real* brow = b + i * n;
    for (long k = 0; k < p; ++k) {
      Real av = arow[k];
      if (av == Real(0)) continue;
      Real* crow = c + k * n;
      for (long j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace actionlm::nn
