#pragma once

#include <cmath>
#include <deque>
#include <string>

#include "actionlm/errors.hpp"
#include "actionlm/nn/tensor.hpp"
#include "actionlm/rng.hpp"

namespace actionlm::nn {

// A named trainable tensor with its gradient and Adam state. Moment buffers
// always share the value's shape.
template <class Real>
struct Parameter {
  std::string name;
  Tensor<Real> value;
  Tensor<Real> grad;
  Tensor<Real> m1;  // first moment
  Tensor<Real> m2;  // second moment
  long steps = 0;
  bool grad_ready = false;  // set when a backward pass deposited into grad

  Parameter(std::string n, Tensor<Real> v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.shape()),
        m1(value.shape()),
        m2(value.shape()) {}

  void zero_grad() {
    grad.fill(Real(0));
    grad_ready = false;
  }
};

// Owns a model's parameters in a fixed registration order; that order defines
// optimizer iteration and checkpoint layout. deque keeps addresses stable.
template <class Real>
class ParamSet {
 public:
  Parameter<Real>& add(std::string name, Tensor<Real> value) {
    items_.emplace_back(std::move(name), std::move(value));
    return items_.back();
  }

  std::deque<Parameter<Real>>& items() { return items_; }
  const std::deque<Parameter<Real>>& items() const { return items_; }

  Parameter<Real>& by_name(const std::string& name) {
    for (auto& p : items_)
      if (p.name == name) return p;
    throw LookupError("no parameter named " + name);
  }

  long scalar_count() const {
    long n = 0;
    for (const auto& p : items_) n += p.value.numel();
    return n;
  }

  void zero_grads() {
    for (auto& p : items_) p.zero_grad();
  }

  // Uniform in +-1/sqrt(fan_in); the init used for linear and attention maps.
  static Tensor<Real> uniform_fan_in(std::vector<long> shape, long fan_in, Rng& rng) {
    Tensor<Real> t(std::move(shape));
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (long i = 0; i < t.numel(); ++i) t[i] = static_cast<Real>(rng.uniform(-bound, bound));
    return t;
  }

  static Tensor<Real> normal_init(std::vector<long> shape, double stddev, Rng& rng) {
    Tensor<Real> t(std::move(shape));
    for (long i = 0; i < t.numel(); ++i) t[i] = static_cast<Real>(rng.normal(0.0, stddev));
    return t;
  }

 private:
  std::deque<Parameter<Real>> items_;
};

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam update with bias correction. Throws if any parameter's gradient
// was never populated by a backward pass.
template <class Real>
void adam_step(ParamSet<Real>& params, const AdamOptions& opt) {
  for (auto& p : params.items())
    if (!p.grad_ready) throw StateError("adam_step: gradient not populated for " + p.name);
  for (auto& p : params.items()) {
    p.steps += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(p.steps));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(p.steps));
    Real* w = p.value.data();
    const Real* g = p.grad.data();
    Real* m1 = p.m1.data();
    Real* m2 = p.m2.data();
    const long n = p.value.numel();
    for (long i = 0; i < n; ++i) {
      const double gi = static_cast<double>(g[i]);
      const double a = static_cast<double>(m1[i]) * opt.beta1 + (1.0 - opt.beta1) * gi;
      const double b = static_cast<double>(m2[i]) * opt.beta2 + (1.0 - opt.beta2) * gi * gi;
      m1[i] = static_cast<Real>(a);
      m2[i] = static_cast<Real>(b);
      const double mhat = a / bc1;
      const double vhat = b / bc2;
      w[i] = static_cast<Real>(static_cast<double>(w[i]) - opt.lr * mhat / (std::sqrt(vhat) + opt.eps));
    }
  }
}

}  // namespace actionlm::nn
