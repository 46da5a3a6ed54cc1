#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "signa/diffcore/error.hpp"
#include "signa/diffcore/tape.hpp"

namespace signa {

/// Adam with bias correction and decoupled weight decay.
template <std::floating_point Real>
class BasicAdam {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  BasicAdam(std::vector<BasicParameter<Real>*> params, Options options) : params_(std::move(params)), opt_(options) {
    if (!(opt_.learning_rate > 0.0)) throw InvalidArgument("Adam learning rate must be positive");
    if (!(opt_.weight_decay >= 0.0)) throw InvalidArgument("Adam weight decay must be non-negative");
    first_.reserve(params_.size());
    second_.reserve(params_.size());
    for (auto* p : params_) {
      first_.emplace_back(p->value.shape());
      second_.emplace_back(p->value.shape());
    }
  }

  /// Applies one update from the accumulated grads, then zeroes them.
  void step() {
    for (auto* p : params_)
      if (!p->grad.all_finite()) throw OptimizationError("non-finite gradient in parameter '" + p->name + "'");
    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double bc1 = 1.0 - std::pow(opt_.beta1, t);
    const double bc2 = 1.0 - std::pow(opt_.beta2, t);
    const double decay = 1.0 - opt_.learning_rate * opt_.weight_decay;
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = *params_[k];
      auto& m = first_[k];
      auto& v = second_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        const double mi = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g;
        const double vi = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g * g;
        m[i] = static_cast<Real>(mi);
        v[i] = static_cast<Real>(vi);
        double w = p.value[i];
        if (opt_.weight_decay > 0.0) w *= decay;
        w -= opt_.learning_rate * (mi / bc1) / (std::sqrt(vi / bc2) + opt_.epsilon);
        p.value[i] = static_cast<Real>(w);
      }
      p.zero_grad();
    }
  }

  void zero_grads() {
    for (auto* p : params_) p->zero_grad();
  }

  std::uint64_t step_count() const noexcept { return step_count_; }
  const Options& options() const noexcept { return opt_; }
  const BasicTensor<Real>& first_moment(std::size_t k) const { return first_.at(k); }
  const BasicTensor<Real>& second_moment(std::size_t k) const { return second_.at(k); }

 private:
  std::vector<BasicParameter<Real>*> params_;
  Options opt_;
  std::vector<BasicTensor<Real>> first_;
  std::vector<BasicTensor<Real>> second_;
  std::uint64_t step_count_ = 0;
};

using Adam = BasicAdam<double>;

}  // namespace signa
