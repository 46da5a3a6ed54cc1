#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <utility>

#include "signa/diffcore/error.hpp"
#include "signa/diffcore/tensor.hpp"

namespace signa {

/// A trainable tensor with its gradient accumulator.
template <std::floating_point Real>
struct BasicParameter {
  BasicParameter(std::string name_, BasicTensor<Real> value_)
      : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

  void zero_grad() { grad.fill(Real(0)); }

  std::string name;
  BasicTensor<Real> value;
  BasicTensor<Real> grad;
};

using Parameter = BasicParameter<double>;

template <std::floating_point Real>
class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; invalid once the tape
/// has been consumed by backward() or reset().
template <std::floating_point Real>
class Var {
 public:
  Var() = default;

  const BasicTensor<Real>& value() const { return tape().value(*this); }
  const Shape& shape() const { return value().shape(); }
  Tape<Real>& tape() const {
    if (tape_ == nullptr) throw ContractError("use of an unbound Var");
    return *tape_;
  }
  std::size_t id() const noexcept { return id_; }
  std::uint64_t generation() const noexcept { return generation_; }
  bool requires_grad() const { return tape().requires_grad(*this); }

 private:
  friend class Tape<Real>;
  Var(Tape<Real>* tape, std::size_t id, std::uint64_t generation) : tape_(tape), id_(id), generation_(generation) {}

  Tape<Real>* tape_ = nullptr;
  std::size_t id_ = 0;
  std::uint64_t generation_ = 0;
};

/// Single-use reverse-mode tape. Nodes are appended in evaluation order, so
/// reverse insertion order is a valid topological order for backward().
template <std::floating_point Real>
class Tape {
 public:
  using Tensor = BasicTensor<Real>;
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Real> constant(Tensor value) { return push(std::move(value), false, nullptr, {}, "constant"); }

  Var<Real> param(BasicParameter<Real>& p) {
    if (p.grad.shape() != p.value.shape())
      throw ContractError("parameter '" + p.name + "' grad shape does not match value shape");
    return push(p.value, true, &p, {}, p.name.c_str());
  }

  /// Records an op output. `backward` runs only if any input requires grad.
  Var<Real> record(Tensor value, bool requires_grad, Backward backward, const char* op) {
    return push(std::move(value), requires_grad, nullptr, requires_grad ? std::move(backward) : Backward{}, op);
  }

  const Tensor& value(const Var<Real>& v) const { return node(v).value; }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(const Var<Real>& v) const { return node(v).requires_grad; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  /// Gradient buffer of node `id`, zero-allocated on first use.
  Tensor& grad(std::size_t id) {
    auto& n = nodes_.at(id);
    if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
    return n.grad;
  }

  bool has_grad(std::size_t id) const {
    const auto& n = nodes_.at(id);
    return n.grad.shape() == n.value.shape() && n.grad.size() == n.value.size() && n.value.size() > 0;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Accumulates d(loss)/d(param) into every reachable Parameter and consumes the tape.
  void backward(const Var<Real>& loss) {
    const auto& root = node(loss);
    if (root.value.size() != 1)
      throw ContractError("backward() needs a scalar loss, got shape " + signa::to_string(root.value.shape()));
    if (root.requires_grad) {
      grad(loss.id()).fill(Real(1));
      for (std::size_t i = loss.id() + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (!n.requires_grad || !has_grad(i)) continue;
        if (n.backward) n.backward(*this, i);
        if (n.param != nullptr) n.param->grad += n.grad;
      }
    }
    reset();
  }

  void reset() {
    nodes_.clear();
    ++generation_;
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BasicParameter<Real>* param = nullptr;
    Backward backward;
  };

  Var<Real> push(Tensor value, bool requires_grad, BasicParameter<Real>* p, Backward backward, const char* op) {
    if (!value.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
    nodes_.push_back(Node{std::move(value), Tensor(Shape{0}), requires_grad, p, std::move(backward)});
    return Var<Real>(this, nodes_.size() - 1, generation_);
  }

  const Node& node(const Var<Real>& v) const {
    if (&v.tape() != this || v.generation() != generation_ || v.id() >= nodes_.size())
      throw ContractError("Var does not belong to the live recording of this tape");
    return nodes_[v.id()];
  }

  std::deque<Node> nodes_;
  std::uint64_t generation_ = 1;
};

}  // namespace signa
