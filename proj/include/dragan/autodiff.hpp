#pragma once

// Reverse-mode automatic differentiation over Tensor values.
//
// Every op records a node holding its output value, its inputs and a
// backward rule. Backward rules are written in terms of the same
// differentiable ops, so gradients computed with `create_graph = true` are
// themselves graph nodes and can be differentiated again (double backprop,
// needed by the gradient penalty). With `create_graph = false` the rules run
// with recording disabled and cost no more than hand-written kernels.
//
// Node ids come from a global monotonically increasing counter, so creation
// order is a topological order of any graph.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dragan/tensor.hpp"

namespace dragan {

template <typename T>
class Var;

namespace detail {

template <typename T>
using BackwardFn = std::function<std::vector<Var<T>>(const Var<T>& out, const Var<T>& grad_out,
                                                     const std::vector<bool>& needs)>;

template <typename T>
struct Node {
  Tensor<T> value;
  uint64_t id = 0;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<Var<T>> inputs;
  BackwardFn<T> backward;
};

uint64_t next_node_id();

}  // namespace detail

/// Whether ops record graph structure on the current thread.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool on);
};

/// Disables graph recording for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

class EnableGradGuard {
 public:
  EnableGradGuard() : prev_(GradMode::enabled()) { GradMode::set_enabled(true); }
  ~EnableGradGuard() { GradMode::set_enabled(prev_); }
  EnableGradGuard(const EnableGradGuard&) = delete;
  EnableGradGuard& operator=(const EnableGradGuard&) = delete;

 private:
  bool prev_;
};

/// Handle to a graph node. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;

  /// Leaf variable. Parameters pass `requires_grad = true`.
  explicit Var(Tensor<T> value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  int64_t numel() const { return node_->value.numel(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return !node_->backward; }
  uint64_t id() const { return node_->id; }
  const char* op() const { return node_->op; }
  const std::vector<Var>& inputs() const { return node_->inputs; }
  const detail::BackwardFn<T>& backward_fn() const { return node_->backward; }

  /// In-place update of a leaf's value (optimizer steps, checkpoint loads).
  /// Only legal between steps; the shape must not change.
  void assign(Tensor<T> value) const;

  /// Same value, cut from the graph.
  Var detach() const { return Var(node_->value, false); }

  static Var from_node(std::shared_ptr<detail::Node<T>> n) {
    Var v;
    v.node_ = std::move(n);
    return v;
  }

  friend bool same_node(const Var& a, const Var& b) { return a.node_ == b.node_; }

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

/// Creates the output node of an op. Recording happens only when grad mode is
/// on and at least one input requires grad.
template <typename T>
Var<T> make_op(const char* op, Tensor<T> value, std::vector<Var<T>> inputs, detail::BackwardFn<T> backward);

/// Leaf gradients keyed by node id.
template <typename T>
class Gradients {
 public:
  void set(uint64_t id, Tensor<T> g) { grads_[id] = std::move(g); }
  bool contains(const Var<T>& v) const { return grads_.count(v.id()) != 0; }
  /// Gradient of a leaf; zeros of the leaf's shape if unreachable.
  Tensor<T> get(const Var<T>& v) const;
  size_t size() const { return grads_.size(); }

 private:
  std::unordered_map<uint64_t, Tensor<T>> grads_;
};

/// d(output)/d(wrt[i]) for each target, seeded with `grad_output` (ones of
/// the output's shape when undefined). With `create_graph` the results are
/// differentiable graph nodes. Targets not reached get an undefined Var
/// unless `allow_unused` is false, in which case an exception is thrown.
template <typename T>
std::vector<Var<T>> grad(const Var<T>& output, std::span<const Var<T>> wrt, const Var<T>& grad_output = {},
                         bool create_graph = false, bool allow_unused = true);

/// Gradients of a scalar loss with respect to every reachable leaf that
/// requires grad.
template <typename T>
Gradients<T> backward(const Var<T>& loss);

/// d(sum of output)/d(wrt) as a differentiable node. For a per-sample score
/// [N, 1] this is the stack of per-sample input gradients, since samples do
/// not interact. Throws if `wrt` does not influence `output`.
template <typename T>
Var<T> input_gradient(const Var<T>& output, const Var<T>& wrt);

extern template class Var<float>;
extern template class Var<double>;

}  // namespace dragan
