#include "dragan/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <optional>
#include <stdexcept>
#include <unordered_set>

#include "dragan/ops.hpp"

namespace dragan {
namespace detail {

uint64_t next_node_id() {
  static std::atomic<uint64_t> counter{0};
  return ++counter;
}

}  // namespace detail

namespace {
thread_local bool grad_mode_enabled = true;
}

bool GradMode::enabled() { return grad_mode_enabled; }
void GradMode::set_enabled(bool on) { grad_mode_enabled = on; }

template <typename T>
Var<T>::Var(Tensor<T> value, bool requires_grad) : node_(std::make_shared<detail::Node<T>>()) {
  node_->value = std::move(value);
  node_->id = detail::next_node_id();
  node_->requires_grad = requires_grad;
}

template <typename T>
void Var<T>::assign(Tensor<T> value) const {
  if (!is_leaf()) throw std::logic_error("assign() on a non-leaf variable");
  if (value.shape() != node_->value.shape()) {
    throw std::invalid_argument("assign() shape change " + shape_str(node_->value.shape()) + " -> " +
                                shape_str(value.shape()));
  }
  node_->value = std::move(value);
}

template <typename T>
Var<T> make_op(const char* op, Tensor<T> value, std::vector<Var<T>> inputs, detail::BackwardFn<T> backward) {
  auto node = std::make_shared<detail::Node<T>>();
  node->value = std::move(value);
  node->id = detail::next_node_id();
  node->op = op;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Var<T>& v) { return v.defined() && v.requires_grad(); });
  if (GradMode::enabled() && any) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Var<T>::from_node(std::move(node));
}

template <typename T>
Tensor<T> Gradients<T>::get(const Var<T>& v) const {
  auto it = grads_.find(v.id());
  if (it == grads_.end()) return Tensor<T>::zeros(v.shape());
  return it->second;
}

namespace {

// Nodes that require grad and are reachable from `root`, sorted by
// decreasing id (reverse topological order).
template <typename T>
std::vector<Var<T>> collect(const Var<T>& root) {
  std::vector<Var<T>> order;
  std::unordered_set<uint64_t> seen;
  std::vector<Var<T>> stack{root};
  seen.insert(root.id());
  while (!stack.empty()) {
    Var<T> v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (const auto& in : v.inputs()) {
      if (in.defined() && in.requires_grad() && seen.insert(in.id()).second) stack.push_back(in);
    }
  }
  std::sort(order.begin(), order.end(), [](const Var<T>& a, const Var<T>& b) { return a.id() > b.id(); });
  return order;
}

// Core reverse sweep. `relevant(id)` limits propagation to nodes with a path
// to some target.
template <typename T>
std::unordered_map<uint64_t, Var<T>> sweep(const Var<T>& root, const Var<T>& seed,
                                           const std::vector<Var<T>>& order,
                                           const std::unordered_set<uint64_t>& relevant,
                                           const std::unordered_set<uint64_t>& keep) {
  std::unordered_map<uint64_t, Var<T>> acc;
  acc.emplace(root.id(), seed);
  for (const auto& v : order) {
    auto it = acc.find(v.id());
    if (it == acc.end() || v.is_leaf()) continue;
    const auto& ins = v.inputs();
    std::vector<bool> needs(ins.size());
    bool any = false;
    for (size_t i = 0; i < ins.size(); ++i) {
      needs[i] = ins[i].defined() && ins[i].requires_grad() && relevant.count(ins[i].id()) != 0;
      any = any || needs[i];
    }
    if (!any) continue;
    const Var<T> g = it->second;
    std::vector<Var<T>> parts = v.backward_fn()(v, g, needs);
    for (size_t i = 0; i < ins.size(); ++i) {
      if (!needs[i] || i >= parts.size() || !parts[i].defined()) continue;
      if (parts[i].shape() != ins[i].shape()) {
        throw std::logic_error(std::string("backward of ") + v.op() + " produced gradient " +
                               shape_str(parts[i].shape()) + " for input " + shape_str(ins[i].shape()));
      }
      auto [slot, fresh] = acc.try_emplace(ins[i].id(), parts[i]);
      if (!fresh) slot->second = add(slot->second, parts[i]);
    }
    // Intermediate gradients are no longer needed once propagated.
    if (keep.count(v.id()) == 0) acc.erase(v.id());
  }
  return acc;
}

template <typename T>
std::unordered_set<uint64_t> relevant_set(const std::vector<Var<T>>& order,
                                          const std::unordered_set<uint64_t>& targets) {
  std::unordered_set<uint64_t> rel;
  // Ascending id order: inputs are decided before their consumers.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Var<T>& v = *it;
    bool r = targets.count(v.id()) != 0;
    for (const auto& in : v.inputs()) {
      if (r) break;
      r = in.defined() && rel.count(in.id()) != 0;
    }
    if (r) rel.insert(v.id());
  }
  return rel;
}

}  // namespace

template <typename T>
std::vector<Var<T>> grad(const Var<T>& output, std::span<const Var<T>> wrt, const Var<T>& grad_output,
                         bool create_graph, bool allow_unused) {
  Var<T> seed = grad_output;
  if (!seed.defined()) seed = constant(Tensor<T>::ones(output.shape()));
  if (seed.shape() != output.shape()) {
    throw std::invalid_argument("grad_output shape " + shape_str(seed.shape()) + " != output shape " +
                                shape_str(output.shape()));
  }
  std::vector<Var<T>> result(wrt.size());
  if (!output.requires_grad()) {
    if (!allow_unused && !wrt.empty()) throw std::invalid_argument("output does not depend on any target");
    return result;
  }
  const auto order = collect(output);
  std::unordered_set<uint64_t> targets;
  for (const auto& w : wrt) targets.insert(w.id());
  const auto rel = relevant_set(order, targets);

  std::unordered_map<uint64_t, Var<T>> acc;
  {
    std::optional<NoGradGuard> off;
    std::optional<EnableGradGuard> on;
    if (create_graph) on.emplace(); else off.emplace();
    acc = sweep(output, seed, order, rel, targets);
  }
  for (size_t i = 0; i < wrt.size(); ++i) {
    auto it = acc.find(wrt[i].id());
    if (it != acc.end()) {
      result[i] = it->second;
    } else if (!allow_unused) {
      throw std::invalid_argument("target variable is not on the path to the output");
    }
  }
  return result;
}

template <typename T>
Gradients<T> backward(const Var<T>& loss) {
  if (loss.numel() != 1) {
    throw std::invalid_argument("backward() needs a scalar loss, got shape " + shape_str(loss.shape()));
  }
  Gradients<T> out;
  if (!loss.requires_grad()) return out;
  const auto order = collect(loss);
  std::unordered_set<uint64_t> all;
  for (const auto& v : order) all.insert(v.id());
  std::unordered_map<uint64_t, Var<T>> acc;
  {
    NoGradGuard off;
    acc = sweep(loss, constant(Tensor<T>::ones(loss.shape())), order, all, {});
  }
  for (const auto& v : order) {
    if (!v.is_leaf()) continue;
    auto it = acc.find(v.id());
    if (it != acc.end()) out.set(v.id(), it->second.value());
  }
  return out;
}

template <typename T>
Var<T> input_gradient(const Var<T>& output, const Var<T>& wrt) {
  EnableGradGuard on;
  const Var<T> total = sum(output);
  const Var<T> targets[] = {wrt};
  auto g = grad<T>(total, targets, {}, /*create_graph=*/true, /*allow_unused=*/true);
  if (!g[0].defined()) throw std::invalid_argument("input_gradient: variable is not on the path to the output");
  return g[0];
}

template class Var<float>;
template class Var<double>;
template class Gradients<float>;
template class Gradients<double>;

#define DRAGAN_AUTODIFF(T)                                                                              \
  template Var<T> make_op<T>(const char*, Tensor<T>, std::vector<Var<T>>, detail::BackwardFn<T>);       \
  template std::vector<Var<T>> grad<T>(const Var<T>&, std::span<const Var<T>>, const Var<T>&, bool, bool); \
  template Gradients<T> backward<T>(const Var<T>&);                                                     \
  template Var<T> input_gradient<T>(const Var<T>&, const Var<T>&);

DRAGAN_AUTODIFF(float)
DRAGAN_AUTODIFF(double)

}  // namespace dragan
