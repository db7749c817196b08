#include "morphforge/nn/var.hpp"

#include <unordered_set>
#include <utility>

#include "morphforge/core/error.hpp"

namespace morphforge::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor& Node::grad_buffer() {
  if (grad.empty() && !value.empty()) {
    grad = Tensor(value.channels(), value.height(), value.width());
  }
  return grad;
}

void Node::accumulate(const Tensor& g) {
  Tensor& buf = grad_buffer();
  require_same_shape(buf, g, "gradient accumulation");
  double* dst = buf.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

Var::Var(Tensor value, bool requires_grad)
    : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

void Var::zero_grad() {
  if (node_ && !node_->grad.empty()) node_->grad.fill(0.0);
}

double Var::item() const {
  if (value().size() != 1) {
    throw StructuralError("item() on non-scalar " + value().shape_string());
  }
  return value()[0];
}

Var make_op(Tensor value, std::vector<Var> inputs,
            std::function<void(const Tensor&)> backward) {
  Var out(std::move(value));
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const Var& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  out.node_->requires_grad = true;
  out.node_->parents.reserve(inputs.size());
  for (Var& in : inputs) {
    if (in.defined()) out.node_->parents.push_back(in.shared());
  }
  out.node_->backward = std::move(backward);
  return out;
}

Var constant(Tensor value) { return Var(std::move(value), false); }

Var detach(const Var& v) { return Var(v.value(), false); }

void backward(const Var& root) {
  if (!root.defined() || root.value().size() != 1) {
    throw StructuralError("backward() requires a scalar root");
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(node->grad);
  }
  // Interior gradients are not needed after the sweep.
  for (Node* node : order) {
    if (node->backward) node->grad = Tensor();
  }
}

}  // namespace morphforge::nn
