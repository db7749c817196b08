#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "morphforge/core/tensor.hpp"

namespace morphforge::nn {

/// One vertex of the reverse-mode graph. Leaves with requires_grad are
/// parameters; interior nodes carry a backward closure that pushes their
/// gradient into their parents.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Tensor&)> backward;

  void accumulate(const Tensor& g);
  Tensor& grad_buffer();
};

/// Shared handle to a graph node. Copies alias the same node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  /// Direct write access, used by optimisers and checkpoint loading.
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return node_ != nullptr; }
  void zero_grad();
  double item() const;

  int channels() const { return value().channels(); }
  int height() const { return value().height(); }
  int width() const { return value().width(); }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  friend Var make_op(Tensor, std::vector<Var>,
                     std::function<void(const Tensor&)>);
  std::shared_ptr<Node> node_;
};

/// Creates an interior node. The backward closure is dropped (and the parents
/// released) when grad mode is off or no input requires grad.
Var make_op(Tensor value, std::vector<Var> inputs,
            std::function<void(const Tensor&)> backward);

Var constant(Tensor value);
Var detach(const Var& v);

/// Reverse sweep from a scalar (1x1x1) root. Parameter gradients accumulate
/// across calls until zero_grad.
void backward(const Var& root);

bool grad_enabled();

/// Disables graph construction on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

struct NamedParam {
  std::string name;
  Var var;
};

}  // namespace morphforge::nn
