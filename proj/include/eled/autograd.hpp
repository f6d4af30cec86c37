#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "eled/tensor.hpp"

namespace eled::ag {

struct Node;
using Var = std::shared_ptr<Node>;

/*
 * One vertex of the dynamically built computation graph. Graphs are rebuilt
 * per forward pass and freed when the last Var goes out of scope. backward()
 * on the root runs the closures in reverse topological order; each closure
 * reads node->grad and accumulates into its parents' grad tensors.
 */
struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily by backward
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;

  const std::vector<int64_t>& shape() const { return value.shape(); }

  Tensor& ensure_grad() {
    if (!grad.defined()) grad = Tensor::zeros(value.shape());
    return grad;
  }
};

// Leaf whose grad buffer is owned by the node itself.
Var leaf(Tensor value, bool requires_grad);

// Internal node helper used by op implementations.
Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

// Run reverse-mode accumulation from a scalar (or any) root. seed defaults to
// ones. Leaf grads accumulate across calls until zeroed by the caller.
void backward(const Var& root, const Tensor* seed = nullptr);

// Breaks the graph: value passes through, gradient stops.
Var detach(const Var& v);

}  // namespace eled::ag
