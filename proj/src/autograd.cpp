#include "eled/autograd.hpp"

#include <unordered_set>

namespace eled::ag {

Var leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  n->backward_fn = std::move(backward_fn);
  for (const auto& p : n->parents) {
    if (p && p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  return n;
}

namespace {
void topo_sort(const Var& root, std::vector<Node*>& order) {
  // Iterative DFS; graphs can be a few thousand nodes deep.
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx].get();
      ++idx;
      if (p && p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}
}  // namespace

void backward(const Var& root, const Tensor* seed) {
  if (!root->requires_grad) return;
  root->ensure_grad();
  if (seed) {
    ELED_CHECK_SHAPE(seed->same_shape(root->value), "backward seed shape mismatch");
    Tensor& g = root->grad;
    for (int64_t i = 0; i < g.numel(); ++i) g.data()[i] += seed->data()[i];
  } else {
    Tensor& g = root->grad;
    for (int64_t i = 0; i < g.numel(); ++i) g.data()[i] += 1.0;
  }

  std::vector<Node*> order;
  topo_sort(root, order);
  // order is post-order (parents before children); walk it backwards.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.defined()) n->backward_fn(*n);
  }
}

Var detach(const Var& v) { return leaf(v->value, false); }

}  // namespace eled::ag
