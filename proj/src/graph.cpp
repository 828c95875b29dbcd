#include "marginlab/graph.hpp"

#include <stdexcept>

namespace marginlab {

Var Graph::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{node_count() - 1, this};
}

Var Graph::param(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.is_param = true;
  nodes_.push_back(std::move(n));
  param_ids_.push_back(node_count() - 1);
  return Var{node_count() - 1, this};
}

Var Graph::make_node(Tensor value, std::vector<int> parents, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (int p : parents) {
    if (p < 0 || p >= node_count())
      throw std::logic_error("parent index out of order in graph construction");
    if (nodes_[static_cast<std::size_t>(p)].requires_grad) n.requires_grad = true;
  }
  n.parents = std::move(parents);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{node_count() - 1, this};
}

GradientMap Graph::backward(Var root) const {
  if (root.graph != this || root.id < 0 || root.id >= node_count())
    throw std::invalid_argument("backward: root does not belong to this graph");
  const Tensor& rv = value(root);
  if (rv.size() != 1)
    throw std::invalid_argument("backward: root must be scalar, got shape " +
                                shape_string(rv.shape()));

  std::vector<Tensor> grads(nodes_.size());
  std::vector<char> has(nodes_.size(), 0);
  grads[static_cast<std::size_t>(root.id)] = Tensor::ones(rv.shape());
  has[static_cast<std::size_t>(root.id)] = 1;

  BackwardContext ctx(*this, grads, has);
  for (int id = root.id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!has[static_cast<std::size_t>(id)] || !n.requires_grad || !n.backward) continue;
    ctx.self_ = id;
    n.backward(grads[static_cast<std::size_t>(id)], ctx);
  }

  GradientMap gm;
  for (int pid : param_ids_) {
    if (pid > root.id || !has[static_cast<std::size_t>(pid)])
      gm.grads_.emplace(pid, Tensor::zeros(value(pid).shape()));
    else
      gm.grads_.emplace(pid, std::move(grads[static_cast<std::size_t>(pid)]));
  }
  return gm;
}

void Graph::check_finite() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!all_finite(nodes_[i].value))
      throw std::runtime_error("non-finite value in graph node " + std::to_string(i));
}

void BackwardContext::accumulate(int id, Tensor&& grad) {
  const Tensor& v = g_.nodes_[static_cast<std::size_t>(id)].value;
  if (!grad.same_shape(v))
    throw ShapeError("gradient shape " + shape_string(grad.shape()) +
                     " does not match node shape " + shape_string(v.shape()));
  auto idx = static_cast<std::size_t>(id);
  if (!has_[idx]) {
    grads_[idx] = std::move(grad);
    has_[idx] = 1;
  } else {
    grads_[idx].array() += grad.array();
  }
}

void BackwardContext::accumulate(int id, const Tensor& grad) {
  accumulate(id, Tensor(grad));
}

}  // namespace marginlab
