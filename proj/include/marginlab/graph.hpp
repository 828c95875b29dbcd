#ifndef MARGINLAB_GRAPH_HPP
#define MARGINLAB_GRAPH_HPP

#include <deque>
#include <functional>
#include <limits>
#include <unordered_map>
#include <vector>

#include "marginlab/tensor.hpp"

namespace marginlab {

class Graph;
class BackwardContext;

/// Handle to a node in a Graph. Cheap to copy; valid for the graph's lifetime.
struct Var {
  int id = -1;
  Graph* graph = nullptr;

  bool valid() const { return graph != nullptr && id >= 0; }
  const Tensor& value() const;
};

/// Gradients of a scalar root with respect to every parameter node of the
/// graph it came from. Parameters never reached by the backward sweep carry
/// zero gradients of the parameter's shape.
class GradientMap {
 public:
  const Tensor& at(int node_id) const {
    auto it = grads_.find(node_id);
    if (it == grads_.end())
      throw std::out_of_range("no gradient recorded for node " + std::to_string(node_id));
    return it->second;
  }
  const Tensor& at(Var param) const { return at(param.id); }
  bool contains(int node_id) const { return grads_.count(node_id) != 0; }
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Graph;
  std::unordered_map<int, Tensor> grads_;
};

using BackwardFn = std::function<void(const Tensor& upstream, BackwardContext& ctx)>;

/// Reverse-mode tape. Nodes are appended in topological order by construction
/// (every parent index precedes its child); backward() walks them in exact
/// reverse order. Values are immutable once written, so a finished graph can
/// be read from any thread.
class Graph {
 public:
  /// Leaf that never receives a gradient (batch data, label constants).
  Var input(Tensor value);

  /// Leaf whose gradient backward() collects.
  Var param(Tensor value);

  /// Appends an op node. `backward` receives the node's upstream gradient and
  /// accumulates into its parents; pass nullptr for gradient-free nodes.
  Var make_node(Tensor value, std::vector<int> parents, BackwardFn backward);

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Tensor& value(Var v) const { return value(v.id); }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  bool requires_grad(int id) const {
    return nodes_[static_cast<std::size_t>(id)].requires_grad;
  }

  /// Gradients of the scalar `root` w.r.t. every param node.
  GradientMap backward(Var root) const;

  /// Ops report the distance from the nearest ReLU/max tie they saw while
  /// building; finite-difference tests read it to stay away from kinks.
  void note_kink_gap(double gap) {
    if (gap < kink_gap_) kink_gap_ = gap;
  }
  double min_kink_gap() const { return kink_gap_; }

  /// Throws if any cached forward value is NaN or Inf.
  void check_finite() const;

 private:
  struct Node {
    Tensor value;
    std::vector<int> parents;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_param = false;
  };

  // deque keeps value references stable while the tape grows
  std::deque<Node> nodes_;
  std::vector<int> param_ids_;
  double kink_gap_ = std::numeric_limits<double>::infinity();

  friend class BackwardContext;
};

/// Accumulation interface handed to per-node backward closures.
class BackwardContext {
 public:
  const Tensor& value(int id) const { return g_.nodes_[static_cast<std::size_t>(id)].value; }
  const Tensor& self() const { return g_.nodes_[static_cast<std::size_t>(self_)].value; }

  /// False when the parent's subtree holds no parameters; closures may skip
  /// the work entirely.
  bool needs(int id) const { return g_.nodes_[static_cast<std::size_t>(id)].requires_grad; }

  void accumulate(int id, Tensor&& grad);
  void accumulate(int id, const Tensor& grad);

 private:
  friend class Graph;
  BackwardContext(const Graph& g, std::vector<Tensor>& grads, std::vector<char>& has)
      : g_(g), grads_(grads), has_(has) {}

  const Graph& g_;
  std::vector<Tensor>& grads_;
  std::vector<char>& has_;
  int self_ = -1;
};

inline const Tensor& Var::value() const { return graph->value(id); }

}  // namespace marginlab

#endif  // MARGINLAB_GRAPH_HPP
