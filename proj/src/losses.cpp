#include "marginlab/losses.hpp"

#include "marginlab/margin_stats.hpp"

#include <stdexcept>
#include <string>

namespace marginlab {

namespace {

void require_pm_one(const Tensor& labels, const char* op) {
  for (Index i = 0; i < labels.size(); ++i)
    if (labels[i] != 1.0 && labels[i] != -1.0)
      throw std::invalid_argument(std::string(op) + ": labels must be -1 or +1");
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
}

/// mean of weights * (gamma_bar - 1/2)^2 given margins and their normalizer.
Var halfway_core(Graph& g, Var gamma, Var denom, const Tensor* weights) {
  Var bar = divide(gamma, clamp_min(denom, kNormGuard));
  Var sq = square(add_scalar(bar, -0.5));
  if (weights != nullptr) sq = multiply(sq, g.input(*weights));
  return reduce_mean(sq);
}

}  // namespace

double class_weight(int y, int class_count) {
  if (class_count < 2) throw std::invalid_argument("class_weight: need at least 2 classes");
  if (y != 1 && y != -1) throw std::invalid_argument("class_weight: label must be -1 or +1");
  return y == 1 ? 1.0 : 1.0 / static_cast<double>(class_count - 1);
}

Tensor class_weight_matrix(const Tensor& labels, int class_count) {
  require_pm_one(labels, "class_weight_matrix");
  Tensor w(labels.shape());
  for (Index i = 0; i < labels.size(); ++i)
    w[i] = class_weight(labels[i] > 0 ? 1 : -1, class_count);
  return w;
}

Var halfway_loss_output(Graph& g, Var outputs, const Tensor& labels, int class_count) {
  const Tensor& out = outputs.value();
  if (out.rank() != 1)
    throw ShapeError("halfway_loss_output: expected a vector of outputs, got " +
                     shape_string(out.shape()));
  require_same_shape("halfway_loss_output", out, labels);
  require_pm_one(labels, "halfway_loss_output");
  Tensor weights = class_weight_matrix(labels, class_count);
  Var gamma = multiply(outputs, g.input(labels));
  return halfway_core(g, gamma, reduce_max_abs(gamma), &weights);
}

Var halfway_loss(Graph& g, Var outputs, const Tensor& labels, NormScope scope) {
  const Tensor& out = outputs.value();
  if (out.rank() != 2)
    throw ShapeError("halfway_loss: expected m-by-K outputs, got " +
                     shape_string(out.shape()));
  require_same_shape("halfway_loss", out, labels);
  require_pm_one(labels, "halfway_loss");
  int k = static_cast<int>(out.extent(1));
  Tensor weights = class_weight_matrix(labels, k);
  Var gamma = multiply(outputs, g.input(labels));
  Var denom = scope == NormScope::per_output ? reduce_max_abs(gamma, 0) : reduce_max_abs(gamma);
  return halfway_core(g, gamma, denom, &weights);
}

Var halfway_loss_two_class(Graph& g, Var outputs, const Tensor& labels) {
  const Tensor& out = outputs.value();
  if (out.rank() != 1)
    throw ShapeError("halfway_loss_two_class: expected a vector of outputs, got " +
                     shape_string(out.shape()));
  require_same_shape("halfway_loss_two_class", out, labels);
  require_pm_one(labels, "halfway_loss_two_class");
  Var gamma = multiply(outputs, g.input(labels));
  return halfway_core(g, gamma, reduce_max_abs(gamma), nullptr);
}

Var softmax_cross_entropy(Graph& g, Var logits, const Tensor& onehot_labels) {
  const Tensor& lv = logits.value();
  if (lv.rank() != 2)
    throw ShapeError("softmax_cross_entropy: expected m-by-K logits, got " +
                     shape_string(lv.shape()));
  require_same_shape("softmax_cross_entropy", lv, onehot_labels);
  for (Index i = 0; i < onehot_labels.extent(0); ++i) {
    int ones = 0;
    for (Index j = 0; j < onehot_labels.extent(1); ++j) {
      double v = onehot_labels(i, j);
      if (v == 1.0)
        ++ones;
      else if (v != 0.0)
        throw std::invalid_argument("softmax_cross_entropy: labels must be one-hot");
    }
    if (ones != 1)
      throw std::invalid_argument("softmax_cross_entropy: labels must be one-hot");
  }
  Var picked = multiply(log_softmax(logits), g.input(onehot_labels));
  return scale(reduce_sum(picked), -1.0 / static_cast<double>(lv.extent(0)));
}

Var mse_baseline(Graph& g, Var outputs, const Tensor& pm_one_labels) {
  require_same_shape("mse_baseline", outputs.value(), pm_one_labels);
  require_pm_one(pm_one_labels, "mse_baseline");
  return reduce_mean(square(subtract(outputs, g.input(pm_one_labels))));
}

Var build_loss(Graph& g, Var outputs, const Tensor& labels, const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::softmax_ce:
      return softmax_cross_entropy(g, outputs, labels);
    case LossKind::halfway:
      return halfway_loss(g, outputs, labels);
    case LossKind::mse_baseline:
      return mse_baseline(g, outputs, labels);
  }
  throw std::logic_error("build_loss: unknown loss kind");
}

}  // namespace marginlab
