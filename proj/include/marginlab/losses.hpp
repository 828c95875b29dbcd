#ifndef MARGINLAB_LOSSES_HPP
#define MARGINLAB_LOSSES_HPP

#include "marginlab/graph.hpp"
#include "marginlab/ops.hpp"

namespace marginlab {

enum class LabelCoding { zero_one, pm_one };

enum class LossKind { softmax_ce, halfway, mse_baseline };

/// Scope of the max-abs margin normalization inside the multi-class halfway
/// loss: independently per output (default) or jointly over all outputs.
enum class NormScope { per_output, joint };

struct LossSpec {
  LossKind kind = LossKind::softmax_ce;
  LabelCoding coding = LabelCoding::zero_one;
  int class_count = 2;

  static LossSpec softmax(int k) { return {LossKind::softmax_ce, LabelCoding::zero_one, k}; }
  static LossSpec halfway(int k) { return {LossKind::halfway, LabelCoding::pm_one, k}; }
  static LossSpec mse(int k) { return {LossKind::mse_baseline, LabelCoding::pm_one, k}; }
};

/// Cost-sensitive weight balancing one-against-rest label imbalance:
/// 1 for y = +1, 1/(K-1) for y = -1.
double class_weight(int y, int class_count);

/// Elementwise class weights for a matrix of +-1 labels.
Tensor class_weight_matrix(const Tensor& labels, int class_count);

/// Halfway loss of one output: mean of w_i * (gamma_bar_i - 1/2)^2 with
/// margins normalized by this batch's own max-abs margin. Differentiable
/// end to end, including through the max.
Var halfway_loss_output(Graph& g, Var outputs, const Tensor& labels, int class_count);

/// Multi-class halfway loss: the per-output losses averaged over outputs,
/// each output normalized independently within the batch (NormScope::joint
/// normalizes by the max over all outputs instead).
Var halfway_loss(Graph& g, Var outputs, const Tensor& labels,
                 NormScope scope = NormScope::per_output);

/// Two-class halfway loss over a margin vector: mean of (gamma_bar_i - 1/2)^2.
Var halfway_loss_two_class(Graph& g, Var outputs, const Tensor& labels);

/// Mean over the batch of -log softmax(logits)[true class], in
/// log-sum-exp-stable form. Labels must be one-hot rows.
Var softmax_cross_entropy(Graph& g, Var logits, const Tensor& onehot_labels);

/// MSE against +-1 targets, without margin normalization.
Var mse_baseline(Graph& g, Var outputs, const Tensor& pm_one_labels);

/// Dispatch on spec.kind; labels must already use spec's coding.
Var build_loss(Graph& g, Var outputs, const Tensor& labels, const LossSpec& spec);

}  // namespace marginlab

#endif  // MARGINLAB_LOSSES_HPP
