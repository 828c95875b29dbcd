#include "marginlab/margin_stats.hpp"

#include <algorithm>
#include <stdexcept>

namespace marginlab {

namespace {
void require_nonempty(const VecRef& gamma, const char* op) {
  if (gamma.size() < 1) throw std::invalid_argument(std::string(op) + ": empty batch");
}
}  // namespace

double margin(const LinearHead& head, const VecRef& phi_x, int y) {
  if (head.w.size() != phi_x.size())
    throw ShapeError("margin: w has dimension " + std::to_string(head.w.size()) +
                     ", phi(x) has " + std::to_string(phi_x.size()));
  if (y != 1 && y != -1) throw std::invalid_argument("margin: label must be -1 or +1");
  return static_cast<double>(y) * (head.w.dot(phi_x) + head.b);
}

double margin_mean(const VecRef& gamma) {
  require_nonempty(gamma, "margin_mean");
  return gamma.mean();
}

double margin_variance(const VecRef& gamma) {
  require_nonempty(gamma, "margin_variance");
  double mu = gamma.mean();
  return (gamma.array() - mu).square().sum() / static_cast<double>(gamma.size());
}

Eigen::VectorXd normalize_margins(const VecRef& gamma) {
  require_nonempty(gamma, "normalize_margins");
  double denom = std::max(gamma.array().abs().maxCoeff(), kNormGuard);
  return gamma / denom;
}

double nmv(const VecRef& gamma) {
  Eigen::VectorXd bar = normalize_margins(gamma);
  return margin_variance(bar);
}

double classification_error(const VecRef& gamma) {
  require_nonempty(gamma, "classification_error");
  Index errors = (gamma.array() <= 0.0).count();
  return static_cast<double>(errors) / static_cast<double>(gamma.size());
}

double multiclass_test_error(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2)
    throw ShapeError("multiclass_test_error: logits must be rank 2, got " +
                     shape_string(logits.shape()));
  Index m = logits.extent(0), k = logits.extent(1);
  if (k < 2) throw ShapeError("multiclass_test_error: need at least 2 classes");
  if (static_cast<Index>(labels.size()) != m)
    throw ShapeError("multiclass_test_error: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(m) + " rows");
  Index errors = 0;
  for (Index i = 0; i < m; ++i) {
    Index best = 0;
    for (Index j = 1; j < k; ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    if (best != static_cast<Index>(labels[static_cast<std::size_t>(i)])) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(m);
}

MarginBatch margin_batch(const VecRef& gamma) {
  require_nonempty(gamma, "margin_batch");
  MarginBatch b;
  b.gamma = gamma;
  b.m = gamma.size();
  b.mu = margin_mean(gamma);
  b.sigma = margin_variance(gamma);
  b.max_abs = gamma.array().abs().maxCoeff();
  b.gamma_bar = normalize_margins(gamma);
  b.mu_bar = b.gamma_bar.mean();
  b.sigma_bar = margin_variance(b.gamma_bar);
  return b;
}

}  // namespace marginlab
