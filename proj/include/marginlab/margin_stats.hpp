#ifndef MARGINLAB_MARGIN_STATS_HPP
#define MARGINLAB_MARGIN_STATS_HPP

#include <vector>

#include "marginlab/tensor.hpp"

namespace marginlab {

/// Guard on the normalization denominator; an all-zero batch normalizes to
/// all zeros instead of faulting.
inline constexpr double kNormGuard = 1e-12;

using VecRef = Eigen::Ref<const Eigen::VectorXd>;

/// Margins of one batch together with every derived statistic.
struct MarginBatch {
  Eigen::VectorXd gamma;      // raw margins
  Eigen::VectorXd gamma_bar;  // margins over the batch max-abs, in [-1, 1]
  double mu = 0.0;            // mean margin
  double sigma = 0.0;         // population margin variance
  double mu_bar = 0.0;        // mean normalized margin
  double sigma_bar = 0.0;     // normalized margin variance
  double max_abs = 0.0;
  Index m = 0;
};

/// Linear classifier head; w is not constrained to unit norm.
struct LinearHead {
  Eigen::VectorXd w;
  double b = 0.0;
};

/// y * (w . phi_x + b) for y in {-1, +1}.
double margin(const LinearHead& head, const VecRef& phi_x, int y);

double margin_mean(const VecRef& gamma);

/// Population variance, (1/m) sum (gamma_i - mu)^2.
double margin_variance(const VecRef& gamma);

/// Each margin divided by max(max_i |gamma_i|, kNormGuard); result in [-1, 1].
Eigen::VectorXd normalize_margins(const VecRef& gamma);

/// Variance of the normalized margins around their own mean.
double nmv(const VecRef& gamma);

/// Fraction of margins <= 0 (the boundary counts as an error).
double classification_error(const VecRef& gamma);

/// Fraction of rows whose argmax (lowest index on ties) differs from the
/// label.
double multiclass_test_error(const Tensor& logits, const std::vector<int>& labels);

MarginBatch margin_batch(const VecRef& gamma);

}  // namespace marginlab

#endif  // MARGINLAB_MARGIN_STATS_HPP
