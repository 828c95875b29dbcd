#ifndef MARGINLAB_OPS_HPP
#define MARGINLAB_OPS_HPP

#include "marginlab/graph.hpp"
#include "marginlab/rng.hpp"

namespace marginlab {

enum class Padding { valid, same };

// Elementwise binary ops over same-shape tensors.
Var add(Var a, Var b);
Var subtract(Var a, Var b);
Var multiply(Var a, Var b);

/// Elementwise division. `b` may match `a`'s shape, be a scalar, or be a
/// length-n vector dividing the columns of an m-by-n `a`.
Var divide(Var a, Var b);

Var add_scalar(Var a, double c);
Var scale(Var a, double c);
Var square(Var a);
Var exp(Var a);
Var log(Var a);
Var relu(Var a);

/// max(a, floor) elementwise; gradient passes only where a > floor.
Var clamp_min(Var a, double floor);

Var reshape(Var a, Shape shape);

Var reduce_sum(Var a);
Var reduce_mean(Var a);

/// max(|a_i|) over all elements; the gradient flows through the selected
/// element with its sign, lowest flat index on ties.
Var reduce_max_abs(Var a);
/// Per-column max-abs of a rank-2 tensor (axis must be 0).
Var reduce_max_abs(Var a, int axis);

/// Rowwise log-softmax of a rank-2 tensor, computed in log-sum-exp form.
Var log_softmax(Var logits);

Var matmul(Var a, Var b);

/// Adds a length-n bias to every row of an m-by-n tensor.
Var add_bias(Var m, Var bias);

/// Adds a length-C bias to every channel of an NHWC tensor.
Var add_channel_bias(Var x, Var bias);

/// Cross-correlation of NHWC input with kh-by-kw-by-C-by-F filters.
Var conv2d(Var input, Var filters, Index stride, Padding padding);

/// Windowed max over H and W of an NHWC tensor; the gradient routes to the
/// argmax element, lowest linear index on ties.
Var maxpool2d(Var input, Index window, Index stride);

/// Across-channel local response normalization of an NHWC tensor:
/// out_c = in_c / (bias + alpha * sum of in^2 over channels within radius)^beta
Var lrn(Var input, int radius, double bias, double alpha, double beta);

/// Inverted dropout: surviving elements are scaled by 1/keep_prob at build
/// time so inference needs no rescaling. keep_prob == 1 returns `a` itself
/// and draws nothing from `rng`.
Var dropout(Var a, double keep_prob, Rng& rng);

}  // namespace marginlab

#endif  // MARGINLAB_OPS_HPP
