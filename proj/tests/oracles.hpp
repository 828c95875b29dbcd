// Test-only reference implementations, independent of the library's compute
// paths: naive loop kernels and a central-finite-difference gradient checker.
#ifndef MARGINLAB_TESTS_ORACLES_HPP
#define MARGINLAB_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "marginlab/graph.hpp"
#include "marginlab/ops.hpp"
#include "marginlab/rng.hpp"
#include "marginlab/tensor.hpp"

namespace oracles {

using marginlab::Index;
using marginlab::Rng;
using marginlab::Shape;
using marginlab::Tensor;
using marginlab::Var;

inline Tensor rand_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = marginlab::uniform(rng, lo, hi);
  return t;
}

/// Triple-loop matrix product.
inline Tensor matmul_loop(const Tensor& a, const Tensor& b) {
  Index m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor c({m, n});
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index l = 0; l < k; ++l) c(i, j) += a(i, l) * b(l, j);
  return c;
}

/// Direct cross-correlation with explicit loops over every index.
inline Tensor conv2d_loop(const Tensor& in, const Tensor& filt, Index stride, bool same) {
  Index n = in.extent(0), h = in.extent(1), w = in.extent(2), c = in.extent(3);
  Index kh = filt.extent(0), kw = filt.extent(1), f = filt.extent(3);
  Index oh, ow, pad_top, pad_left;
  if (same) {
    oh = (h + stride - 1) / stride;
    ow = (w + stride - 1) / stride;
    pad_top = std::max<Index>((oh - 1) * stride + kh - h, 0) / 2;
    pad_left = std::max<Index>((ow - 1) * stride + kw - w, 0) / 2;
  } else {
    oh = (h - kh) / stride + 1;
    ow = (w - kw) / stride + 1;
    pad_top = pad_left = 0;
  }
  Tensor out({n, oh, ow, f});
  for (Index ni = 0; ni < n; ++ni)
    for (Index oy = 0; oy < oh; ++oy)
      for (Index ox = 0; ox < ow; ++ox)
        for (Index ff = 0; ff < f; ++ff) {
          double acc = 0.0;
          for (Index ky = 0; ky < kh; ++ky)
            for (Index kx = 0; kx < kw; ++kx)
              for (Index cc = 0; cc < c; ++cc) {
                Index iy = oy * stride + ky - pad_top;
                Index ix = ox * stride + kx - pad_left;
                if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                  acc += in(ni, iy, ix, cc) * filt(ky, kx, cc, ff);
              }
          out(ni, oy, ox, ff) = acc;
        }
  return out;
}

/// Windowed max with explicit loops.
inline Tensor maxpool_loop(const Tensor& in, Index window, Index stride) {
  Index n = in.extent(0), h = in.extent(1), w = in.extent(2), c = in.extent(3);
  Index oh = (h - window) / stride + 1;
  Index ow = (w - window) / stride + 1;
  Tensor out({n, oh, ow, c});
  for (Index ni = 0; ni < n; ++ni)
    for (Index oy = 0; oy < oh; ++oy)
      for (Index ox = 0; ox < ow; ++ox)
        for (Index cc = 0; cc < c; ++cc) {
          double best = in(ni, oy * stride, ox * stride, cc);
          for (Index ky = 0; ky < window; ++ky)
            for (Index kx = 0; kx < window; ++kx)
              best = std::max(best, in(ni, oy * stride + ky, ox * stride + kx, cc));
          out(ni, oy, ox, cc) = best;
        }
  return out;
}

/// Builds a scalar loss from parameter leaves. The same builder is used for
/// the analytic pass (param leaves) and the finite-difference pass (input
/// leaves), so the check stays independent of the backward machinery.
using LossBuilder =
    std::function<Var(marginlab::Graph&, const std::vector<Var>&)>;

struct GradCheck {
  double max_rel_err = 0.0;
  double min_kink_gap = 0.0;
  double loss = 0.0;
};

inline double eval_loss(const LossBuilder& build, const std::vector<Tensor>& params) {
  marginlab::Graph g;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const Tensor& p : params) leaves.push_back(g.input(p));
  return build(g, leaves).value().value();
}

/// Central finite differences at step h against the analytic gradients, with
/// the spec's error metric |analytic - fd| / max(1, |analytic|).
inline GradCheck check_gradients(const LossBuilder& build, std::vector<Tensor> params,
                                 double h = 1e-5) {
  marginlab::Graph g;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const Tensor& p : params) leaves.push_back(g.param(p));
  Var loss = build(g, leaves);
  marginlab::GradientMap gm = g.backward(loss);

  GradCheck r;
  r.min_kink_gap = g.min_kink_gap();
  r.loss = loss.value().value();
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const Tensor& analytic = gm.at(leaves[pi]);
    for (Index e = 0; e < params[pi].size(); ++e) {
      double orig = params[pi][e];
      params[pi][e] = orig + h;
      double fplus = eval_loss(build, params);
      params[pi][e] = orig - h;
      double fminus = eval_loss(build, params);
      params[pi][e] = orig;
      double fd = (fplus - fminus) / (2.0 * h);
      double rel = std::abs(analytic[e] - fd) / std::max(1.0, std::abs(analytic[e]));
      r.max_rel_err = std::max(r.max_rel_err, rel);
    }
  }
  return r;
}

/// Loss builder that reduces an op's output through fixed random weights, so
/// every output element's backward path is exercised with a distinct scale.
inline LossBuilder weighted_sum_of(std::function<Var(marginlab::Graph&, const std::vector<Var>&)> op,
                                   const Tensor& weights) {
  return [op, weights](marginlab::Graph& g, const std::vector<Var>& leaves) {
    return marginlab::reduce_sum(marginlab::multiply(op(g, leaves), g.input(weights)));
  };
}

}  // namespace oracles

#endif  // MARGINLAB_TESTS_ORACLES_HPP
