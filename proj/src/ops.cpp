#include "marginlab/ops.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

namespace marginlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Graph& graph_of(Var a) {
  if (a.graph == nullptr) throw std::invalid_argument("op on unbound Var");
  return *a.graph;
}

Graph& same_graph(Var a, Var b) {
  Graph& g = graph_of(a);
  if (b.graph != &g) throw std::invalid_argument("operands belong to different graphs");
  return g;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
}

void require_rank(const char* op, const Tensor& t, Index r) {
  if (t.rank() != r)
    throw ShapeError(std::string(op) + ": expected rank-" + std::to_string(r) +
                     " tensor, got " + shape_string(t.shape()));
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// out(i,j) = x(i,j) + b(j) over a rows-by-cols flat view of x.
Var broadcast_add(const char* op, Var x, Var b, Index rows, Index cols) {
  Graph& g = same_graph(x, b);
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  if (bv.rank() != 1 || bv.extent(0) != cols)
    throw ShapeError(std::string(op) + ": bias shape " + shape_string(bv.shape()) +
                     " does not match trailing extent of " + shape_string(xv.shape()));
  Tensor out(xv.shape());
  out.mat(rows, cols) = xv.mat(rows, cols).rowwise() + bv.vec().transpose();
  return g.make_node(std::move(out), {x.id, b.id},
                     [xi = x.id, bi = b.id, rows, cols](const Tensor& up, BackwardContext& ctx) {
                       if (ctx.needs(xi)) ctx.accumulate(xi, up);
                       if (ctx.needs(bi)) {
                         Tensor db({cols});
                         db.vec() = up.mat(rows, cols).colwise().sum().transpose();
                         ctx.accumulate(bi, std::move(db));
                       }
                     });
}

struct ConvGeom {
  Index n, h, w, c;
  Index kh, kw, f;
  Index stride;
  Index oh, ow;
  Index pad_top, pad_left;
};

ConvGeom conv_geom(const Tensor& in, const Tensor& filt, Index stride, Padding padding) {
  require_rank("conv2d", in, 4);
  require_rank("conv2d", filt, 4);
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  ConvGeom g{};
  g.n = in.extent(0);
  g.h = in.extent(1);
  g.w = in.extent(2);
  g.c = in.extent(3);
  g.kh = filt.extent(0);
  g.kw = filt.extent(1);
  g.f = filt.extent(3);
  g.stride = stride;
  if (filt.extent(2) != g.c)
    throw ShapeError("conv2d: filter channels " + shape_string(filt.shape()) +
                     " do not match input " + shape_string(in.shape()));
  if (padding == Padding::valid) {
    if (g.kh > g.h || g.kw > g.w)
      throw ShapeError("conv2d: kernel " + shape_string(filt.shape()) +
                       " does not fit input " + shape_string(in.shape()) +
                       " with valid padding");
    g.oh = (g.h - g.kh) / stride + 1;
    g.ow = (g.w - g.kw) / stride + 1;
    g.pad_top = g.pad_left = 0;
  } else {
    g.oh = (g.h + stride - 1) / stride;
    g.ow = (g.w + stride - 1) / stride;
    Index pad_h = std::max<Index>((g.oh - 1) * stride + g.kh - g.h, 0);
    Index pad_w = std::max<Index>((g.ow - 1) * stride + g.kw - g.w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  }
  return g;
}

/// Patch matrix: one row per output position, one column per (ky, kx, c),
/// matching the flat layout of kh-by-kw-by-C-by-F filters.
Tensor im2col(const Tensor& in, const ConvGeom& g) {
  Tensor p({g.n * g.oh * g.ow, g.kh * g.kw * g.c});
  Index row = 0;
  for (Index n = 0; n < g.n; ++n)
    for (Index oy = 0; oy < g.oh; ++oy)
      for (Index ox = 0; ox < g.ow; ++ox, ++row) {
        Index col = 0;
        for (Index ky = 0; ky < g.kh; ++ky) {
          Index iy = oy * g.stride + ky - g.pad_top;
          for (Index kx = 0; kx < g.kw; ++kx) {
            Index ix = ox * g.stride + kx - g.pad_left;
            if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w)
              for (Index cc = 0; cc < g.c; ++cc) p(row, col + cc) = in(n, iy, ix, cc);
            col += g.c;
          }
        }
      }
  return p;
}

void col2im_add(const Tensor& dp, const ConvGeom& g, Tensor& din) {
  Index row = 0;
  for (Index n = 0; n < g.n; ++n)
    for (Index oy = 0; oy < g.oh; ++oy)
      for (Index ox = 0; ox < g.ow; ++ox, ++row) {
        Index col = 0;
        for (Index ky = 0; ky < g.kh; ++ky) {
          Index iy = oy * g.stride + ky - g.pad_top;
          for (Index kx = 0; kx < g.kw; ++kx) {
            Index ix = ox * g.stride + kx - g.pad_left;
            if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w)
              for (Index cc = 0; cc < g.c; ++cc) din(n, iy, ix, cc) += dp(row, col + cc);
            col += g.c;
          }
        }
      }
}

}  // namespace

Var add(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor out(a.value().shape());
  out.array() = a.value().array() + b.value().array();
  return g.make_node(std::move(out), {a.id, b.id},
                     [ai = a.id, bi = b.id](const Tensor& up, BackwardContext& ctx) {
                       if (ctx.needs(ai)) ctx.accumulate(ai, up);
                       if (ctx.needs(bi)) ctx.accumulate(bi, up);
                     });
}

Var subtract(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_shape("subtract", a.value(), b.value());
  Tensor out(a.value().shape());
  out.array() = a.value().array() - b.value().array();
  return g.make_node(std::move(out), {a.id, b.id},
                     [ai = a.id, bi = b.id](const Tensor& up, BackwardContext& ctx) {
                       if (ctx.needs(ai)) ctx.accumulate(ai, up);
                       if (ctx.needs(bi)) {
                         Tensor db(up.shape());
                         db.array() = -up.array();
                         ctx.accumulate(bi, std::move(db));
                       }
                     });
}

Var multiply(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_shape("multiply", a.value(), b.value());
  Tensor out(a.value().shape());
  out.array() = a.value().array() * b.value().array();
  return g.make_node(std::move(out), {a.id, b.id},
                     [ai = a.id, bi = b.id](const Tensor& up, BackwardContext& ctx) {
                       if (ctx.needs(ai)) {
                         Tensor da(up.shape());
                         da.array() = up.array() * ctx.value(bi).array();
                         ctx.accumulate(ai, std::move(da));
                       }
                       if (ctx.needs(bi)) {
                         Tensor db(up.shape());
                         db.array() = up.array() * ctx.value(ai).array();
                         ctx.accumulate(bi, std::move(db));
                       }
                     });
}

Var divide(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());

  if (bv.same_shape(av)) {
    out.array() = av.array() / bv.array();
    return g.make_node(std::move(out), {a.id, b.id},
                       [ai = a.id, bi = b.id](const Tensor& up, BackwardContext& ctx) {
                         const Tensor& av = ctx.value(ai);
                         const Tensor& bv = ctx.value(bi);
                         if (ctx.needs(ai)) {
                           Tensor da(up.shape());
                           da.array() = up.array() / bv.array();
                           ctx.accumulate(ai, std::move(da));
                         }
                         if (ctx.needs(bi)) {
                           Tensor db(up.shape());
                           db.array() = -up.array() * av.array() / bv.array().square();
                           ctx.accumulate(bi, std::move(db));
                         }
                       });
  }

  if (bv.size() == 1) {
    double s = bv[0];
    out.array() = av.array() / s;
    return g.make_node(std::move(out), {a.id, b.id},
                       [ai = a.id, bi = b.id](const Tensor& up, BackwardContext& ctx) {
                         const Tensor& av = ctx.value(ai);
                         double s = ctx.value(bi)[0];
                         if (ctx.needs(ai)) {
                           Tensor da(up.shape());
                           da.array() = up.array() / s;
                           ctx.accumulate(ai, std::move(da));
                         }
                         if (ctx.needs(bi)) {
                           Tensor db(ctx.value(bi).shape());
                           db.array()[0] = -(up.array() * av.array()).sum() / (s * s);
                           ctx.accumulate(bi, std::move(db));
                         }
                       });
  }

  if (av.rank() == 2 && bv.rank() == 1 && bv.extent(0) == av.extent(1)) {
    out.mat() = av.mat().array().rowwise() / bv.vec().transpose().array();
    return g.make_node(std::move(out), {a.id, b.id},
                       [ai = a.id, bi = b.id](const Tensor& up, BackwardContext& ctx) {
                         const Tensor& av = ctx.value(ai);
                         const Tensor& bv = ctx.value(bi);
                         if (ctx.needs(ai)) {
                           Tensor da(up.shape());
                           da.mat() = up.mat().array().rowwise() / bv.vec().transpose().array();
                           ctx.accumulate(ai, std::move(da));
                         }
                         if (ctx.needs(bi)) {
                           Tensor db(bv.shape());
                           db.vec() = -((up.mat().array() * av.mat().array()).colwise().sum() /
                                        bv.vec().transpose().array().square())
                                           .transpose()
                                           .matrix();
                           ctx.accumulate(bi, std::move(db));
                         }
                       });
  }

  throw ShapeError("divide: cannot broadcast " + shape_string(bv.shape()) + " into " +
                   shape_string(av.shape()));
}

Var add_scalar(Var a, double c) {
  Graph& g = graph_of(a);
  Tensor out(a.value().shape());
  out.array() = a.value().array() + c;
  return g.make_node(std::move(out), {a.id},
                     [ai = a.id](const Tensor& up, BackwardContext& ctx) {
                       if (ctx.needs(ai)) ctx.accumulate(ai, up);
                     });
}

Var scale(Var a, double c) {
  Graph& g = graph_of(a);
  Tensor out(a.value().shape());
  out.array() = a.value().array() * c;
  return g.make_node(std::move(out), {a.id},
                     [ai = a.id, c](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ai)) return;
                       Tensor da(up.shape());
                       da.array() = up.array() * c;
                       ctx.accumulate(ai, std::move(da));
                     });
}

Var square(Var a) {
  Graph& g = graph_of(a);
  Tensor out(a.value().shape());
  out.array() = a.value().array().square();
  return g.make_node(std::move(out), {a.id},
                     [ai = a.id](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ai)) return;
                       Tensor da(up.shape());
                       da.array() = 2.0 * ctx.value(ai).array() * up.array();
                       ctx.accumulate(ai, std::move(da));
                     });
}

Var exp(Var a) {
  Graph& g = graph_of(a);
  Tensor out(a.value().shape());
  out.array() = a.value().array().exp();
  return g.make_node(std::move(out), {a.id},
                     [ai = a.id](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ai)) return;
                       Tensor da(up.shape());
                       da.array() = up.array() * ctx.self().array();
                       ctx.accumulate(ai, std::move(da));
                     });
}

Var log(Var a) {
  Graph& g = graph_of(a);
  Tensor out(a.value().shape());
  out.array() = a.value().array().log();
  return g.make_node(std::move(out), {a.id},
                     [ai = a.id](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ai)) return;
                       Tensor da(up.shape());
                       da.array() = up.array() / ctx.value(ai).array();
                       ctx.accumulate(ai, std::move(da));
                     });
}

Var relu(Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  g.note_kink_gap(av.array().abs().minCoeff());
  Tensor out(av.shape());
  out.array() = av.array().max(0.0);
  return g.make_node(std::move(out), {a.id},
                     [ai = a.id](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ai)) return;
                       Tensor da(up.shape());
                       // subgradient 0 at exactly 0
                       da.array() = up.array() * (ctx.value(ai).array() > 0.0).cast<double>();
                       ctx.accumulate(ai, std::move(da));
                     });
}

Var clamp_min(Var a, double floor) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  g.note_kink_gap((av.array() - floor).abs().minCoeff());
  Tensor out(av.shape());
  out.array() = av.array().max(floor);
  return g.make_node(std::move(out), {a.id},
                     [ai = a.id, floor](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ai)) return;
                       Tensor da(up.shape());
                       da.array() =
                           up.array() * (ctx.value(ai).array() > floor).cast<double>();
                       ctx.accumulate(ai, std::move(da));
                     });
}

Var reshape(Var a, Shape shape) {
  Graph& g = graph_of(a);
  Tensor out = a.value().reshaped(std::move(shape));
  return g.make_node(std::move(out), {a.id},
                     [ai = a.id](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ai)) return;
                       ctx.accumulate(ai, up.reshaped(ctx.value(ai).shape()));
                     });
}

Var reduce_sum(Var a) {
  Graph& g = graph_of(a);
  Tensor out = Tensor::scalar(a.value().array().sum());
  return g.make_node(std::move(out), {a.id},
                     [ai = a.id](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ai)) return;
                       ctx.accumulate(ai, Tensor::constant(ctx.value(ai).shape(), up[0]));
                     });
}

Var reduce_mean(Var a) {
  Graph& g = graph_of(a);
  Tensor out = Tensor::scalar(a.value().array().mean());
  return g.make_node(std::move(out), {a.id},
                     [ai = a.id](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ai)) return;
                       const Tensor& av = ctx.value(ai);
                       ctx.accumulate(
                           ai, Tensor::constant(av.shape(), up[0] / static_cast<double>(av.size())));
                     });
}

Var reduce_max_abs(Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  if (av.size() < 1) throw ShapeError("reduce_max_abs: empty tensor");
  Index best = 0;
  double bestv = -1.0, second = -1.0;
  for (Index i = 0; i < av.size(); ++i) {
    double m = std::abs(av[i]);
    if (m > bestv) {
      second = bestv;
      bestv = m;
      best = i;
    } else if (m > second) {
      second = m;
    }
  }
  if (av.size() > 1) g.note_kink_gap(bestv - second);
  return g.make_node(Tensor::scalar(bestv), {a.id},
                     [ai = a.id, best](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ai)) return;
                       const Tensor& av = ctx.value(ai);
                       Tensor da = Tensor::zeros(av.shape());
                       da[best] = up[0] * sign_of(av[best]);
                       ctx.accumulate(ai, std::move(da));
                     });
}

Var reduce_max_abs(Var a, int axis) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  require_rank("reduce_max_abs", av, 2);
  if (axis != 0)
    throw ShapeError("reduce_max_abs: only axis 0 of a rank-2 tensor is supported");
  Index rows = av.extent(0), cols = av.extent(1);
  if (rows < 1) throw ShapeError("reduce_max_abs: empty axis");
  Tensor out({cols});
  auto rowsel = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(cols));
  for (Index j = 0; j < cols; ++j) {
    Index best = 0;
    double bestv = -1.0, second = -1.0;
    for (Index i = 0; i < rows; ++i) {
      double m = std::abs(av(i, j));
      if (m > bestv) {
        second = bestv;
        bestv = m;
        best = i;
      } else if (m > second) {
        second = m;
      }
    }
    out[j] = bestv;
    (*rowsel)[static_cast<std::size_t>(j)] = best;
    if (rows > 1) g.note_kink_gap(bestv - second);
  }
  return g.make_node(std::move(out), {a.id},
                     [ai = a.id, rowsel](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ai)) return;
                       const Tensor& av = ctx.value(ai);
                       Tensor da = Tensor::zeros(av.shape());
                       for (Index j = 0; j < up.size(); ++j) {
                         Index i = (*rowsel)[static_cast<std::size_t>(j)];
                         da(i, j) = up[j] * sign_of(av(i, j));
                       }
                       ctx.accumulate(ai, std::move(da));
                     });
}

Var log_softmax(Var logits) {
  Graph& g = graph_of(logits);
  const Tensor& lv = logits.value();
  require_rank("log_softmax", lv, 2);
  Tensor out(lv.shape());
  auto m = lv.mat();
  for (Index i = 0; i < lv.extent(0); ++i) {
    double mx = m.row(i).maxCoeff();
    double lse = mx + std::log((m.row(i).array() - mx).exp().sum());
    out.mat().row(i) = m.row(i).array() - lse;
  }
  return g.make_node(std::move(out), {logits.id},
                     [li = logits.id](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(li)) return;
                       const Tensor& self = ctx.self();
                       Tensor da(up.shape());
                       auto soft = self.mat().array().exp();
                       auto rowsum = up.mat().rowwise().sum();
                       da.mat() = up.mat().array() - soft.colwise() * rowsum.array();
                       ctx.accumulate(li, std::move(da));
                     });
}

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank("matmul", av, 2);
  require_rank("matmul", bv, 2);
  if (av.extent(1) != bv.extent(0))
    throw ShapeError("matmul: inner dimensions disagree, " + shape_string(av.shape()) +
                     " * " + shape_string(bv.shape()));
  Tensor out({av.extent(0), bv.extent(1)});
  out.mat().noalias() = av.mat() * bv.mat();
  return g.make_node(std::move(out), {a.id, b.id},
                     [ai = a.id, bi = b.id](const Tensor& up, BackwardContext& ctx) {
                       const Tensor& av = ctx.value(ai);
                       const Tensor& bv = ctx.value(bi);
                       if (ctx.needs(ai)) {
                         Tensor da(av.shape());
                         da.mat().noalias() = up.mat() * bv.mat().transpose();
                         ctx.accumulate(ai, std::move(da));
                       }
                       if (ctx.needs(bi)) {
                         Tensor db(bv.shape());
                         db.mat().noalias() = av.mat().transpose() * up.mat();
                         ctx.accumulate(bi, std::move(db));
                       }
                     });
}

Var add_bias(Var m, Var bias) {
  const Tensor& mv = m.value();
  require_rank("add_bias", mv, 2);
  return broadcast_add("add_bias", m, bias, mv.extent(0), mv.extent(1));
}

Var add_channel_bias(Var x, Var bias) {
  const Tensor& xv = x.value();
  require_rank("add_channel_bias", xv, 4);
  return broadcast_add("add_channel_bias", x, bias, xv.size() / xv.extent(3), xv.extent(3));
}

Var conv2d(Var input, Var filters, Index stride, Padding padding) {
  Graph& g = same_graph(input, filters);
  const Tensor& in = input.value();
  const Tensor& filt = filters.value();
  ConvGeom geom = conv_geom(in, filt, stride, padding);

  auto patches = std::make_shared<Tensor>(im2col(in, geom));
  Tensor out({geom.n, geom.oh, geom.ow, geom.f});
  out.mat(geom.n * geom.oh * geom.ow, geom.f).noalias() =
      patches->mat() * filt.mat(geom.kh * geom.kw * geom.c, geom.f);

  return g.make_node(
      std::move(out), {input.id, filters.id},
      [ii = input.id, fi = filters.id, geom, patches](const Tensor& up, BackwardContext& ctx) {
        Index orows = geom.n * geom.oh * geom.ow;
        Index kcols = geom.kh * geom.kw * geom.c;
        auto upm = up.mat(orows, geom.f);
        if (ctx.needs(fi)) {
          Tensor df(ctx.value(fi).shape());
          df.mat(kcols, geom.f).noalias() = patches->mat().transpose() * upm;
          ctx.accumulate(fi, std::move(df));
        }
        if (ctx.needs(ii)) {
          Tensor dpatches({orows, kcols});
          dpatches.mat().noalias() =
              upm * ctx.value(fi).mat(kcols, geom.f).transpose();
          Tensor din = Tensor::zeros(ctx.value(ii).shape());
          col2im_add(dpatches, geom, din);
          ctx.accumulate(ii, std::move(din));
        }
      });
}

Var maxpool2d(Var input, Index window, Index stride) {
  Graph& g = graph_of(input);
  const Tensor& in = input.value();
  require_rank("maxpool2d", in, 4);
  if (window < 1 || stride < 1) throw ShapeError("maxpool2d: window and stride must be >= 1");
  Index n = in.extent(0), h = in.extent(1), w = in.extent(2), c = in.extent(3);
  if (window > h || window > w)
    throw ShapeError("maxpool2d: window " + std::to_string(window) +
                     " larger than input " + shape_string(in.shape()));
  Index oh = (h - window) / stride + 1;
  Index ow = (w - window) / stride + 1;

  Tensor out({n, oh, ow, c});
  auto argmax =
      std::make_shared<std::vector<Index>>(static_cast<std::size_t>(out.size()));
  Index k = 0;
  for (Index ni = 0; ni < n; ++ni)
    for (Index oy = 0; oy < oh; ++oy)
      for (Index ox = 0; ox < ow; ++ox)
        for (Index cc = 0; cc < c; ++cc, ++k) {
          double best = -kInf, second = -kInf;
          Index besti = -1;
          for (Index ky = 0; ky < window; ++ky)
            for (Index kx = 0; kx < window; ++kx) {
              Index iy = oy * stride + ky;
              Index ix = ox * stride + kx;
              double v = in(ni, iy, ix, cc);
              // strict > keeps the lowest linear index on ties
              if (v > best) {
                second = best;
                best = v;
                besti = ((ni * h + iy) * w + ix) * c + cc;
              } else if (v > second) {
                second = v;
              }
            }
          out[k] = best;
          (*argmax)[static_cast<std::size_t>(k)] = besti;
          if (window > 1) g.note_kink_gap(best - second);
        }

  return g.make_node(std::move(out), {input.id},
                     [ii = input.id, argmax](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ii)) return;
                       Tensor din = Tensor::zeros(ctx.value(ii).shape());
                       for (Index k = 0; k < up.size(); ++k)
                         din[(*argmax)[static_cast<std::size_t>(k)]] += up[k];
                       ctx.accumulate(ii, std::move(din));
                     });
}

Var lrn(Var input, int radius, double bias, double alpha, double beta) {
  Graph& g = graph_of(input);
  const Tensor& in = input.value();
  require_rank("lrn", in, 4);
  Index c = in.extent(3);
  Index positions = in.size() / c;

  Tensor out(in.shape());
  auto inm = in.mat(positions, c);
  auto outm = out.mat(positions, c);
  for (Index p = 0; p < positions; ++p)
    for (Index cc = 0; cc < c; ++cc) {
      Index lo = std::max<Index>(0, cc - radius);
      Index hi = std::min<Index>(c - 1, cc + radius);
      double s = bias + alpha * inm.row(p).segment(lo, hi - lo + 1).array().square().sum();
      outm(p, cc) = inm(p, cc) * std::pow(s, -beta);
    }

  return g.make_node(
      std::move(out), {input.id},
      [ii = input.id, radius, bias, alpha, beta, positions, c](const Tensor& up,
                                                               BackwardContext& ctx) {
        if (!ctx.needs(ii)) return;
        const Tensor& in = ctx.value(ii);
        auto inm = in.mat(positions, c);
        auto upm = up.mat(positions, c);
        Tensor din(in.shape());
        auto dinm = din.mat(positions, c);
        Eigen::VectorXd spow(c), t(c);
        for (Index p = 0; p < positions; ++p) {
          for (Index cc = 0; cc < c; ++cc) {
            Index lo = std::max<Index>(0, cc - radius);
            Index hi = std::min<Index>(c - 1, cc + radius);
            double s = bias + alpha * inm.row(p).segment(lo, hi - lo + 1).array().square().sum();
            spow[cc] = std::pow(s, -beta);
            t[cc] = upm(p, cc) * inm(p, cc) * std::pow(s, -beta - 1.0);
          }
          for (Index cc = 0; cc < c; ++cc) {
            Index lo = std::max<Index>(0, cc - radius);
            Index hi = std::min<Index>(c - 1, cc + radius);
            dinm(p, cc) = upm(p, cc) * spow[cc] -
                          2.0 * alpha * beta * inm(p, cc) * t.segment(lo, hi - lo + 1).sum();
          }
        }
        ctx.accumulate(ii, std::move(din));
      });
}

Var dropout(Var a, double keep_prob, Rng& rng) {
  if (keep_prob <= 0.0 || keep_prob > 1.0)
    throw std::invalid_argument("dropout: keep probability must be in (0, 1]");
  if (keep_prob == 1.0) return a;  // identity, draws nothing
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  Tensor mask(av.shape());
  for (Index i = 0; i < mask.size(); ++i)
    mask[i] = uniform01(rng) < keep_prob ? 1.0 / keep_prob : 0.0;
  Tensor out(av.shape());
  out.array() = av.array() * mask.array();
  return g.make_node(std::move(out), {a.id},
                     [ai = a.id, mask](const Tensor& up, BackwardContext& ctx) {
                       if (!ctx.needs(ai)) return;
                       Tensor da(up.shape());
                       da.array() = up.array() * mask.array();
                       ctx.accumulate(ai, std::move(da));
                     });
}

}  // namespace marginlab
