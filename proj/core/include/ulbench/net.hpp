#pragma once

// Single-sample execution engine for the small sequential architectures in
// arch.hpp. Templated on the scalar type: float is the production path,
// double backs the second-order solver and the numeric test oracles.
//
// Besides plain forward/backward it implements a forward tangent pass (JVP)
// and a tangent-carrying backward pass, which together give exact
// Hessian-vector products of the cross-entropy loss: seed the tangent with
// the direction v, backpropagate the (adjoint, adjoint-tangent) pair, and
// the accumulated parameter-gradient tangent is H v.

#include <cmath>
#include <cstring>
#include <vector>

#include "ulbench/arch.hpp"

namespace ulbench {

template <typename T>
struct Workspace {
  std::vector<std::vector<T>> act;  // boundary activations, act[0] = input
  std::vector<std::vector<T>> tan;  // boundary tangents (JVP pass only)

  void prepare(const Arch& arch, bool with_tangent) {
    const auto shapes = arch.boundary_shapes();
    act.resize(shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i) act[i].resize(shapes[i].size());
    if (with_tangent) {
      tan.resize(shapes.size());
      for (std::size_t i = 0; i < shapes.size(); ++i) tan[i].resize(shapes[i].size());
    }
  }
};

namespace detail {

template <typename T>
void conv_forward(const LayerSpec& l, Shape3 in, Shape3 out, const T* w,
                  const T* b, const T* x, T* y) {
  const int kk = l.kernel;
  for (int oc = 0; oc < out.c; ++oc) {
    const T* wc = w + static_cast<std::size_t>(oc) * in.c * kk * kk;
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        T acc = b[oc];
        for (int ic = 0; ic < in.c; ++ic) {
          const T* xi = x + static_cast<std::size_t>(ic) * in.h * in.w;
          const T* wi = wc + static_cast<std::size_t>(ic) * kk * kk;
          for (int ky = 0; ky < kk; ++ky) {
            const int iy = oy * l.stride + ky - l.pad;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < kk; ++kx) {
              const int ix = ox * l.stride + kx - l.pad;
              if (ix < 0 || ix >= in.w) continue;
              acc += wi[ky * kk + kx] * xi[iy * in.w + ix];
            }
          }
        }
        y[(static_cast<std::size_t>(oc) * out.h + oy) * out.w + ox] = acc;
      }
    }
  }
}

template <typename T>
void conv_backward_input(const LayerSpec& l, Shape3 in, Shape3 out, const T* w,
                         const T* gy, T* gx) {  // accumulates into gx
  const int kk = l.kernel;
  for (int oc = 0; oc < out.c; ++oc) {
    const T* wc = w + static_cast<std::size_t>(oc) * in.c * kk * kk;
    const T* gyc = gy + static_cast<std::size_t>(oc) * out.h * out.w;
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        const T g = gyc[oy * out.w + ox];
        if (g == T(0)) continue;
        for (int ic = 0; ic < in.c; ++ic) {
          T* gxi = gx + static_cast<std::size_t>(ic) * in.h * in.w;
          const T* wi = wc + static_cast<std::size_t>(ic) * kk * kk;
          for (int ky = 0; ky < kk; ++ky) {
            const int iy = oy * l.stride + ky - l.pad;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < kk; ++kx) {
              const int ix = ox * l.stride + kx - l.pad;
              if (ix < 0 || ix >= in.w) continue;
              gxi[iy * in.w + ix] += wi[ky * kk + kx] * g;
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_backward_weight(const LayerSpec& l, Shape3 in, Shape3 out, const T* x,
                          const T* gy, T* gw, T* gb) {  // accumulates; gb may be null
  const int kk = l.kernel;
  for (int oc = 0; oc < out.c; ++oc) {
    T* gwc = gw + static_cast<std::size_t>(oc) * in.c * kk * kk;
    const T* gyc = gy + static_cast<std::size_t>(oc) * out.h * out.w;
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        const T g = gyc[oy * out.w + ox];
        if (gb) gb[oc] += g;
        if (g == T(0)) continue;
        for (int ic = 0; ic < in.c; ++ic) {
          const T* xi = x + static_cast<std::size_t>(ic) * in.h * in.w;
          T* gwi = gwc + static_cast<std::size_t>(ic) * kk * kk;
          for (int ky = 0; ky < kk; ++ky) {
            const int iy = oy * l.stride + ky - l.pad;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < kk; ++kx) {
              const int ix = ox * l.stride + kx - l.pad;
              if (ix < 0 || ix >= in.w) continue;
              gwi[ky * kk + kx] += xi[iy * in.w + ix] * g;
            }
          }
        }
      }
    }
  }
}

template <typename T>
void dense_forward(const LayerSpec& l, const T* w, const T* b, const T* x, T* y) {
  for (int o = 0; o < l.out_dim; ++o) {
    const T* row = w + static_cast<std::size_t>(o) * l.in_dim;
    T acc = b[o];
    for (int i = 0; i < l.in_dim; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

template <typename T>
void dense_backward_input(const LayerSpec& l, const T* w, const T* gy, T* gx) {
  for (int o = 0; o < l.out_dim; ++o) {
    const T g = gy[o];
    if (g == T(0)) continue;
    const T* row = w + static_cast<std::size_t>(o) * l.in_dim;
    for (int i = 0; i < l.in_dim; ++i) gx[i] += row[i] * g;
  }
}

template <typename T>
void dense_backward_weight(const LayerSpec& l, const T* x, const T* gy, T* gw,
                           T* gb) {
  for (int o = 0; o < l.out_dim; ++o) {
    const T g = gy[o];
    if (gb) gb[o] += g;
    if (g == T(0)) continue;
    T* row = gw + static_cast<std::size_t>(o) * l.in_dim;
    for (int i = 0; i < l.in_dim; ++i) row[i] += x[i] * g;
  }
}

template <typename T>
void avgpool_forward(const LayerSpec& l, Shape3 in, Shape3 out, const T* x, T* y) {
  const int p = l.pool;
  const T scale = T(1) / static_cast<T>(p * p);
  for (int c = 0; c < in.c; ++c) {
    const T* xi = x + static_cast<std::size_t>(c) * in.h * in.w;
    T* yi = y + static_cast<std::size_t>(c) * out.h * out.w;
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        T acc = 0;
        for (int dy = 0; dy < p; ++dy)
          for (int dx = 0; dx < p; ++dx)
            acc += xi[(oy * p + dy) * in.w + (ox * p + dx)];
        yi[oy * out.w + ox] = acc * scale;
      }
    }
  }
}

template <typename T>
void avgpool_backward(const LayerSpec& l, Shape3 in, Shape3 out, const T* gy,
                      T* gx) {
  const int p = l.pool;
  const T scale = T(1) / static_cast<T>(p * p);
  for (int c = 0; c < in.c; ++c) {
    const T* gyi = gy + static_cast<std::size_t>(c) * out.h * out.w;
    T* gxi = gx + static_cast<std::size_t>(c) * in.h * in.w;
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        const T g = gyi[oy * out.w + ox] * scale;
        for (int dy = 0; dy < p; ++dy)
          for (int dx = 0; dx < p; ++dx)
            gxi[(oy * p + dy) * in.w + (ox * p + dx)] += g;
      }
    }
  }
}

}  // namespace detail

// Forward pass; logits end up in ws.act.back().
template <typename T>
void net_forward(const Arch& arch, const T* params, const T* input,
                 Workspace<T>& ws) {
  const auto shapes = arch.boundary_shapes();
  const auto offs = arch.param_offsets();
  ws.prepare(arch, /*with_tangent=*/false);
  std::memcpy(ws.act[0].data(), input, shapes[0].size() * sizeof(T));
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& l = arch.layers[i];
    const T* x = ws.act[i].data();
    T* y = ws.act[i + 1].data();
    const T* p = params + offs[i];
    switch (l.kind) {
      case LayerKind::kConv:
        detail::conv_forward(l, shapes[i], shapes[i + 1], p,
                             p + l.param_count() - l.out_c, x, y);
        break;
      case LayerKind::kRelu:
        for (std::size_t j = 0; j < ws.act[i].size(); ++j)
          y[j] = x[j] > T(0) ? x[j] : T(0);
        break;
      case LayerKind::kAvgPool:
        detail::avgpool_forward(l, shapes[i], shapes[i + 1], x, y);
        break;
      case LayerKind::kFlatten:
        std::memcpy(y, x, ws.act[i].size() * sizeof(T));
        break;
      case LayerKind::kDense:
        detail::dense_forward(l, p, p + l.param_count() - l.out_dim, x, y);
        break;
    }
  }
}

// Backward pass from logit gradients. Accumulates parameter gradients into
// gparams (not zeroed here); if ginput is non-null, accumulates the input
// gradient there.
template <typename T>
void net_backward(const Arch& arch, const T* params, const Workspace<T>& ws,
                  const T* dlogits, T* gparams, T* ginput = nullptr) {
  const auto shapes = arch.boundary_shapes();
  const auto offs = arch.param_offsets();
  std::vector<T> gy(ws.act.back().size());
  std::memcpy(gy.data(), dlogits, gy.size() * sizeof(T));
  std::vector<T> gx;
  for (std::size_t ii = arch.layers.size(); ii-- > 0;) {
    const auto& l = arch.layers[ii];
    const T* x = ws.act[ii].data();
    const T* p = params + offs[ii];
    T* gp = gparams + offs[ii];
    const bool need_gx = ii > 0 || ginput != nullptr;
    gx.assign(ws.act[ii].size(), T(0));
    switch (l.kind) {
      case LayerKind::kConv:
        detail::conv_backward_weight(l, shapes[ii], shapes[ii + 1], x, gy.data(),
                                     gp, gp + l.param_count() - l.out_c);
        if (need_gx)
          detail::conv_backward_input(l, shapes[ii], shapes[ii + 1], p,
                                      gy.data(), gx.data());
        break;
      case LayerKind::kRelu:
        for (std::size_t j = 0; j < gx.size(); ++j)
          gx[j] = x[j] > T(0) ? gy[j] : T(0);
        break;
      case LayerKind::kAvgPool:
        detail::avgpool_backward(l, shapes[ii], shapes[ii + 1], gy.data(),
                                 gx.data());
        break;
      case LayerKind::kFlatten:
        gx = gy;
        break;
      case LayerKind::kDense:
        detail::dense_backward_weight(l, x, gy.data(), gp,
                                      gp + l.param_count() - l.out_dim);
        if (need_gx)
          detail::dense_backward_input(l, p, gy.data(), gx.data());
        break;
    }
    gy.swap(gx);
  }
  if (ginput)
    for (std::size_t j = 0; j < gy.size(); ++j) ginput[j] += gy[j];
}

// Forward tangent pass (JVP) along the parameter direction pdot, with zero
// input tangent. Requires a prior net_forward on the same workspace; fills
// ws.tan, with the logit tangent in ws.tan.back().
template <typename T>
void net_jvp(const Arch& arch, const T* params, const T* pdot, Workspace<T>& ws) {
  const auto shapes = arch.boundary_shapes();
  const auto offs = arch.param_offsets();
  ws.tan.resize(ws.act.size());
  for (std::size_t i = 0; i < ws.act.size(); ++i) ws.tan[i].assign(ws.act[i].size(), T(0));
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& l = arch.layers[i];
    const T* x = ws.act[i].data();
    const T* xd = ws.tan[i].data();
    T* yd = ws.tan[i + 1].data();
    const T* p = params + offs[i];
    const T* pd = pdot + offs[i];
    switch (l.kind) {
      case LayerKind::kConv: {
        // y_dot = conv(x_dot; W) + conv(x; W_dot) + b_dot
        detail::conv_forward(l, shapes[i], shapes[i + 1], p,
                             /*zero bias via tangent bias below*/ pd + l.param_count() - l.out_c,
                             xd, yd);
        std::vector<T> tmp(ws.tan[i + 1].size(), T(0));
        std::vector<T> zero_b(l.out_c, T(0));
        detail::conv_forward(l, shapes[i], shapes[i + 1], pd, zero_b.data(), x,
                             tmp.data());
        for (std::size_t j = 0; j < tmp.size(); ++j) yd[j] += tmp[j];
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t j = 0; j < ws.act[i].size(); ++j)
          yd[j] = x[j] > T(0) ? xd[j] : T(0);
        break;
      case LayerKind::kAvgPool:
        detail::avgpool_forward(l, shapes[i], shapes[i + 1], xd, yd);
        break;
      case LayerKind::kFlatten:
        std::memcpy(yd, xd, ws.tan[i].size() * sizeof(T));
        break;
      case LayerKind::kDense: {
        detail::dense_forward(l, p, pd + l.param_count() - l.out_dim, xd, yd);
        std::vector<T> tmp(ws.tan[i + 1].size(), T(0));
        std::vector<T> zero_b(l.out_dim, T(0));
        detail::dense_forward(l, pd, zero_b.data(), x, tmp.data());
        for (std::size_t j = 0; j < tmp.size(); ++j) yd[j] += tmp[j];
        break;
      }
    }
  }
}

// Tangent-carrying backward pass: propagates the pair (adjoint, adjoint
// tangent) and accumulates the parameter-gradient tangent into gtan. With
// the seeds produced by hvp() in grad.hpp this yields exact Hessian-vector
// products (ReLU is piecewise linear, so its curvature term vanishes).
template <typename T>
void net_backward_tangent(const Arch& arch, const T* params, const T* pdot,
                          const Workspace<T>& ws, const T* dlogits,
                          const T* dlogits_dot, T* gtan) {
  const auto shapes = arch.boundary_shapes();
  const auto offs = arch.param_offsets();
  std::vector<T> gy(ws.act.back().size()), gyd(ws.act.back().size());
  std::memcpy(gy.data(), dlogits, gy.size() * sizeof(T));
  std::memcpy(gyd.data(), dlogits_dot, gyd.size() * sizeof(T));
  std::vector<T> gx, gxd;
  for (std::size_t ii = arch.layers.size(); ii-- > 0;) {
    const auto& l = arch.layers[ii];
    const T* x = ws.act[ii].data();
    const T* xd = ws.tan[ii].data();
    const T* p = params + offs[ii];
    const T* pd = pdot + offs[ii];
    T* gp = gtan + offs[ii];
    gx.assign(ws.act[ii].size(), T(0));
    gxd.assign(ws.act[ii].size(), T(0));
    switch (l.kind) {
      case LayerKind::kConv: {
        T* gb = gp + l.param_count() - l.out_c;
        // gW_dot += bwdw(x, gy_dot) + bwdw(x_dot, gy); gb_dot += sum(gy_dot)
        detail::conv_backward_weight(l, shapes[ii], shapes[ii + 1], x, gyd.data(),
                                     gp, gb);
        detail::conv_backward_weight(l, shapes[ii], shapes[ii + 1], xd, gy.data(),
                                     gp, static_cast<T*>(nullptr));
        // gx_dot += bwdi(gy_dot; W) + bwdi(gy; W_dot)
        detail::conv_backward_input(l, shapes[ii], shapes[ii + 1], p, gyd.data(),
                                    gxd.data());
        detail::conv_backward_input(l, shapes[ii], shapes[ii + 1], pd, gy.data(),
                                    gxd.data());
        detail::conv_backward_input(l, shapes[ii], shapes[ii + 1], p, gy.data(),
                                    gx.data());
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t j = 0; j < gx.size(); ++j) {
          const bool on = x[j] > T(0);
          gx[j] = on ? gy[j] : T(0);
          gxd[j] = on ? gyd[j] : T(0);
        }
        break;
      case LayerKind::kAvgPool:
        detail::avgpool_backward(l, shapes[ii], shapes[ii + 1], gy.data(),
                                 gx.data());
        detail::avgpool_backward(l, shapes[ii], shapes[ii + 1], gyd.data(),
                                 gxd.data());
        break;
      case LayerKind::kFlatten:
        gx = gy;
        gxd = gyd;
        break;
      case LayerKind::kDense: {
        T* gb = gp + l.param_count() - l.out_dim;
        detail::dense_backward_weight(l, x, gyd.data(), gp, gb);
        detail::dense_backward_weight(l, xd, gy.data(), gp,
                                      static_cast<T*>(nullptr));
        detail::dense_backward_input(l, p, gyd.data(), gxd.data());
        detail::dense_backward_input(l, pd, gy.data(), gxd.data());
        detail::dense_backward_input(l, p, gy.data(), gx.data());
        break;
      }
    }
    gy.swap(gx);
    gyd.swap(gxd);
  }
}

// Numerically stable softmax.
template <typename T>
void softmax(const T* logits, std::size_t n, T* out) {
  T m = logits[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, logits[i]);
  T sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
}

// Cross-entropy loss and its logit gradient (softmax - onehot).
template <typename T>
double ce_logit_grad(const T* logits, std::size_t n, int label, T* dlogits) {
  T m = logits[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, logits[i]);
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(static_cast<double>(logits[i] - m));
  const double logz = std::log(sum) + static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::exp(static_cast<double>(logits[i]) - logz);
    dlogits[i] = static_cast<T>(p);
  }
  dlogits[label] -= T(1);
  return logz - static_cast<double>(logits[label]);
}

}  // namespace ulbench
