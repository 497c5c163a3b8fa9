#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ulbench/common.hpp"

namespace ulbench {

enum class LayerKind { kConv, kRelu, kAvgPool, kFlatten, kDense };

struct LayerSpec {
  LayerKind kind = LayerKind::kFlatten;
  // conv
  int in_c = 0, out_c = 0, kernel = 0, stride = 1, pad = 0;
  // dense
  int in_dim = 0, out_dim = 0;
  // avg pool (window == stride)
  int pool = 0;

  static LayerSpec conv(int in_c, int out_c, int kernel, int stride = 1,
                        int pad = 0);
  static LayerSpec relu();
  static LayerSpec avg_pool(int window);
  static LayerSpec flatten();
  static LayerSpec dense(int in_dim, int out_dim);

  std::size_t param_count() const;
  bool operator==(const LayerSpec&) const = default;
};

struct Shape3 {
  int c = 0, h = 0, w = 0;
  std::size_t size() const {
    return static_cast<std::size_t>(c) * h * w;
  }
  bool operator==(const Shape3&) const = default;
};

// Architecture descriptor: input shape plus an ordered layer list. The flat
// parameter vector is the per-layer parameter blocks concatenated in order
// (conv/dense: weights then bias).
struct Arch {
  Shape3 input;
  int num_classes = 0;
  std::vector<LayerSpec> layers;

  // Activation shapes at every layer boundary: boundary_shapes()[0] is the
  // input, boundary_shapes()[i+1] the output of layer i.
  std::vector<Shape3> boundary_shapes() const;
  std::size_t param_count() const;
  std::vector<std::size_t> param_offsets() const;  // one per layer
  void validate() const;

  std::string to_text() const;
  static Arch from_text(const std::string& text);
  bool operator==(const Arch&) const = default;
};

// Stock architectures.
Arch make_logistic(Shape3 input, int num_classes);
Arch make_mlp(Shape3 input, int hidden, int num_classes);
// Three conv blocks (conv3x3/relu/avgpool2) with channel widths base, 2*base,
// 4*base, followed by a dense classifier head.
Arch make_cnn3(Shape3 input, int num_classes, int base_channels = 16);

// Returns a copy of `arch` whose final dense layer emits `extra` additional
// logits. Used by the shadow-class unlearner.
Arch widen_output(const Arch& arch, int extra);

}  // namespace ulbench
