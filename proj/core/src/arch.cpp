#include "ulbench/arch.hpp"

#include <sstream>

namespace ulbench {

LayerSpec LayerSpec::conv(int in_c, int out_c, int kernel, int stride, int pad) {
  LayerSpec s;
  s.kind = LayerKind::kConv;
  s.in_c = in_c;
  s.out_c = out_c;
  s.kernel = kernel;
  s.stride = stride;
  s.pad = pad;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::kRelu;
  return s;
}

LayerSpec LayerSpec::avg_pool(int window) {
  LayerSpec s;
  s.kind = LayerKind::kAvgPool;
  s.pool = window;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::kFlatten;
  return s;
}

LayerSpec LayerSpec::dense(int in_dim, int out_dim) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.in_dim = in_dim;
  s.out_dim = out_dim;
  return s;
}

std::size_t LayerSpec::param_count() const {
  switch (kind) {
    case LayerKind::kConv:
      return static_cast<std::size_t>(out_c) * in_c * kernel * kernel + out_c;
    case LayerKind::kDense:
      return static_cast<std::size_t>(out_dim) * in_dim + out_dim;
    default:
      return 0;
  }
}

std::vector<Shape3> Arch::boundary_shapes() const {
  std::vector<Shape3> shapes;
  shapes.reserve(layers.size() + 1);
  shapes.push_back(input);
  Shape3 cur = input;
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::kConv: {
        if (cur.c != l.in_c) throw Error("arch: conv input channel mismatch");
        const int oh = (cur.h + 2 * l.pad - l.kernel) / l.stride + 1;
        const int ow = (cur.w + 2 * l.pad - l.kernel) / l.stride + 1;
        if (oh <= 0 || ow <= 0) throw Error("arch: conv output collapses");
        cur = {l.out_c, oh, ow};
        break;
      }
      case LayerKind::kRelu:
        break;
      case LayerKind::kAvgPool: {
        if (cur.h % l.pool != 0 || cur.w % l.pool != 0)
          throw Error("arch: pool window does not divide activation");
        cur = {cur.c, cur.h / l.pool, cur.w / l.pool};
        break;
      }
      case LayerKind::kFlatten:
        cur = {static_cast<int>(cur.size()), 1, 1};
        break;
      case LayerKind::kDense: {
        if (static_cast<std::size_t>(l.in_dim) != cur.size())
          throw Error("arch: dense input dim mismatch");
        cur = {l.out_dim, 1, 1};
        break;
      }
    }
    shapes.push_back(cur);
  }
  return shapes;
}

std::size_t Arch::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.param_count();
  return n;
}

std::vector<std::size_t> Arch::param_offsets() const {
  std::vector<std::size_t> offs;
  offs.reserve(layers.size());
  std::size_t n = 0;
  for (const auto& l : layers) {
    offs.push_back(n);
    n += l.param_count();
  }
  return offs;
}

void Arch::validate() const {
  if (num_classes <= 0) throw Error("arch: num_classes must be positive");
  if (layers.empty()) throw Error("arch: empty layer list");
  const auto shapes = boundary_shapes();
  const auto& out = shapes.back();
  if (out.size() != static_cast<std::size_t>(num_classes))
    throw Error("arch: final layer does not emit num_classes logits");
}

std::string Arch::to_text() const {
  std::ostringstream os;
  os << "input " << input.c << ' ' << input.h << ' ' << input.w << '\n';
  os << "classes " << num_classes << '\n';
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::kConv:
        os << "conv " << l.in_c << ' ' << l.out_c << ' ' << l.kernel << ' '
           << l.stride << ' ' << l.pad << '\n';
        break;
      case LayerKind::kRelu:
        os << "relu\n";
        break;
      case LayerKind::kAvgPool:
        os << "avgpool " << l.pool << '\n';
        break;
      case LayerKind::kFlatten:
        os << "flatten\n";
        break;
      case LayerKind::kDense:
        os << "dense " << l.in_dim << ' ' << l.out_dim << '\n';
        break;
    }
  }
  return os.str();
}

Arch Arch::from_text(const std::string& text) {
  Arch a;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "input") {
      ls >> a.input.c >> a.input.h >> a.input.w;
    } else if (tok == "classes") {
      ls >> a.num_classes;
    } else if (tok == "conv") {
      LayerSpec s;
      s.kind = LayerKind::kConv;
      ls >> s.in_c >> s.out_c >> s.kernel >> s.stride >> s.pad;
      a.layers.push_back(s);
    } else if (tok == "relu") {
      a.layers.push_back(LayerSpec::relu());
    } else if (tok == "avgpool") {
      LayerSpec s;
      s.kind = LayerKind::kAvgPool;
      ls >> s.pool;
      a.layers.push_back(s);
    } else if (tok == "flatten") {
      a.layers.push_back(LayerSpec::flatten());
    } else if (tok == "dense") {
      LayerSpec s;
      s.kind = LayerKind::kDense;
      ls >> s.in_dim >> s.out_dim;
      a.layers.push_back(s);
    } else {
      throw Error("arch: unknown layer token '" + tok + "'");
    }
    if (!ls) throw Error("arch: malformed line '" + line + "'");
  }
  a.validate();
  return a;
}

Arch make_logistic(Shape3 input, int num_classes) {
  Arch a;
  a.input = input;
  a.num_classes = num_classes;
  a.layers.push_back(LayerSpec::flatten());
  a.layers.push_back(
      LayerSpec::dense(static_cast<int>(input.size()), num_classes));
  a.validate();
  return a;
}

Arch make_mlp(Shape3 input, int hidden, int num_classes) {
  Arch a;
  a.input = input;
  a.num_classes = num_classes;
  a.layers.push_back(LayerSpec::flatten());
  a.layers.push_back(LayerSpec::dense(static_cast<int>(input.size()), hidden));
  a.layers.push_back(LayerSpec::relu());
  a.layers.push_back(LayerSpec::dense(hidden, num_classes));
  a.validate();
  return a;
}

Arch make_cnn3(Shape3 input, int num_classes, int base_channels) {
  Arch a;
  a.input = input;
  a.num_classes = num_classes;
  int c = input.c;
  int h = input.h, w = input.w;
  for (int block = 0; block < 3; ++block) {
    const int oc = base_channels << block;
    a.layers.push_back(LayerSpec::conv(c, oc, 3, 1, 1));
    a.layers.push_back(LayerSpec::relu());
    a.layers.push_back(LayerSpec::avg_pool(2));
    c = oc;
    h /= 2;
    w /= 2;
  }
  a.layers.push_back(LayerSpec::flatten());
  a.layers.push_back(LayerSpec::dense(c * h * w, num_classes));
  a.validate();
  return a;
}

Arch widen_output(const Arch& arch, int extra) {
  Arch a = arch;
  if (a.layers.empty() || a.layers.back().kind != LayerKind::kDense)
    throw Error("widen_output: final layer must be dense");
  a.layers.back().out_dim += extra;
  a.num_classes += extra;
  a.validate();
  return a;
}

}  // namespace ulbench
