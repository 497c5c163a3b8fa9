#include "ulbench/data.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ulbench {

namespace {

std::uint64_t compute_fingerprint(const std::vector<float>& data,
                                  const std::vector<int>& labels) {
  std::uint64_t h = fnv1a64(data.data(), data.size() * sizeof(float));
  return fnv1a64(labels.data(), labels.size() * sizeof(int), h);
}

}  // namespace

LabeledDataset::LabeledDataset(std::string name, Shape3 shape, int num_classes,
                               Split split, std::vector<float> data,
                               std::vector<int> labels)
    : name_(std::move(name)),
      shape_(shape),
      num_classes_(num_classes),
      split_(split),
      data_(std::move(data)),
      labels_(std::move(labels)) {
  if (num_classes_ <= 0) throw Error("dataset: num_classes must be positive");
  if (data_.size() != labels_.size() * shape_.size())
    throw Error("dataset: input/label count mismatch");
  for (int l : labels_)
    if (l < 0 || l >= num_classes_)
      throw Error("dataset: label out of range in '" + name_ + "'");
  fingerprint_ = compute_fingerprint(data_, labels_);
}

std::vector<std::uint32_t> LabeledDataset::indices_of_class(int cls) const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == cls) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

std::vector<std::uint32_t> LabeledDataset::all_indices() const {
  std::vector<std::uint32_t> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint32_t>(i);
  return out;
}

LabeledDataset LabeledDataset::subset(const std::vector<std::uint32_t>& indices,
                                      const std::string& new_name) const {
  std::vector<float> data;
  data.reserve(indices.size() * shape_.size());
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (auto i : indices) {
    if (i >= size()) throw Error("subset: index out of range");
    data.insert(data.end(), input(i), input(i) + shape_.size());
    labels.push_back(labels_[i]);
  }
  return LabeledDataset(new_name, shape_, num_classes_, split_, std::move(data),
                        std::move(labels));
}

LabeledDataset LabeledDataset::with_modifications(
    const std::vector<std::uint32_t>& indices,
    const std::vector<std::vector<float>>* new_inputs,
    const std::vector<int>* new_labels, const std::string& new_name) const {
  std::vector<float> data = data_;
  std::vector<int> labels = labels_;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto i = indices[k];
    if (i >= size()) throw Error("with_modifications: index out of range");
    if (new_inputs) {
      const auto& in = (*new_inputs)[k];
      if (in.size() != shape_.size())
        throw Error("with_modifications: input shape mismatch");
      std::copy(in.begin(), in.end(), data.begin() + i * shape_.size());
    }
    if (new_labels) labels[i] = (*new_labels)[k];
  }
  return LabeledDataset(new_name, shape_, num_classes_, split_, std::move(data),
                        std::move(labels));
}

LabeledDataset load_cifar10_batches(const std::vector<std::filesystem::path>& files,
                                    const std::string& name, Split split,
                                    std::size_t max_per_class) {
  const Shape3 shape{3, 32, 32};
  const std::size_t record = 1 + shape.size();
  std::vector<float> data;
  std::vector<int> labels;
  std::vector<std::size_t> per_class(10, 0);
  std::vector<unsigned char> buf(record);
  for (const auto& f : files) {
    std::ifstream is(f, std::ios::binary);
    if (!is) throw Error("cifar10: cannot open " + f.string());
    while (is.read(reinterpret_cast<char*>(buf.data()), record)) {
      const int label = buf[0];
      if (label > 9) throw Error("cifar10: bad label byte in " + f.string());
      if (max_per_class && per_class[label] >= max_per_class) continue;
      ++per_class[label];
      labels.push_back(label);
      for (std::size_t j = 0; j < shape.size(); ++j)
        data.push_back(static_cast<float>(buf[1 + j]) / 255.0f);
    }
    if (is.gcount() != 0)
      throw Error("cifar10: truncated record in " + f.string());
  }
  return LabeledDataset(name, shape, 10, split, std::move(data), std::move(labels));
}

void write_cifar10_batch(const LabeledDataset& ds, const std::filesystem::path& file) {
  if (!(ds.shape() == Shape3{3, 32, 32}) || ds.num_classes() != 10)
    throw Error("write_cifar10_batch: dataset is not CIFAR-10 shaped");
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error("write_cifar10_batch: cannot open " + file.string());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const unsigned char label = static_cast<unsigned char>(ds.label(i));
    os.put(static_cast<char>(label));
    const float* x = ds.input(i);
    for (std::size_t j = 0; j < ds.shape().size(); ++j) {
      const float v = std::clamp(x[j], 0.0f, 1.0f);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
    }
  }
}

LabeledDataset load_csv(const std::filesystem::path& file, const std::string& name,
                        Shape3 shape, int num_classes, Split split) {
  std::ifstream is(file);
  if (!is) throw Error("csv: cannot open " + file.string());
  std::vector<float> data;
  std::vector<int> labels;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    if (!std::getline(ls, cell, ',')) throw Error("csv: malformed row");
    labels.push_back(std::stoi(cell));
    std::size_t count = 0;
    while (std::getline(ls, cell, ',')) {
      data.push_back(std::stof(cell));
      ++count;
    }
    if (count != shape.size())
      throw Error("csv: row has " + std::to_string(count) + " values, expected " +
                  std::to_string(shape.size()));
  }
  return LabeledDataset(name, shape, num_classes, split, std::move(data),
                        std::move(labels));
}

void write_csv(const LabeledDataset& ds, const std::filesystem::path& file) {
  std::ofstream os(file);
  if (!os) throw Error("write_csv: cannot open " + file.string());
  os.precision(9);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << ds.label(i);
    const float* x = ds.input(i);
    for (std::size_t j = 0; j < ds.shape().size(); ++j) os << ',' << x[j];
    os << '\n';
  }
}

LabeledDataset make_gaussian_mixture(int num_classes, int per_class, int dim,
                                     double separation, double noise,
                                     std::uint64_t seed, Split split,
                                     const std::string& name) {
  std::vector<std::vector<double>> means(num_classes, std::vector<double>(dim));
  for (int c = 0; c < num_classes; ++c) {
    Rng rng(sub_seed(seed, "gauss_mean", c));
    for (int d = 0; d < dim; ++d) means[c][d] = separation * rng.normal();
  }
  Rng rng(sub_seed(seed, split == Split::kTrain ? "gauss_train" : "gauss_test"));
  std::vector<float> data;
  std::vector<int> labels;
  data.reserve(static_cast<std::size_t>(num_classes) * per_class * dim);
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      labels.push_back(c);
      for (int d = 0; d < dim; ++d)
        data.push_back(static_cast<float>(means[c][d] + noise * rng.normal()));
    }
  }
  return LabeledDataset(name, Shape3{dim, 1, 1}, num_classes, split,
                        std::move(data), std::move(labels));
}

namespace {

// Smooth per-class base pattern: white noise passed through a box blur.
std::vector<float> class_pattern(const SyntheticImageSpec& spec, int cls) {
  const Shape3 s = spec.shape;
  Rng rng(sub_seed(spec.seed, "class_pattern", cls));
  std::vector<float> raw(s.size());
  for (auto& v : raw) v = static_cast<float>(rng.uniform());
  std::vector<float> out(s.size());
  const int r = 2;
  for (int c = 0; c < s.c; ++c) {
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        float acc = 0;
        int n = 0;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= s.h || xx < 0 || xx >= s.w) continue;
            acc += raw[(static_cast<std::size_t>(c) * s.h + yy) * s.w + xx];
            ++n;
          }
        }
        out[(static_cast<std::size_t>(c) * s.h + y) * s.w + x] = acc / n;
      }
    }
  }
  return out;
}

}  // namespace

LabeledDataset make_synthetic_images(const SyntheticImageSpec& spec, Split split,
                                     const std::string& name) {
  const Shape3 s = spec.shape;
  std::vector<std::vector<float>> patterns(spec.num_classes);
  for (int c = 0; c < spec.num_classes; ++c) patterns[c] = class_pattern(spec, c);

  Rng rng(sub_seed(spec.seed,
                   split == Split::kTrain ? "synth_train" : "synth_test"));
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(spec.num_classes) * spec.per_class * s.size());
  std::vector<int> labels;
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int i = 0; i < spec.per_class; ++i) {
      labels.push_back(c);
      const int jy = static_cast<int>(std::lround(spec.jitter * (rng.uniform() * 2 - 1)));
      const int jx = static_cast<int>(std::lround(spec.jitter * (rng.uniform() * 2 - 1)));
      for (int ch = 0; ch < s.c; ++ch) {
        for (int y = 0; y < s.h; ++y) {
          for (int x = 0; x < s.w; ++x) {
            const int sy = std::clamp(y + jy, 0, s.h - 1);
            const int sx = std::clamp(x + jx, 0, s.w - 1);
            const double base =
                patterns[c][(static_cast<std::size_t>(ch) * s.h + sy) * s.w + sx];
            const double v = base + spec.noise * rng.normal();
            data.push_back(static_cast<float>(std::clamp(v, 0.0, 1.0)));
          }
        }
      }
    }
  }
  return LabeledDataset(name, s, spec.num_classes, split, std::move(data),
                        std::move(labels));
}

}  // namespace ulbench
