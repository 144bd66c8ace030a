#pragma once

// Frame-level flicker classifier: three conv(3x3, pad 1) -> ReLU -> maxpool(2)
// blocks (1 -> 16 -> 32 -> 64 channels, 224 -> 112 -> 56 -> 28) followed by
// linear layers 64*28*28 -> 32 -> 16 -> 2. Training is plain Adam on the
// softmax cross-entropy.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "autobias/contract.hpp"
#include "autobias/frame.hpp"
#include "autobias/spectral.hpp"

namespace autobias {

inline constexpr int kConvChannels[4] = {1, 16, 32, 64};
inline constexpr int kFlattenSide = 28;
inline constexpr int kFlattenSize = 64 * kFlattenSide * kFlattenSide;  // 50176
inline constexpr int kHidden1 = 32;
inline constexpr int kHidden2 = 16;
inline constexpr int kClasses = 2;
inline constexpr std::size_t kTensorCount = 12;

struct TensorShape {
  const char* name;
  std::vector<std::uint32_t> dims;

  std::size_t size() const {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }
  friend bool operator==(const TensorShape& a, const TensorShape& b) { return a.dims == b.dims; }
};

// Declared tensor order; also the on-disk order.
inline std::array<TensorShape, kTensorCount> cnn_shapes() {
  return {{
      {"conv1.weight", {16, 1, 3, 3}},
      {"conv1.bias", {16}},
      {"conv2.weight", {32, 16, 3, 3}},
      {"conv2.bias", {32}},
      {"conv3.weight", {64, 32, 3, 3}},
      {"conv3.bias", {64}},
      {"fc1.weight", {kHidden1, kFlattenSize}},
      {"fc1.bias", {kHidden1}},
      {"fc2.weight", {kHidden2, kHidden1}},
      {"fc2.bias", {kHidden2}},
      {"fc3.weight", {kClasses, kHidden2}},
      {"fc3.bias", {kClasses}},
  }};
}

template <typename T>
struct CnnParams {
  std::array<std::vector<T>, kTensorCount> tensors;

  CnnParams() {
    const auto shapes = cnn_shapes();
    for (std::size_t i = 0; i < kTensorCount; ++i) tensors[i].assign(shapes[i].size(), T(0));
  }

  std::vector<T>& conv_w(int layer) { return tensors[2 * layer]; }
  std::vector<T>& conv_b(int layer) { return tensors[2 * layer + 1]; }
  std::vector<T>& fc_w(int layer) { return tensors[6 + 2 * layer]; }
  std::vector<T>& fc_b(int layer) { return tensors[6 + 2 * layer + 1]; }
  const std::vector<T>& conv_w(int layer) const { return tensors[2 * layer]; }
  const std::vector<T>& conv_b(int layer) const { return tensors[2 * layer + 1]; }
  const std::vector<T>& fc_w(int layer) const { return tensors[6 + 2 * layer]; }
  const std::vector<T>& fc_b(int layer) const { return tensors[6 + 2 * layer + 1]; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& t : tensors)
      for (T v : t)
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  void set_zero() {
    for (auto& t : tensors) std::fill(t.begin(), t.end(), T(0));
  }

  template <typename U>
  CnnParams<U> cast() const {
    CnnParams<U> out;
    for (std::size_t i = 0; i < kTensorCount; ++i)
      std::transform(tensors[i].begin(), tensors[i].end(), out.tensors[i].begin(),
                     [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const CnnParams& a, const CnnParams& b) { return a.tensors == b.tensors; }
};

// Kaiming-uniform (fan-in, ReLU gain) weights, zero biases.
template <typename T>
CnnParams<T> init_params(std::uint64_t seed) {
  CnnParams<T> p;
  std::mt19937_64 rng(seed);
  const auto shapes = cnn_shapes();
  for (std::size_t i = 0; i < kTensorCount; i += 2) {
    const std::size_t fan_in = shapes[i].size() / shapes[i].dims[0];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (T& w : p.tensors[i]) w = static_cast<T>(dist(rng));
  }
  return p;
}

struct Logits {
  double no_flicker = 0.0;
  double flicker = 0.0;
};

namespace detail {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

// (C*9) x (H*W) patch matrix for a 3x3, pad-1 convolution.
template <typename T>
void im2col(const T* in, int c, int h, int w, T* col) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int ch = 0; ch < c; ++ch) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = col + (static_cast<std::size_t>(ch) * 9 + ky * 3 + kx) * hw;
        const T* src = in + static_cast<std::size_t>(ch) * hw;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          T* row = dst + static_cast<std::size_t>(y) * w;
          if (sy < 0 || sy >= h) {
            std::fill(row, row + w, T(0));
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(sy) * w;
          const int dx = kx - 1;
          for (int x = 0; x < w; ++x) {
            const int sx = x + dx;
            row[x] = (sx >= 0 && sx < w) ? srow[sx] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int c, int h, int w, T* out) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::fill(out, out + static_cast<std::size_t>(c) * hw, T(0));
  for (int ch = 0; ch < c; ++ch) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = col + (static_cast<std::size_t>(ch) * 9 + ky * 3 + kx) * hw;
        T* dst = out + static_cast<std::size_t>(ch) * hw;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const T* row = src + static_cast<std::size_t>(y) * w;
          T* drow = dst + static_cast<std::size_t>(sy) * w;
          const int dx = kx - 1;
          for (int x = 0; x < w; ++x) {
            const int sx = x + dx;
            if (sx >= 0 && sx < w) drow[sx] += row[x];
          }
        }
      }
    }
  }
}

// Reductions with a fixed summation order: eight interleaved partial sums
// combined pairwise. Eigen's reductions peel by buffer alignment, which would
// make results depend on where the allocator put the data.
template <typename T>
T dot(const T* a, const T* b, std::ptrdiff_t n) {
  T s[8] = {};
  std::ptrdiff_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int k = 0; k < 8; ++k) s[k] += a[i + k] * b[i + k];
  for (int k = 0; i < n; ++i, ++k) s[k] += a[i] * b[i];
  return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
}

template <typename T>
T sum(const T* a, std::ptrdiff_t n) {
  T s[8] = {};
  std::ptrdiff_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int k = 0; k < 8; ++k) s[k] += a[i + k];
  for (int k = 0; i < n; ++i, ++k) s[k] += a[i];
  return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
}

// 2x2 max pool; `arg` receives the flat input index of each maximum.
template <typename T>
void maxpool2(const T* in, int c, int h, int w, T* out, std::uint32_t* arg) {
  const int oh = h / 2, ow = w / 2;
  for (int ch = 0; ch < c; ++ch) {
    const std::size_t base = static_cast<std::size_t>(ch) * h * w;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        std::size_t best = base + static_cast<std::size_t>(2 * y) * w + 2 * x;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t i = base + static_cast<std::size_t>(2 * y + dy) * w + 2 * x + dx;
            if (in[i] > in[best]) best = i;
          }
        const std::size_t o = (static_cast<std::size_t>(ch) * oh + y) * ow + x;
        out[o] = in[best];
        arg[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

}  // namespace detail

// Activations kept from a forward pass for backpropagation.
template <typename T>
struct ForwardCache {
  std::array<std::vector<T>, 3> col;     // im2col of each conv input
  std::array<std::vector<T>, 3> act;     // post-ReLU conv output
  std::array<std::vector<T>, 3> pooled;  // pool output; pooled[2] is the flatten vector
  std::array<std::vector<std::uint32_t>, 3> arg;
  std::array<std::vector<T>, 2> hidden;  // post-ReLU fc1, fc2
  std::array<T, kClasses> logits{};
};

inline constexpr int conv_side(int layer) { return kClassifierSide >> layer; }

template <typename T>
Logits forward(const CnnParams<T>& p, std::span<const T> input, ForwardCache<T>* cache = nullptr) {
  require(input.size() == static_cast<std::size_t>(kClassifierSide) * kClassifierSide,
          "classifier input must be exactly 224x224");
  using namespace detail;
  ForwardCache<T> local;
  ForwardCache<T>& c = cache ? *cache : local;

  std::vector<T> x(input.begin(), input.end());
  for (int l = 0; l < 3; ++l) {
    const int side = conv_side(l);
    const int cin = kConvChannels[l], cout = kConvChannels[l + 1];
    const std::size_t hw = static_cast<std::size_t>(side) * side;
    c.col[l].resize(static_cast<std::size_t>(cin) * 9 * hw);
    im2col(x.data(), cin, side, side, c.col[l].data());
    c.act[l].resize(static_cast<std::size_t>(cout) * hw);
    MatMap<T> out(c.act[l].data(), cout, static_cast<Eigen::Index>(hw));
    out.noalias() = ConstMatMap<T>(p.conv_w(l).data(), cout, cin * 9) *
                    ConstMatMap<T>(c.col[l].data(), cin * 9, static_cast<Eigen::Index>(hw));
    out.colwise() += ConstVecMap<T>(p.conv_b(l).data(), cout);
    out = out.cwiseMax(T(0));
    c.pooled[l].resize(static_cast<std::size_t>(cout) * hw / 4);
    c.arg[l].resize(c.pooled[l].size());
    maxpool2(c.act[l].data(), cout, side, side, c.pooled[l].data(), c.arg[l].data());
    x = c.pooled[l];
  }
  require(c.pooled[2].size() == static_cast<std::size_t>(kFlattenSize), "flatten size mismatch");

  const int widths[4] = {kFlattenSize, kHidden1, kHidden2, kClasses};
  const T* h = c.pooled[2].data();
  std::vector<T> z;
  for (int l = 0; l < 3; ++l) {
    z.resize(widths[l + 1]);
    for (int o = 0; o < widths[l + 1]; ++o)
      z[o] = p.fc_b(l)[o] + dot(&p.fc_w(l)[static_cast<std::size_t>(o) * widths[l]], h, widths[l]);
    if (l < 2) {
      c.hidden[l].resize(widths[l + 1]);
      for (int o = 0; o < widths[l + 1]; ++o) c.hidden[l][o] = std::max(z[o], T(0));
      h = c.hidden[l].data();
    }
  }
  c.logits = {z[0], z[1]};
  return {static_cast<double>(z[0]), static_cast<double>(z[1])};
}

// Softmax cross-entropy of one sample; adds its parameter gradient, scaled by
// `scale`, into `grad`.
template <typename T>
double backward(const CnnParams<T>& p, const ForwardCache<T>& c, int label, T scale, CnnParams<T>& grad) {
  require(label == 0 || label == 1, "label must be 0 or 1");
  using namespace detail;
  const T m = std::max(c.logits[0], c.logits[1]);
  const T e0 = std::exp(c.logits[0] - m), e1 = std::exp(c.logits[1] - m);
  const T lse = m + std::log(e0 + e1);
  const double loss = static_cast<double>(lse - c.logits[label]);

  const int widths[4] = {kFlattenSize, kHidden1, kHidden2, kClasses};
  std::vector<T> d(kClasses);
  d[0] = scale * (e0 / (e0 + e1));
  d[1] = scale * (e1 / (e0 + e1));
  d[label] -= scale;

  for (int l = 2; l >= 0; --l) {
    const T* in = l == 0 ? c.pooled[2].data() : c.hidden[l - 1].data();
    const int n = widths[l];
    std::vector<T> da(n, T(0));
    for (int o = 0; o < widths[l + 1]; ++o) {
      const T g = d[o];
      T* gw = &grad.fc_w(l)[static_cast<std::size_t>(o) * n];
      const T* w = &p.fc_w(l)[static_cast<std::size_t>(o) * n];
      for (int i = 0; i < n; ++i) {
        gw[i] += g * in[i];
        da[i] += w[i] * g;
      }
      grad.fc_b(l)[o] += g;
    }
    if (l > 0) {
      for (int i = 0; i < n; ++i)
        if (in[i] <= T(0)) da[i] = T(0);
    }
    d = std::move(da);
  }

  // d is now the gradient w.r.t. the flattened pool-3 output.
  std::vector<T> dpool = std::move(d);
  for (int l = 2; l >= 0; --l) {
    const int side = conv_side(l);
    const int cin = kConvChannels[l], cout = kConvChannels[l + 1];
    const auto hw = static_cast<Eigen::Index>(side) * side;
    std::vector<T> dact(static_cast<std::size_t>(cout) * hw, T(0));
    for (std::size_t i = 0; i < dpool.size(); ++i) dact[c.arg[l][i]] += dpool[i];
    for (std::size_t i = 0; i < dact.size(); ++i)
      if (c.act[l][i] <= T(0)) dact[i] = T(0);
    ConstMatMap<T> dout(dact.data(), cout, hw);
    ConstMatMap<T> col(c.col[l].data(), cin * 9, hw);
    MatMap<T>(grad.conv_w(l).data(), cout, cin * 9).noalias() += dout * col.transpose();
    for (int o = 0; o < cout; ++o) grad.conv_b(l)[o] += sum(&dact[static_cast<std::size_t>(o) * hw], hw);
    if (l == 0) break;
    RowMatrix<T> dcol = ConstMatMap<T>(p.conv_w(l).data(), cout, cin * 9).transpose() * dout;
    dpool.assign(static_cast<std::size_t>(cin) * hw, T(0));
    col2im(dcol.data(), cin, side, side, dpool.data());
  }
  return loss;
}

// argmax of the logits; a tie is reported as no flicker.
inline Verdict verdict_from_logits(const Logits& z) {
  return z.flicker > z.no_flicker ? Verdict::flicker : Verdict::no_flicker;
}

template <typename T>
Verdict classify(const CnnParams<T>& p, const EventFrame& frame) {
  const auto input = to_classifier_input<T>(frame);
  return verdict_from_logits(forward(p, std::span<const T>(input)));
}

// Frames stored at sensor resolution with 0/1 labels (1 = flicker).
struct FrameSet {
  int width = 0;
  int height = 0;
  std::vector<float> data;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t frame_size() const { return static_cast<std::size_t>(width) * height; }

  void add(const EventFrame& f, int label) {
    require(label == 0 || label == 1, "label must be 0 or 1");
    if (labels.empty() && width == 0) {
      width = f.width;
      height = f.height;
    }
    require(f.width == width && f.height == height, "frame size differs from the set");
    for (double v : f.data) data.push_back(static_cast<float>(v));
    labels.push_back(static_cast<std::uint8_t>(label));
  }

  EventFrame frame(std::size_t i) const {
    require(i < size(), "frame index out of range");
    EventFrame f(width, height);
    const float* src = data.data() + i * frame_size();
    std::copy(src, src + frame_size(), f.data.begin());
    return f;
  }

  std::size_t count(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), static_cast<std::uint8_t>(label)));
  }
};

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  int batch_size = 32;
  std::uint64_t seed = 1;
  // Stop after this many epochs without a validation improvement; 0 runs all epochs.
  int patience = 0;

  void validate() const {
    require(epochs >= 1, "epochs must be at least 1");
    require(learning_rate > 0.0, "learning rate must be positive");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must lie in [0, 1)");
    require(eps > 0.0, "eps must be positive");
    require(weight_decay >= 0.0, "weight decay must be non-negative");
    require(batch_size >= 1, "batch size must be at least 1");
    require(patience >= 0, "patience must be non-negative");
  }
};

template <typename T>
class Adam {
public:
  explicit Adam(const TrainConfig& cfg) : cfg_(cfg) {}

  void step(CnnParams<T>& p, const CnnParams<T>& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T lr = static_cast<T>(cfg_.learning_rate / c1);
    const T inv_c2 = static_cast<T>(1.0 / c2);
    const T eps = static_cast<T>(cfg_.eps), wd = static_cast<T>(cfg_.weight_decay);
    for (std::size_t k = 0; k < kTensorCount; ++k) {
      auto& w = p.tensors[k];
      const auto& gr = g.tensors[k];
      auto& m = m_.tensors[k];
      auto& v = v_.tensors[k];
      for (std::size_t i = 0; i < w.size(); ++i) {
        const T gi = gr[i] + wd * w[i];
        m[i] = b1 * m[i] + (T(1) - b1) * gi;
        v[i] = b2 * v[i] + (T(1) - b2) * gi * gi;
        w[i] -= lr * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
      }
    }
  }

private:
  TrainConfig cfg_;
  CnnParams<T> m_;
  CnnParams<T> v_;
  long t_ = 0;
};

template <typename T>
double accuracy(const CnnParams<T>& p, const FrameSet& set) {
  require(set.size() > 0, "empty frame set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const int predicted = classify(p, set.frame(i)) == Verdict::flicker ? 1 : 0;
    correct += predicted == set.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  CnnParams<float> params;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_accuracy = -1.0;
};

inline void require_balanced(const FrameSet& set, const char* what) {
  require(set.size() > 0, std::string(what) + " set is empty");
  require(set.count(0) == set.count(1), std::string(what) + " set is not class-balanced");
}

// Returns the parameters of the epoch with the best validation accuracy.
template <typename Progress>
TrainResult train(const FrameSet& train_set, const FrameSet& val_set, const TrainConfig& cfg, Progress&& progress) {
  cfg.validate();
  require_balanced(train_set, "training");
  require_balanced(val_set, "validation");
  TrainResult result;
  CnnParams<float> p = init_params<float>(cfg.seed);
  Adam<float> adam(cfg);
  CnnParams<float> grad;
  ForwardCache<float> cache;
  std::mt19937_64 rng(cfg.seed + 1);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      grad.set_zero();
      const float scale = 1.0f / static_cast<float>(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const auto input = to_classifier_input<float>(train_set.frame(i));
        const Logits z = forward(p, std::span<const float>(input), &cache);
        correct += (verdict_from_logits(z) == Verdict::flicker ? 1 : 0) == train_set.labels[i];
        loss_sum += backward(p, cache, train_set.labels[i], scale, grad);
      }
      adam.step(p, grad);
    }
    EpochStats stats{epoch, loss_sum / static_cast<double>(order.size()),
                     static_cast<double>(correct) / static_cast<double>(order.size()), accuracy(p, val_set)};
    result.history.push_back(stats);
    progress(stats);
    if (stats.val_accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = stats.val_accuracy;
      result.best_epoch = epoch;
      result.params = p;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  require(result.params.all_finite(), "training diverged to non-finite parameters");
  return result;
}

inline TrainResult train(const FrameSet& train_set, const FrameSet& val_set, const TrainConfig& cfg) {
  return train(train_set, val_set, cfg, [](const EpochStats&) {});
}

// CNN1: magic, u32 tensor count, per tensor u32 rank + u32 dims, then every
// tensor's values as float32, all little-endian.
namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  require(static_cast<bool>(in), "unexpected end of file");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(out, bits);
}

inline float read_f32(std::istream& in) {
  const std::uint32_t bits = read_u32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace detail

inline void write_cnn(std::ostream& out, const CnnParams<float>& p) {
  const auto shapes = cnn_shapes();
  out.write("CNN1", 4);
  detail::write_u32(out, static_cast<std::uint32_t>(kTensorCount));
  for (const auto& s : shapes) {
    detail::write_u32(out, static_cast<std::uint32_t>(s.dims.size()));
    for (auto d : s.dims) detail::write_u32(out, d);
  }
  for (const auto& t : p.tensors)
    for (float v : t) detail::write_f32(out, v);
  require(static_cast<bool>(out), "failed to write CNN1 stream");
}

inline CnnParams<float> read_cnn(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  require(static_cast<bool>(in) && std::memcmp(magic, "CNN1", 4) == 0, "not a CNN1 file");
  const auto shapes = cnn_shapes();
  require(detail::read_u32(in) == kTensorCount, "CNN1 tensor count mismatch");
  for (const auto& s : shapes) {
    const std::uint32_t rank = detail::read_u32(in);
    require(rank == s.dims.size(), std::string("CNN1 rank mismatch for ") + s.name);
    for (auto d : s.dims) require(detail::read_u32(in) == d, std::string("CNN1 shape mismatch for ") + s.name);
  }
  CnnParams<float> p;
  for (auto& t : p.tensors)
    for (float& v : t) v = detail::read_f32(in);
  require(p.all_finite(), "CNN1 file contains non-finite values");
  return p;
}

inline void save_cnn(const std::string& path, const CnnParams<float>& p) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot open " + path + " for writing");
  write_cnn(out, p);
}

inline CnnParams<float> load_cnn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path);
  return read_cnn(in);
}

}  // namespace autobias
