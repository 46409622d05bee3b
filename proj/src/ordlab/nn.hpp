#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ordlab/rng.hpp"
#include "ordlab/tensor.hpp"

namespace ordlab {

enum class Activation { relu, tanh };
enum class Pooling { max, avg };

struct MlpSpec {
  std::vector<int> hidden;  // hidden widths; the output layer is sized by num_classes
  Activation act = Activation::relu;
};

struct ConvBlockSpec {
  int channels = 8;
  int kernel = 3;
  int stride = 1;
};

struct SmallConvSpec {
  std::vector<ConvBlockSpec> blocks;  // each block: conv (pad = kernel/2) + activation + pool(2)
  Pooling pooling = Pooling::max;
  int classifier_width = 0;  // 0: logits straight off the flattened features
};

struct ModelSpec {
  std::variant<MlpSpec, SmallConvSpec> arch;
  std::vector<size_t> input_shape;  // per-sample, e.g. {3,32,32} or {dims}
  int num_classes = 0;
};

template <class S>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual TensorT<S> forward(const TensorT<S>& x) = 0;
  virtual TensorT<S> backward(const TensorT<S>& grad_out) = 0;
  virtual std::vector<TensorT<S>*> params() { return {}; }
  virtual std::vector<TensorT<S>*> grads() { return {}; }
  virtual std::unique_ptr<Layer<S>> clone() const = 0;
};

template <class S>
class DenseLayer final : public Layer<S> {
 public:
  DenseLayer(size_t in, size_t out) : in_(in), out_(out), w_({out, in}), b_({out}), gw_({out, in}), gb_({out}) {}

  TensorT<S> forward(const TensorT<S>& x) override {
    const size_t m = x.extent(0);
    x_ = x;
    TensorT<S> y({m, out_});
    for (size_t r = 0; r < m; ++r) {
      const S* xr = x.data() + r * in_;
      S* yr = y.data() + r * out_;
      for (size_t o = 0; o < out_; ++o) {
        S acc = b_[o];
        const S* wr = w_.data() + o * in_;
        for (size_t i = 0; i < in_; ++i) acc += wr[i] * xr[i];
        yr[o] = acc;
      }
    }
    return y;
  }

  TensorT<S> backward(const TensorT<S>& go) override {
    const size_t m = go.extent(0);
    gw_.fill(S(0));
    gb_.fill(S(0));
    TensorT<S> gx({m, in_});
    for (size_t r = 0; r < m; ++r) {
      const S* gor = go.data() + r * out_;
      const S* xr = x_.data() + r * in_;
      S* gxr = gx.data() + r * in_;
      for (size_t o = 0; o < out_; ++o) {
        const S g = gor[o];
        gb_[o] += g;
        S* gwr = gw_.data() + o * in_;
        const S* wr = w_.data() + o * in_;
        for (size_t i = 0; i < in_; ++i) {
          gwr[i] += g * xr[i];
          gxr[i] += g * wr[i];
        }
      }
    }
    return gx;
  }

  std::vector<TensorT<S>*> params() override { return {&w_, &b_}; }
  std::vector<TensorT<S>*> grads() override { return {&gw_, &gb_}; }
  std::unique_ptr<Layer<S>> clone() const override { return std::make_unique<DenseLayer>(*this); }

  TensorT<S>& weights() { return w_; }
  TensorT<S>& bias() { return b_; }

 private:
  size_t in_, out_;
  TensorT<S> w_, b_, gw_, gb_, x_;
};

template <class S>
class ActivationLayer final : public Layer<S> {
 public:
  explicit ActivationLayer(Activation kind) : kind_(kind) {}

  TensorT<S> forward(const TensorT<S>& x) override {
    TensorT<S> y = x;
    if (kind_ == Activation::relu) {
      for (auto& v : y.values())
        if (v < S(0)) v = S(0);
    } else {
      for (auto& v : y.values()) v = static_cast<S>(std::tanh(static_cast<double>(v)));
    }
    y_ = y;
    return y;
  }

  TensorT<S> backward(const TensorT<S>& go) override {
    TensorT<S> gx = go;
    if (kind_ == Activation::relu) {
      for (size_t i = 0; i < gx.size(); ++i)
        if (y_[i] <= S(0)) gx[i] = S(0);
    } else {
      for (size_t i = 0; i < gx.size(); ++i) gx[i] *= S(1) - y_[i] * y_[i];
    }
    return gx;
  }

  std::unique_ptr<Layer<S>> clone() const override { return std::make_unique<ActivationLayer>(*this); }

 private:
  Activation kind_;
  TensorT<S> y_;
};

template <class S>
class Conv2dLayer final : public Layer<S> {
 public:
  Conv2dLayer(size_t in_c, size_t out_c, size_t kernel, size_t stride)
      : in_c_(in_c),
        out_c_(out_c),
        k_(kernel),
        stride_(stride),
        pad_(kernel / 2),
        w_({out_c, in_c, kernel, kernel}),
        b_({out_c}),
        gw_({out_c, in_c, kernel, kernel}),
        gb_({out_c}) {}

  static size_t out_extent(size_t in, size_t k, size_t stride, size_t pad) {
    if (in + 2 * pad < k) fail(ErrorKind::invalid_argument, "conv: kernel larger than padded input");
    return (in + 2 * pad - k) / stride + 1;
  }

  TensorT<S> forward(const TensorT<S>& x) override {
    const size_t m = x.extent(0), h = x.extent(2), w = x.extent(3);
    const size_t ho = out_extent(h, k_, stride_, pad_), wo = out_extent(w, k_, stride_, pad_);
    x_ = x;
    TensorT<S> y({m, out_c_, ho, wo});
    for (size_t n = 0; n < m; ++n)
      for (size_t co = 0; co < out_c_; ++co)
        for (size_t oy = 0; oy < ho; ++oy)
          for (size_t ox = 0; ox < wo; ++ox) {
            S acc = b_[co];
            for (size_t ci = 0; ci < in_c_; ++ci) {
              const S* xp = x.data() + ((n * in_c_ + ci) * h) * w;
              const S* wp = w_.data() + ((co * in_c_ + ci) * k_) * k_;
              for (size_t ky = 0; ky < k_; ++ky) {
                const long iy = static_cast<long>(oy * stride_ + ky) - static_cast<long>(pad_);
                if (iy < 0 || iy >= static_cast<long>(h)) continue;
                for (size_t kx = 0; kx < k_; ++kx) {
                  const long ix = static_cast<long>(ox * stride_ + kx) - static_cast<long>(pad_);
                  if (ix < 0 || ix >= static_cast<long>(w)) continue;
                  acc += wp[ky * k_ + kx] * xp[iy * w + ix];
                }
              }
            }
            y[((n * out_c_ + co) * ho + oy) * wo + ox] = acc;
          }
    return y;
  }

  TensorT<S> backward(const TensorT<S>& go) override {
    const size_t m = x_.extent(0), h = x_.extent(2), w = x_.extent(3);
    const size_t ho = go.extent(2), wo = go.extent(3);
    gw_.fill(S(0));
    gb_.fill(S(0));
    TensorT<S> gx(x_.shape());
    for (size_t n = 0; n < m; ++n)
      for (size_t co = 0; co < out_c_; ++co)
        for (size_t oy = 0; oy < ho; ++oy)
          for (size_t ox = 0; ox < wo; ++ox) {
            const S g = go[((n * out_c_ + co) * ho + oy) * wo + ox];
            gb_[co] += g;
            for (size_t ci = 0; ci < in_c_; ++ci) {
              const S* xp = x_.data() + ((n * in_c_ + ci) * h) * w;
              S* gxp = gx.data() + ((n * in_c_ + ci) * h) * w;
              const S* wp = w_.data() + ((co * in_c_ + ci) * k_) * k_;
              S* gwp = gw_.data() + ((co * in_c_ + ci) * k_) * k_;
              for (size_t ky = 0; ky < k_; ++ky) {
                const long iy = static_cast<long>(oy * stride_ + ky) - static_cast<long>(pad_);
                if (iy < 0 || iy >= static_cast<long>(h)) continue;
                for (size_t kx = 0; kx < k_; ++kx) {
                  const long ix = static_cast<long>(ox * stride_ + kx) - static_cast<long>(pad_);
                  if (ix < 0 || ix >= static_cast<long>(w)) continue;
                  gwp[ky * k_ + kx] += g * xp[iy * w + ix];
                  gxp[iy * w + ix] += g * wp[ky * k_ + kx];
                }
              }
            }
          }
    return gx;
  }

  std::vector<TensorT<S>*> params() override { return {&w_, &b_}; }
  std::vector<TensorT<S>*> grads() override { return {&gw_, &gb_}; }
  std::unique_ptr<Layer<S>> clone() const override { return std::make_unique<Conv2dLayer>(*this); }

  size_t out_channels() const { return out_c_; }
  size_t kernel() const { return k_; }
  size_t stride() const { return stride_; }
  size_t pad() const { return pad_; }

 private:
  size_t in_c_, out_c_, k_, stride_, pad_;
  TensorT<S> w_, b_, gw_, gb_, x_;
};

// 2x2 pooling, stride 2, floor mode (trailing odd row/col dropped)
template <class S>
class Pool2dLayer final : public Layer<S> {
 public:
  explicit Pool2dLayer(Pooling kind) : kind_(kind) {}

  TensorT<S> forward(const TensorT<S>& x) override {
    const size_t m = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    const size_t ho = h / 2, wo = w / 2;
    if (ho == 0 || wo == 0) fail(ErrorKind::invalid_argument, "pool: input too small");
    in_shape_ = x.shape();
    TensorT<S> y({m, c, ho, wo});
    if (kind_ == Pooling::max) argmax_.assign(y.size(), 0);
    for (size_t n = 0; n < m; ++n)
      for (size_t ci = 0; ci < c; ++ci) {
        const S* xp = x.data() + ((n * c + ci) * h) * w;
        for (size_t oy = 0; oy < ho; ++oy)
          for (size_t ox = 0; ox < wo; ++ox) {
            const size_t base = (2 * oy) * w + 2 * ox;
            const size_t oi = ((n * c + ci) * ho + oy) * wo + ox;
            if (kind_ == Pooling::max) {
              size_t best = base;
              S bv = xp[base];
              const size_t cands[3] = {base + 1, base + w, base + w + 1};
              for (size_t cand : cands)
                if (xp[cand] > bv) {
                  bv = xp[cand];
                  best = cand;
                }
              y[oi] = bv;
              argmax_[oi] = ((n * c + ci) * h) * w + best;
            } else {
              y[oi] = (xp[base] + xp[base + 1] + xp[base + w] + xp[base + w + 1]) * S(0.25);
            }
          }
      }
    return y;
  }

  TensorT<S> backward(const TensorT<S>& go) override {
    TensorT<S> gx(in_shape_);
    const size_t m = go.extent(0), c = go.extent(1), ho = go.extent(2), wo = go.extent(3);
    const size_t h = in_shape_[2], w = in_shape_[3];
    for (size_t n = 0; n < m; ++n)
      for (size_t ci = 0; ci < c; ++ci)
        for (size_t oy = 0; oy < ho; ++oy)
          for (size_t ox = 0; ox < wo; ++ox) {
            const size_t oi = ((n * c + ci) * ho + oy) * wo + ox;
            const S g = go[oi];
            if (kind_ == Pooling::max) {
              gx[argmax_[oi]] += g;
            } else {
              S* gxp = gx.data() + ((n * c + ci) * h) * w;
              const size_t base = (2 * oy) * w + 2 * ox;
              const S q = g * S(0.25);
              gxp[base] += q;
              gxp[base + 1] += q;
              gxp[base + w] += q;
              gxp[base + w + 1] += q;
            }
          }
    return gx;
  }

  std::unique_ptr<Layer<S>> clone() const override { return std::make_unique<Pool2dLayer>(*this); }

 private:
  Pooling kind_;
  std::vector<size_t> in_shape_;
  std::vector<size_t> argmax_;
};

template <class S>
class FlattenLayer final : public Layer<S> {
 public:
  TensorT<S> forward(const TensorT<S>& x) override {
    in_shape_ = x.shape();
    const size_t m = x.extent(0);
    return TensorT<S>::from({m, x.size() / m}, x.values());
  }
  TensorT<S> backward(const TensorT<S>& go) override { return TensorT<S>::from(in_shape_, go.values()); }
  std::unique_ptr<Layer<S>> clone() const override { return std::make_unique<FlattenLayer>(*this); }

 private:
  std::vector<size_t> in_shape_;
};

// A model instance is single-threaded; clones are independent.
template <class S>
class ModelT {
 public:
  ModelT() = default;
  ModelT(const ModelT& o) { *this = o; }
  ModelT& operator=(const ModelT& o) {
    if (this == &o) return *this;
    layers_.clear();
    for (const auto& l : o.layers_) layers_.push_back(l->clone());
    input_shape_ = o.input_shape_;
    num_classes_ = o.num_classes_;
    forward_done_ = o.forward_done_;
    return *this;
  }
  ModelT(ModelT&&) = default;
  ModelT& operator=(ModelT&&) = default;

  void add(std::unique_ptr<Layer<S>> l) { layers_.push_back(std::move(l)); }
  void set_io(std::vector<size_t> input_shape, int num_classes) {
    input_shape_ = std::move(input_shape);
    num_classes_ = num_classes;
  }

  const std::vector<size_t>& input_shape() const { return input_shape_; }
  int num_classes() const { return num_classes_; }

  TensorT<S> forward(const TensorT<S>& batch) {
    check_batch_shape(batch);
    TensorT<S> cur = batch;
    for (auto& l : layers_) cur = l->forward(cur);
    forward_done_ = true;
    return cur;
  }

  // Reverse accumulation through the cached forward pass; returns the
  // gradient with respect to the input batch.
  TensorT<S> backward(const TensorT<S>& grad_logits) {
    if (!forward_done_) fail(ErrorKind::state, "backward called without a preceding forward");
    TensorT<S> g = grad_logits;
    for (size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
    return g;
  }

  std::vector<TensorT<S>*> params() {
    std::vector<TensorT<S>*> out;
    for (auto& l : layers_)
      for (auto* p : l->params()) out.push_back(p);
    return out;
  }
  std::vector<TensorT<S>*> grads() {
    std::vector<TensorT<S>*> out;
    for (auto& l : layers_)
      for (auto* g : l->grads()) out.push_back(g);
    return out;
  }

  size_t param_count() {
    size_t n = 0;
    for (auto* p : params()) n += p->size();
    return n;
  }

 private:
  void check_batch_shape(const TensorT<S>& batch) const {
    bool ok = batch.rank() == input_shape_.size() + 1 && batch.extent(0) >= 1;
    if (ok)
      for (size_t i = 0; i < input_shape_.size(); ++i)
        if (batch.extent(i + 1) != input_shape_[i]) ok = false;
    if (!ok)
      fail(ErrorKind::invalid_argument,
           "forward: batch shape " + batch.shape_str() + " does not match model input");
  }

  std::vector<std::unique_ptr<Layer<S>>> layers_;
  std::vector<size_t> input_shape_;
  int num_classes_ = 0;
  bool forward_done_ = false;
};

using Model = ModelT<float>;
using ModelD = ModelT<double>;

// Weights: seeded uniform fan-in scaling. Biases: zero.
template <class S>
void init_dense(DenseLayer<S>& layer, Rng& rng, size_t fan_in) {
  const double lim = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : layer.weights().values()) v = static_cast<S>((2.0 * rng.uniform() - 1.0) * lim);
  layer.bias().fill(S(0));
}

template <class S>
ModelT<S> build_model(const ModelSpec& spec, uint64_t seed) {
  if (spec.num_classes < 1) fail(ErrorKind::invalid_argument, "model: num_classes must be >= 1");
  if (spec.input_shape.empty()) fail(ErrorKind::invalid_argument, "model: empty input shape");
  ModelT<S> model;
  model.set_io(spec.input_shape, spec.num_classes);
  size_t layer_idx = 0;
  auto layer_rng = [&] { return Rng(derive_seed(seed, "init", layer_idx++)); };

  if (std::holds_alternative<MlpSpec>(spec.arch)) {
    const auto& mlp = std::get<MlpSpec>(spec.arch);
    size_t width = 1;
    for (size_t e : spec.input_shape) width *= e;
    if (spec.input_shape.size() > 1) model.add(std::make_unique<FlattenLayer<S>>());
    for (int hsize : mlp.hidden) {
      if (hsize < 1) fail(ErrorKind::invalid_argument, "model: hidden width must be >= 1");
      auto dense = std::make_unique<DenseLayer<S>>(width, static_cast<size_t>(hsize));
      Rng r = layer_rng();
      init_dense(*dense, r, width);
      model.add(std::move(dense));
      model.add(std::make_unique<ActivationLayer<S>>(mlp.act));
      width = static_cast<size_t>(hsize);
    }
    auto out = std::make_unique<DenseLayer<S>>(width, static_cast<size_t>(spec.num_classes));
    Rng r = layer_rng();
    init_dense(*out, r, width);
    model.add(std::move(out));
    return model;
  }

  const auto& conv = std::get<SmallConvSpec>(spec.arch);
  if (spec.input_shape.size() != 3) fail(ErrorKind::invalid_argument, "conv model needs (c,h,w) input");
  if (conv.blocks.empty()) fail(ErrorKind::invalid_argument, "model: at least one conv block required");
  size_t c = spec.input_shape[0], h = spec.input_shape[1], w = spec.input_shape[2];
  for (const auto& blk : conv.blocks) {
    if (blk.channels < 1 || blk.kernel < 1 || blk.stride < 1)
      fail(ErrorKind::invalid_argument, "model: bad conv block");
    auto layer = std::make_unique<Conv2dLayer<S>>(c, blk.channels, blk.kernel, blk.stride);
    const double lim = 1.0 / std::sqrt(static_cast<double>(c * blk.kernel * blk.kernel));
    Rng r = layer_rng();
    for (auto& v : layer->params()[0]->values()) v = static_cast<S>((2.0 * r.uniform() - 1.0) * lim);
    const size_t pad = layer->pad();
    h = Conv2dLayer<S>::out_extent(h, blk.kernel, blk.stride, pad);
    w = Conv2dLayer<S>::out_extent(w, blk.kernel, blk.stride, pad);
    c = static_cast<size_t>(blk.channels);
    model.add(std::move(layer));
    model.add(std::make_unique<ActivationLayer<S>>(Activation::relu));
    if (h >= 2 && w >= 2) {
      model.add(std::make_unique<Pool2dLayer<S>>(conv.pooling));
      h /= 2;
      w /= 2;
    }
  }
  model.add(std::make_unique<FlattenLayer<S>>());
  size_t width = c * h * w;
  if (conv.classifier_width > 0) {
    auto mid = std::make_unique<DenseLayer<S>>(width, static_cast<size_t>(conv.classifier_width));
    Rng r = layer_rng();
    init_dense(*mid, r, width);
    model.add(std::move(mid));
    model.add(std::make_unique<ActivationLayer<S>>(Activation::relu));
    width = static_cast<size_t>(conv.classifier_width);
  }
  auto out = std::make_unique<DenseLayer<S>>(width, static_cast<size_t>(spec.num_classes));
  Rng r = layer_rng();
  init_dense(*out, r, width);
  model.add(std::move(out));
  return model;
}

// Euclidean norm over all parameter entries, accumulated in double.
template <class S>
double l2_norm(ModelT<S>& model) {
  double acc = 0.0;
  for (auto* p : model.params())
    for (S v : p->values()) acc += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(acc);
}

}  // namespace ordlab
