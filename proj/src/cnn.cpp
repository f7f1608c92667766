#include "tongue/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tongue {

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::dense: return "dense";
    case LayerKind::softmax: return "softmax";
  }
  return "?";
}

LayerKind parse_layer_kind(std::string_view text) {
  for (LayerKind k : {LayerKind::conv, LayerKind::sigmoid, LayerKind::maxpool, LayerKind::dense,
                      LayerKind::softmax})
    if (to_string(k) == text) return k;
  throw ValidationError("unknown layer kind '" + std::string(text) + "'");
}

std::size_t CnnModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<LayerSpec> CnnModel::spec() const {
  std::vector<LayerSpec> s;
  for (const auto& l : layers) s.push_back(l.spec);
  return s;
}

std::vector<LayerSpec> default_cnn_spec() {
  return {LayerSpec::conv(3, 8),  LayerSpec::sigmoid(), LayerSpec::maxpool(),
          LayerSpec::conv(3, 16), LayerSpec::sigmoid(), LayerSpec::maxpool(),
          LayerSpec::dense(32),   LayerSpec::sigmoid(), LayerSpec::dense(2),
          LayerSpec::softmax()};
}

std::vector<int> default_cnn_taps() { return {2, 5, 7}; }

namespace {

// Glorot & Bengio's scale for sigmoid units: four times the tanh bound.
double gain(const std::vector<LayerSpec>& spec, std::size_t i) {
  return i + 1 < spec.size() && spec[i + 1].kind == LayerKind::sigmoid ? 4.0 : 1.0;
}

}  // namespace

CnnModel cnn_init(const std::vector<LayerSpec>& spec, std::uint64_t seed, Shape3 input,
                  std::vector<int> taps) {
  if (spec.empty()) throw ShapeError("network spec is empty");
  if (input.c <= 0 || input.h <= 0 || input.w <= 0) throw ShapeError("network input shape must be positive");
  CnnModel m;
  m.input = input;
  m.seed = seed;
  Rng rng(Rng::derive(seed, 0x636e6e));
  Shape3 shape = input;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const std::string where = "layer " + std::to_string(i) + " (" + std::string(to_string(spec[i].kind)) + "): ";
    CnnLayer layer{spec[i], shape, shape, {}, {}};
    LayerSpec& s = layer.spec;
    switch (s.kind) {
      case LayerKind::conv: {
        if (s.kernel_h <= 0 || s.kernel_w <= 0 || s.out_channels <= 0 || s.stride <= 0)
          throw ShapeError(where + "kernel, output channels and stride must be positive");
        if (s.in_channels == 0) s.in_channels = shape.c;
        if (s.in_channels != shape.c)
          throw ShapeError(where + "expects " + std::to_string(s.in_channels) + " input channels, got " +
                           std::to_string(shape.c));
        const int oh = (shape.h - s.kernel_h) / s.stride + 1;
        const int ow = (shape.w - s.kernel_w) / s.stride + 1;
        if (shape.h < s.kernel_h || shape.w < s.kernel_w || oh <= 0 || ow <= 0)
          throw ShapeError(where + "kernel larger than its input");
        layer.out = {s.out_channels, oh, ow};
        const int fan_in = s.in_channels * s.kernel_h * s.kernel_w;
        const int fan_out = s.out_channels * s.kernel_h * s.kernel_w;
        const double bound = gain(spec, i) * std::sqrt(6.0 / (fan_in + fan_out));
        layer.weights.resize(static_cast<std::size_t>(s.out_channels) * fan_in);
        for (double& w : layer.weights) w = rng.uniform(-bound, bound);
        layer.bias.assign(s.out_channels, 0.0);
        break;
      }
      case LayerKind::sigmoid:
        break;
      case LayerKind::maxpool:
        if (shape.h < 2 || shape.w < 2) throw ShapeError(where + "input smaller than the 2x2 window");
        layer.out = {shape.c, shape.h / 2, shape.w / 2};
        break;
      case LayerKind::dense: {
        const int in = static_cast<int>(shape.size());
        if (s.out_features <= 0) throw ShapeError(where + "output size must be positive");
        if (s.in_features == 0) s.in_features = in;
        if (s.in_features != in)
          throw ShapeError(where + "expects " + std::to_string(s.in_features) + " inputs, got " +
                           std::to_string(in));
        layer.out = {s.out_features, 1, 1};
        const double bound = gain(spec, i) * std::sqrt(6.0 / (in + s.out_features));
        layer.weights.resize(static_cast<std::size_t>(s.out_features) * in);
        for (double& w : layer.weights) w = rng.uniform(-bound, bound);
        layer.bias.assign(s.out_features, 0.0);
        break;
      }
      case LayerKind::softmax:
        if (i + 1 != spec.size()) throw ShapeError(where + "softmax must be the final layer");
        if (shape.size() != 2) throw ShapeError(where + "softmax must act on exactly 2 units");
        layer.out = {2, 1, 1};
        break;
    }
    shape = layer.out;
    m.layers.push_back(std::move(layer));
  }
  if (m.layers.back().spec.kind != LayerKind::softmax)
    throw ShapeError("network must end in a 2-way softmax");
  for (int t : taps)
    if (t < 0 || t >= static_cast<int>(m.layers.size()))
      throw ShapeError("tap index " + std::to_string(t) + " is not a layer");
  m.taps = std::move(taps);
  return m;
}

std::vector<double> to_chw(const ImageTensor& image) {
  const int h = image.height(), w = image.width(), c = image.channels();
  std::vector<double> out(image.size());
  const auto src = image.data();
  for (int ch = 0; ch < c; ++ch)
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < w; ++col)
        out[(static_cast<std::size_t>(ch) * h + r) * w + col] = src[(static_cast<std::size_t>(r) * w + col) * c + ch];
  return out;
}

namespace {

void conv_forward(const CnnLayer& L, const double* in, double* out) {
  const auto& s = L.spec;
  const int oh = L.out.h, ow = L.out.w, ih = L.in.h, iw = L.in.w;
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;
  for (int o = 0; o < L.out.c; ++o) {
    double* dst = out + o * plane;
    std::fill(dst, dst + plane, L.bias[o]);
    for (int i = 0; i < L.in.c; ++i) {
      const double* src = in + static_cast<std::size_t>(i) * ih * iw;
      for (int ky = 0; ky < s.kernel_h; ++ky)
        for (int kx = 0; kx < s.kernel_w; ++kx) {
          const double w = L.weights[((static_cast<std::size_t>(o) * L.in.c + i) * s.kernel_h + ky) * s.kernel_w + kx];
          for (int y = 0; y < oh; ++y) {
            const double* row = src + static_cast<std::size_t>(y * s.stride + ky) * iw + kx;
            double* drow = dst + static_cast<std::size_t>(y) * ow;
            if (s.stride == 1) {
              for (int x = 0; x < ow; ++x) drow[x] += w * row[x];
            } else {
              for (int x = 0; x < ow; ++x) drow[x] += w * row[x * s.stride];
            }
          }
        }
    }
  }
}

void conv_backward(const CnnLayer& L, const double* in, const double* dout, double* din, double* dw,
                   double* db) {
  const auto& s = L.spec;
  const int oh = L.out.h, ow = L.out.w, ih = L.in.h, iw = L.in.w;
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;
  for (int o = 0; o < L.out.c; ++o) {
    const double* g = dout + o * plane;
    db[o] += std::accumulate(g, g + plane, 0.0);
    for (int i = 0; i < L.in.c; ++i) {
      const double* src = in + static_cast<std::size_t>(i) * ih * iw;
      double* dsrc = din ? din + static_cast<std::size_t>(i) * ih * iw : nullptr;
      for (int ky = 0; ky < s.kernel_h; ++ky)
        for (int kx = 0; kx < s.kernel_w; ++kx) {
          const std::size_t widx = ((static_cast<std::size_t>(o) * L.in.c + i) * s.kernel_h + ky) * s.kernel_w + kx;
          const double w = L.weights[widx];
          double acc = 0.0;
          for (int y = 0; y < oh; ++y) {
            const std::size_t base = static_cast<std::size_t>(y * s.stride + ky) * iw + kx;
            const double* grow = g + static_cast<std::size_t>(y) * ow;
            for (int x = 0; x < ow; ++x) {
              const std::size_t idx = base + static_cast<std::size_t>(x) * s.stride;
              acc += grow[x] * src[idx];
              if (dsrc) dsrc[idx] += w * grow[x];
            }
          }
          dw[widx] += acc;
        }
    }
  }
}

void pool_forward(const CnnLayer& L, const double* in, double* out) {
  const int iw = L.in.w;
  for (int c = 0; c < L.out.c; ++c)
    for (int y = 0; y < L.out.h; ++y)
      for (int x = 0; x < L.out.w; ++x) {
        const double* p = in + (static_cast<std::size_t>(c) * L.in.h + 2 * y) * iw + 2 * x;
        out[(static_cast<std::size_t>(c) * L.out.h + y) * L.out.w + x] =
            std::max(std::max(p[0], p[1]), std::max(p[iw], p[iw + 1]));
      }
}

void pool_backward(const CnnLayer& L, const double* in, const double* dout, double* din) {
  const int iw = L.in.w;
  for (int c = 0; c < L.out.c; ++c)
    for (int y = 0; y < L.out.h; ++y)
      for (int x = 0; x < L.out.w; ++x) {
        const std::size_t base = (static_cast<std::size_t>(c) * L.in.h + 2 * y) * iw + 2 * x;
        const std::size_t cand[4] = {base, base + 1, base + iw, base + iw + 1};
        std::size_t best = cand[0];
        for (std::size_t k : cand)
          if (in[k] > in[best]) best = k;
        din[best] += dout[(static_cast<std::size_t>(c) * L.out.h + y) * L.out.w + x];
      }
}

void dense_forward(const CnnLayer& L, const double* in, double* out) {
  const int n_in = L.spec.in_features;
  for (int o = 0; o < L.spec.out_features; ++o) {
    const double* row = L.weights.data() + static_cast<std::size_t>(o) * n_in;
    out[o] = std::inner_product(in, in + n_in, row, L.bias[o]);
  }
}

void dense_backward(const CnnLayer& L, const double* in, const double* dout, double* din, double* dw,
                    double* db) {
  const int n_in = L.spec.in_features;
  for (int o = 0; o < L.spec.out_features; ++o) {
    const double g = dout[o];
    db[o] += g;
    const double* row = L.weights.data() + static_cast<std::size_t>(o) * n_in;
    double* drow = dw + static_cast<std::size_t>(o) * n_in;
    for (int i = 0; i < n_in; ++i) {
      drow[i] += g * in[i];
      if (din) din[i] += g * row[i];
    }
  }
}

/// Activations of every layer; acts[0] is the input, acts[i+1] the output of layer i.
std::vector<std::vector<double>> forward_all(const CnnModel& m, std::span<const double> input) {
  if (input.size() != m.input.size())
    throw ShapeError("network input has " + std::to_string(input.size()) + " values, expected " +
                     std::to_string(m.input.size()));
  std::vector<std::vector<double>> acts;
  acts.reserve(m.layers.size() + 1);
  acts.emplace_back(input.begin(), input.end());
  for (const auto& L : m.layers) {
    const auto& in = acts.back();
    std::vector<double> out(L.out.size());
    switch (L.spec.kind) {
      case LayerKind::conv: conv_forward(L, in.data(), out.data()); break;
      case LayerKind::sigmoid:
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = sigmoid(in[k]);
        break;
      case LayerKind::maxpool: pool_forward(L, in.data(), out.data()); break;
      case LayerKind::dense: dense_forward(L, in.data(), out.data()); break;
      case LayerKind::softmax: {
        const double mx = std::max(in[0], in[1]);
        const double e0 = std::exp(in[0] - mx), e1 = std::exp(in[1] - mx);
        out[0] = e0 / (e0 + e1);
        out[1] = e1 / (e0 + e1);
        break;
      }
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

double cross_entropy_from_logits(const std::vector<double>& logits, int label) {
  const double mx = std::max(logits[0], logits[1]);
  const double lse = mx + std::log(std::exp(logits[0] - mx) + std::exp(logits[1] - mx));
  return lse - logits[label];
}

void check_label(int label) {
  if (label != 0 && label != 1) throw ValidationError("class label must be 0 or 1");
}

}  // namespace

CnnOutput cnn_forward_chw(const CnnModel& m, std::span<const double> input) {
  auto acts = forward_all(m, input);
  CnnOutput out;
  out.probabilities = {acts.back()[0], acts.back()[1]};
  for (int t : m.taps) out.taps.push_back(acts[t + 1]);
  return out;
}

CnnOutput cnn_forward(const CnnModel& m, const ImageTensor& image) {
  if (image.channels() != m.input.c || image.height() != m.input.h || image.width() != m.input.w)
    throw ShapeError("image does not match the network input shape");
  return cnn_forward_chw(m, to_chw(image));
}

double cnn_loss(const CnnModel& m, std::span<const double> input, int label) {
  check_label(label);
  auto acts = forward_all(m, input);
  return cross_entropy_from_logits(acts[acts.size() - 2], label);
}

CnnGradient::CnnGradient(const CnnModel& m) {
  for (const auto& L : m.layers) {
    weights.emplace_back(L.weights.size(), 0.0);
    bias.emplace_back(L.bias.size(), 0.0);
  }
}

double cnn_backprop(const CnnModel& m, std::span<const double> input, int label, CnnGradient& grad) {
  check_label(label);
  auto acts = forward_all(m, input);
  const std::size_t n = m.layers.size();
  // softmax + cross-entropy: d loss / d logits = p - onehot
  std::vector<double> delta = acts[n];
  delta[label] -= 1.0;
  const double loss = cross_entropy_from_logits(acts[n - 1], label);

  for (std::size_t li = n - 1; li-- > 0;) {
    const CnnLayer& L = m.layers[li];
    const auto& in = acts[li];
    const bool need_input_grad = li > 0;
    std::vector<double> din(need_input_grad ? in.size() : 0, 0.0);
    switch (L.spec.kind) {
      case LayerKind::conv:
        conv_backward(L, in.data(), delta.data(), need_input_grad ? din.data() : nullptr,
                      grad.weights[li].data(), grad.bias[li].data());
        break;
      case LayerKind::sigmoid:
        if (need_input_grad) {
          const auto& out = acts[li + 1];
          for (std::size_t k = 0; k < din.size(); ++k) din[k] = delta[k] * out[k] * (1.0 - out[k]);
        }
        break;
      case LayerKind::maxpool:
        if (need_input_grad) pool_backward(L, in.data(), delta.data(), din.data());
        break;
      case LayerKind::dense:
        dense_backward(L, in.data(), delta.data(), need_input_grad ? din.data() : nullptr,
                       grad.weights[li].data(), grad.bias[li].data());
        break;
      case LayerKind::softmax:
        throw ShapeError("softmax may only appear as the final layer");
    }
    if (!need_input_grad) break;
    delta = std::move(din);
  }
  return loss;
}

void cnn_apply(CnnModel& m, const CnnGradient& g, double scale) {
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    auto& L = m.layers[li];
    for (std::size_t k = 0; k < L.weights.size(); ++k) L.weights[k] -= scale * g.weights[li][k];
    for (std::size_t k = 0; k < L.bias.size(); ++k) L.bias[k] -= scale * g.bias[li][k];
  }
}

double cnn_mean_loss(const CnnModel& m, std::span<const CnnSample> data) {
  if (data.empty()) throw ValidationError("mean loss over an empty dataset");
  double sum = 0.0;
  for (const auto& s : data) sum += cnn_loss(m, s.input, s.label);
  return sum / static_cast<double>(data.size());
}

CnnTrainResult cnn_train_with_history(std::span<const CnnSample> data, const std::vector<LayerSpec>& spec,
                                      const TrainConfig& cfg, Shape3 input, std::vector<int> taps) {
  cfg.validate();
  if (data.empty()) throw ValidationError("cannot train a network on an empty dataset");
  CnnTrainResult result;
  result.model = cnn_init(spec, cfg.seed, input, std::move(taps));
  CnnModel& model = result.model;
  for (const auto& s : data) {
    if (s.input.size() != input.size()) throw ShapeError("training sample does not match the network input");
    check_label(s.label);
  }
  result.initial_loss = cnn_mean_loss(model, data);

  Rng order_rng(Rng::derive(cfg.seed, 0x6f72646572));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double seen = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      CnnGradient grad(model);
      for (std::size_t k = start; k < end; ++k)
        seen += cnn_backprop(model, data[order[k]].input, data[order[k]].label, grad);
      cnn_apply(model, grad, cfg.learning_rate / static_cast<double>(end - start));
    }
    result.epoch_losses.push_back(seen / static_cast<double>(data.size()));
  }
  result.final_loss = cnn_mean_loss(model, data);
  return result;
}

CnnModel cnn_train(std::span<const CnnSample> data, const std::vector<LayerSpec>& spec, const TrainConfig& cfg,
                   Shape3 input, std::vector<int> taps) {
  return cnn_train_with_history(data, spec, cfg, input, std::move(taps)).model;
}

Label cnn_predict_chw(const CnnModel& m, std::span<const double> input) {
  const auto out = cnn_forward_chw(m, input);
  return out.probabilities[1] >= out.probabilities[0] ? Label::patient : Label::healthy;
}

Label cnn_predict(const CnnModel& m, const ImageTensor& image) {
  const auto out = cnn_forward(m, image);
  return out.probabilities[1] >= out.probabilities[0] ? Label::patient : Label::healthy;
}

}  // namespace tongue
