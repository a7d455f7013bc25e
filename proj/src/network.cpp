#include "edi/network.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "edi/rng.hpp"

namespace edi {

namespace {

struct ConvTap {
  std::uint32_t in_channel;
  std::uint32_t ky;
  std::uint32_t kx;
  std::uint32_t index;
};

// Live dense synapses in CSR form: row i owns cols[start[i] .. start[i+1]).
struct DenseRows {
  std::vector<std::uint32_t> start;
  std::vector<std::uint32_t> cols;
};

// Per-sample evaluator over one genome. Live-synapse structure is compiled
// once from the masks; weights are read from the genome on every call, so the
// same engine follows a genome through training steps.
class Engine {
 public:
  explicit Engine(const NetworkGenome& genome)
      : g_(genome), shapes_(infer_shapes(genome.input, genome.layers)) {
    const std::size_t n = genome.layers.size();
    conv_taps_.resize(n);
    dense_.resize(n);
    padded_.resize(n);
    acts_.resize(n + 1);
    grad_acts_.resize(n + 1);
    first_weighted_ = n;
    for (std::size_t k = 0; k <= n; ++k) {
      acts_[k].assign(shapes_[k].size(), 0.0);
      grad_acts_[k].assign(shapes_[k].size(), 0.0);
    }
    for (std::size_t k = 0; k < n; ++k) {
      const auto& spec = genome.layers[k];
      const auto& mask = genome.masks.bits[k];
      if (spec.has_weights()) first_weighted_ = std::min(first_weighted_, k);
      if (spec.kind == LayerKind::conv2d) {
        auto& taps = conv_taps_[k];
        taps.resize(static_cast<std::size_t>(spec.out_channels));
        std::uint32_t idx = 0;
        for (int oc = 0; oc < spec.out_channels; ++oc)
          for (int ic = 0; ic < spec.in_channels; ++ic)
            for (int ky = 0; ky < spec.kernel_h; ++ky)
              for (int kx = 0; kx < spec.kernel_w; ++kx, ++idx)
                if (mask[idx])
                  taps[static_cast<std::size_t>(oc)].push_back(
                      {static_cast<std::uint32_t>(ic), static_cast<std::uint32_t>(ky),
                       static_cast<std::uint32_t>(kx), idx});
        if (spec.padding > 0) {
          const auto& in = shapes_[k];
          padded_[k].assign(static_cast<std::size_t>(in.channels) * (in.height + 2 * spec.padding) *
                                (in.width + 2 * spec.padding),
                            0.0);
        }
      } else if (spec.kind == LayerKind::dense) {
        auto& rows = dense_[k];
        rows.start.reserve(static_cast<std::size_t>(spec.out_dim) + 1);
        rows.start.push_back(0);
        for (int i = 0; i < spec.out_dim; ++i) {
          const std::size_t base = static_cast<std::size_t>(i) * spec.in_dim;
          for (int j = 0; j < spec.in_dim; ++j)
            if (mask[base + j]) rows.cols.push_back(static_cast<std::uint32_t>(j));
          rows.start.push_back(static_cast<std::uint32_t>(rows.cols.size()));
        }
      }
    }
  }

  std::size_t output_size() const { return shapes_.back().size(); }

  std::uint64_t macs() const {
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < g_.layers.size(); ++k) {
      const auto& out = shapes_[k + 1];
      for (const auto& taps : conv_taps_[k])
        total += taps.size() * static_cast<std::uint64_t>(out.height) * out.width;
      total += dense_[k].cols.size();
    }
    return total;
  }

  std::span<const double> forward_sample(const double* x) {
    std::copy(x, x + shapes_[0].size(), acts_[0].begin());
    for (std::size_t k = 0; k < g_.layers.size(); ++k) {
      switch (g_.layers[k].kind) {
        case LayerKind::conv2d: conv_forward(k); break;
        case LayerKind::avgpool2d: pool_forward(k); break;
        case LayerKind::dense: dense_forward(k); break;
        case LayerKind::activation: activation_forward(k); break;
      }
    }
    return acts_.back();
  }

  /// Accumulates into `grads`; requires the preceding forward_sample.
  void backward_sample(std::span<const double> grad_out, WeightStore& grads) {
    std::copy(grad_out.begin(), grad_out.end(), grad_acts_.back().begin());
    for (std::size_t k = g_.layers.size(); k-- > first_weighted_;) {
      const bool need_input_grad = k > first_weighted_;
      switch (g_.layers[k].kind) {
        case LayerKind::conv2d: conv_backward(k, grads, need_input_grad); break;
        case LayerKind::avgpool2d: pool_backward(k); break;
        case LayerKind::dense: dense_backward(k, grads, need_input_grad); break;
        case LayerKind::activation: activation_backward(k); break;
      }
    }
  }

 private:
  void conv_forward(std::size_t k) {
    const auto& spec = g_.layers[k];
    const auto& in = shapes_[k];
    const auto& out = shapes_[k + 1];
    const int p = spec.padding;
    const int s = spec.stride;
    const std::size_t ph = static_cast<std::size_t>(in.height + 2 * p);
    const std::size_t pw = static_cast<std::size_t>(in.width + 2 * p);
    const double* src = acts_[k].data();
    if (p > 0) {
      auto& pad = padded_[k];
      for (int c = 0; c < in.channels; ++c)
        for (int y = 0; y < in.height; ++y)
          std::copy_n(acts_[k].data() + (static_cast<std::size_t>(c) * in.height + y) * in.width,
                      in.width, pad.data() + (c * ph + y + p) * pw + p);
      src = pad.data();
    }
    const auto& w = g_.weights.weights[k];
    const auto& b = g_.weights.biases[k];
    const std::size_t oh = static_cast<std::size_t>(out.height);
    const std::size_t ow = static_cast<std::size_t>(out.width);
    double* dst = acts_[k + 1].data();
    for (std::size_t oc = 0; oc < static_cast<std::size_t>(out.channels); ++oc) {
      double* plane = dst + oc * oh * ow;
      std::fill(plane, plane + oh * ow, b[oc]);
      for (const auto& tap : conv_taps_[k][oc]) {
        const double wv = w[tap.index];
        const double* base = src + tap.in_channel * ph * pw + tap.ky * pw + tap.kx;
        for (std::size_t y = 0; y < oh; ++y) {
          const double* row = base + y * s * pw;
          double* o = plane + y * ow;
          if (s == 1) {
            for (std::size_t x = 0; x < ow; ++x) o[x] += wv * row[x];
          } else {
            for (std::size_t x = 0; x < ow; ++x) o[x] += wv * row[x * s];
          }
        }
      }
    }
  }

  void conv_backward(std::size_t k, WeightStore& grads, bool need_input_grad) {
    const auto& spec = g_.layers[k];
    const auto& in = shapes_[k];
    const auto& out = shapes_[k + 1];
    const int p = spec.padding;
    const std::size_t s = static_cast<std::size_t>(spec.stride);
    const std::size_t ph = static_cast<std::size_t>(in.height + 2 * p);
    const std::size_t pw = static_cast<std::size_t>(in.width + 2 * p);
    const std::size_t oh = static_cast<std::size_t>(out.height);
    const std::size_t ow = static_cast<std::size_t>(out.width);
    const double* src = p > 0 ? padded_[k].data() : acts_[k].data();
    const double* gout = grad_acts_[k + 1].data();
    const auto& w = g_.weights.weights[k];
    auto& gw = grads.weights[k];
    auto& gb = grads.biases[k];

    double* gin = nullptr;
    if (need_input_grad) {
      if (p > 0) {
        pad_grad_.assign(static_cast<std::size_t>(in.channels) * ph * pw, 0.0);
        gin = pad_grad_.data();
      } else {
        std::fill(grad_acts_[k].begin(), grad_acts_[k].end(), 0.0);
        gin = grad_acts_[k].data();
      }
    }
    row_acc_.resize(ow);

    for (std::size_t oc = 0; oc < static_cast<std::size_t>(out.channels); ++oc) {
      const double* gplane = gout + oc * oh * ow;
      double bias_sum = 0.0;
      for (std::size_t i = 0; i < oh * ow; ++i) bias_sum += gplane[i];
      gb[oc] += bias_sum;
      for (const auto& tap : conv_taps_[k][oc]) {
        const std::size_t offset = tap.in_channel * ph * pw + tap.ky * pw + tap.kx;
        const double* base = src + offset;
        std::fill(row_acc_.begin(), row_acc_.end(), 0.0);
        for (std::size_t y = 0; y < oh; ++y) {
          const double* row = base + y * s * pw;
          const double* g = gplane + y * ow;
          double* acc = row_acc_.data();
          if (s == 1) {
            for (std::size_t x = 0; x < ow; ++x) acc[x] += g[x] * row[x];
          } else {
            for (std::size_t x = 0; x < ow; ++x) acc[x] += g[x] * row[x * s];
          }
        }
        gw[tap.index] += std::accumulate(row_acc_.begin(), row_acc_.end(), 0.0);
        if (gin) {
          const double wv = w[tap.index];
          double* gbase = gin + offset;
          for (std::size_t y = 0; y < oh; ++y) {
            double* grow = gbase + y * s * pw;
            const double* g = gplane + y * ow;
            if (s == 1) {
              for (std::size_t x = 0; x < ow; ++x) grow[x] += wv * g[x];
            } else {
              for (std::size_t x = 0; x < ow; ++x) grow[x * s] += wv * g[x];
            }
          }
        }
      }
    }
    if (gin && p > 0) {
      for (int c = 0; c < in.channels; ++c)
        for (int y = 0; y < in.height; ++y)
          std::copy_n(pad_grad_.data() + (c * ph + y + p) * pw + p, in.width,
                      grad_acts_[k].data() +
                          (static_cast<std::size_t>(c) * in.height + y) * in.width);
    }
  }

  void pool_forward(std::size_t k) {
    const auto& spec = g_.layers[k];
    const auto& in = shapes_[k];
    const auto& out = shapes_[k + 1];
    const double scale = 1.0 / (spec.window * spec.window);
    const double* src = acts_[k].data();
    double* dst = acts_[k + 1].data();
    for (int c = 0; c < out.channels; ++c)
      for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
          double sum = 0.0;
          for (int i = 0; i < spec.window; ++i)
            for (int j = 0; j < spec.window; ++j)
              sum += src[(static_cast<std::size_t>(c) * in.height + y * spec.stride + i) * in.width +
                         x * spec.stride + j];
          dst[(static_cast<std::size_t>(c) * out.height + y) * out.width + x] = sum * scale;
        }
  }

  void pool_backward(std::size_t k) {
    const auto& spec = g_.layers[k];
    const auto& in = shapes_[k];
    const auto& out = shapes_[k + 1];
    const double scale = 1.0 / (spec.window * spec.window);
    auto& gin = grad_acts_[k];
    const auto& gout = grad_acts_[k + 1];
    std::fill(gin.begin(), gin.end(), 0.0);
    for (int c = 0; c < out.channels; ++c)
      for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
          const double g =
              gout[(static_cast<std::size_t>(c) * out.height + y) * out.width + x] * scale;
          for (int i = 0; i < spec.window; ++i)
            for (int j = 0; j < spec.window; ++j)
              gin[(static_cast<std::size_t>(c) * in.height + y * spec.stride + i) * in.width +
                  x * spec.stride + j] += g;
        }
  }

  void dense_forward(std::size_t k) {
    const auto& rows = dense_[k];
    const auto& w = g_.weights.weights[k];
    const auto& b = g_.weights.biases[k];
    const double* x = acts_[k].data();
    double* y = acts_[k + 1].data();
    const std::size_t in_dim = static_cast<std::size_t>(g_.layers[k].in_dim);
    for (std::size_t i = 0; i + 1 < rows.start.size(); ++i) {
      const double* wrow = w.data() + i * in_dim;
      double sum = b[i];
      for (std::uint32_t e = rows.start[i]; e < rows.start[i + 1]; ++e) {
        const std::uint32_t j = rows.cols[e];
        sum += wrow[j] * x[j];
      }
      y[i] = sum;
    }
  }

  void dense_backward(std::size_t k, WeightStore& grads, bool need_input_grad) {
    const auto& rows = dense_[k];
    const auto& w = g_.weights.weights[k];
    auto& gw = grads.weights[k];
    auto& gb = grads.biases[k];
    const double* x = acts_[k].data();
    const double* gy = grad_acts_[k + 1].data();
    double* gx = grad_acts_[k].data();
    if (need_input_grad) std::fill(grad_acts_[k].begin(), grad_acts_[k].end(), 0.0);
    const std::size_t in_dim = static_cast<std::size_t>(g_.layers[k].in_dim);
    for (std::size_t i = 0; i + 1 < rows.start.size(); ++i) {
      const double g = gy[i];
      gb[i] += g;
      const std::size_t base = i * in_dim;
      for (std::uint32_t e = rows.start[i]; e < rows.start[i + 1]; ++e) {
        const std::uint32_t j = rows.cols[e];
        gw[base + j] += g * x[j];
        if (need_input_grad) gx[j] += w[base + j] * g;
      }
    }
  }

  void activation_forward(std::size_t k) {
    const auto& in = acts_[k];
    auto& out = acts_[k + 1];
    switch (g_.layers[k].activation) {
      case Activation::tanh:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
        break;
      case Activation::relu:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
        break;
      case Activation::none:
        std::copy(in.begin(), in.end(), out.begin());
        break;
    }
  }

  void activation_backward(std::size_t k) {
    const auto& in = acts_[k];
    const auto& out = acts_[k + 1];
    const auto& gout = grad_acts_[k + 1];
    auto& gin = grad_acts_[k];
    switch (g_.layers[k].activation) {
      case Activation::tanh:
        for (std::size_t i = 0; i < in.size(); ++i) gin[i] = gout[i] * (1.0 - out[i] * out[i]);
        break;
      case Activation::relu:
        for (std::size_t i = 0; i < in.size(); ++i) gin[i] = in[i] > 0.0 ? gout[i] : 0.0;
        break;
      case Activation::none:
        std::copy(gout.begin(), gout.end(), gin.begin());
        break;
    }
  }

  const NetworkGenome& g_;
  std::vector<Shape> shapes_;
  std::vector<std::vector<std::vector<ConvTap>>> conv_taps_;
  std::vector<DenseRows> dense_;
  std::vector<std::vector<double>> padded_;
  std::vector<std::vector<double>> acts_;
  std::vector<std::vector<double>> grad_acts_;
  std::vector<double> pad_grad_;
  std::vector<double> row_acc_;
  std::size_t first_weighted_ = 0;
};

WeightStore zero_like(const NetworkGenome& genome) {
  WeightStore z;
  z.weights.resize(genome.layers.size());
  z.biases.resize(genome.layers.size());
  for (std::size_t i = 0; i < genome.layers.size(); ++i) {
    z.weights[i].assign(genome.layers[i].weight_count(), 0.0);
    z.biases[i].assign(genome.layers[i].bias_count(), 0.0);
  }
  return z;
}

void zero_fill(WeightStore& ws) {
  for (auto& v : ws.weights) std::fill(v.begin(), v.end(), 0.0);
  for (auto& v : ws.biases) std::fill(v.begin(), v.end(), 0.0);
}

// Softmax cross-entropy of one sample; writes scale * dLoss/dlogits.
double softmax_xent(std::span<const double> logits, int label, std::span<double> grad,
                    double scale) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z - peak);
  const double log_denom = std::log(denom);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = std::exp(logits[i] - peak - log_denom);
    grad[i] = scale * (p - (static_cast<int>(i) == label ? 1.0 : 0.0));
  }
  return peak + log_denom - logits[static_cast<std::size_t>(label)];
}

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

void check_input(const NetworkGenome& genome, const Shape& shape, std::size_t count,
                 std::size_t values, std::span<const std::uint8_t> labels) {
  genome.validate();
  if (!(shape == genome.input)) {
    std::ostringstream os;
    os << "input shape " << shape.channels << "x" << shape.height << "x" << shape.width
       << " does not match genome input " << genome.input.channels << "x" << genome.input.height
       << "x" << genome.input.width;
    throw ShapeError(0, os.str());
  }
  if (values != count * shape.size())
    throw std::invalid_argument("image buffer size does not match label count");
  const auto classes = infer_shapes(genome.input, genome.layers).back().size();
  for (auto l : labels)
    if (l >= classes) throw std::invalid_argument("label exceeds network output width");
}

// Returns the (layer, index) of the first non-finite entry, if any.
bool find_non_finite(const WeightStore& ws, std::size_t& layer, std::size_t& index,
                     bool& is_bias) {
  for (std::size_t i = 0; i < ws.weights.size(); ++i) {
    for (std::size_t j = 0; j < ws.weights[i].size(); ++j)
      if (!std::isfinite(ws.weights[i][j])) {
        layer = i, index = j, is_bias = false;
        return true;
      }
    for (std::size_t j = 0; j < ws.biases[i].size(); ++j)
      if (!std::isfinite(ws.biases[i][j])) {
        layer = i, index = j, is_bias = true;
        return true;
      }
  }
  return false;
}

}  // namespace

Batch make_batch(const Dataset& dataset, std::span<const std::size_t> indices) {
  Batch b;
  b.shape = dataset.shape;
  const std::size_t stride = dataset.shape.size();
  b.images.reserve(indices.size() * stride);
  b.labels.reserve(indices.size());
  for (auto i : indices) {
    if (i >= dataset.size()) throw std::out_of_range("make_batch: index out of range");
    b.images.insert(b.images.end(), dataset.image(i), dataset.image(i) + stride);
    b.labels.push_back(dataset.labels[i]);
  }
  return b;
}

std::vector<double> forward(const NetworkGenome& genome, const Batch& batch) {
  check_input(genome, batch.shape, batch.size(), batch.images.size(), batch.labels);
  Engine engine(genome);
  const std::size_t width = engine.output_size();
  std::vector<double> logits;
  logits.reserve(batch.size() * width);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto out = engine.forward_sample(batch.images.data() + i * batch.shape.size());
    logits.insert(logits.end(), out.begin(), out.end());
  }
  return logits;
}

LossAndGrad loss_and_grad(const NetworkGenome& genome, const Batch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  check_input(genome, batch.shape, batch.size(), batch.images.size(), batch.labels);
  Engine engine(genome);
  LossAndGrad result{0.0, zero_like(genome)};
  std::vector<double> dlogits(engine.output_size());
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto out = engine.forward_sample(batch.images.data() + i * batch.shape.size());
    result.loss += softmax_xent(out, batch.labels[i], dlogits, scale);
    engine.backward_sample(dlogits, result.gradients);
  }
  result.loss *= scale;
  return result;
}

void sgd_step(NetworkGenome& genome, const WeightStore& gradients, double learning_rate) {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("sgd_step: learning rate must be positive");
  if (gradients.weights.size() != genome.layers.size() ||
      gradients.biases.size() != genome.layers.size())
    throw std::invalid_argument("sgd_step: gradient layout does not match genome");
  for (std::size_t i = 0; i < genome.layers.size(); ++i)
    if (gradients.weights[i].size() != genome.weights.weights[i].size() ||
        gradients.biases[i].size() != genome.weights.biases[i].size())
      throw std::invalid_argument("sgd_step: gradient layout does not match genome");
  std::size_t layer = 0, index = 0;
  bool is_bias = false;
  if (find_non_finite(gradients, layer, index, is_bias)) {
    std::ostringstream os;
    os << "sgd_step: non-finite gradient at layer " << layer << (is_bias ? " bias " : " weight ")
       << index;
    throw NonFiniteError(os.str());
  }
  for (std::size_t i = 0; i < genome.layers.size(); ++i) {
    auto& w = genome.weights.weights[i];
    const auto& g = gradients.weights[i];
    const auto& m = genome.masks.bits[i];
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = m[j] ? w[j] - learning_rate * g[j] : 0.0;
    auto& b = genome.weights.biases[i];
    const auto& gb = gradients.biases[i];
    for (std::size_t j = 0; j < b.size(); ++j) b[j] -= learning_rate * gb[j];
  }
}

double TrainBudget::learning_rate_at(int epoch) const {
  return learning_rate * std::pow(lr_decay, epoch / decay_every);
}

void TrainBudget::validate() const {
  if (epochs < 0) throw std::invalid_argument("budget: epochs must be >= 0");
  if (batch_size <= 0) throw std::invalid_argument("budget: batch size must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("budget: learning rate must be positive");
  if (!(lr_decay > 0.0)) throw std::invalid_argument("budget: lr decay must be positive");
  if (decay_every <= 0) throw std::invalid_argument("budget: decay interval must be positive");
}

TrainingDiverged::TrainingDiverged(int epoch, const std::string& what)
    : std::runtime_error("training diverged in epoch " + std::to_string(epoch) + ": " + what),
      epoch_(epoch) {}

TrainResult train(NetworkGenome genome, const Dataset& dataset, const TrainBudget& budget,
                  std::uint64_t seed) {
  budget.validate();
  if (dataset.size() == 0) throw std::invalid_argument("train: empty dataset");
  check_input(genome, dataset.shape, dataset.size(), dataset.images.size(), dataset.labels);
  const auto start = std::chrono::steady_clock::now();

  TrainResult result;
  result.genome = std::move(genome);
  if (budget.epochs == 0) return result;
  NetworkGenome& net = result.genome;
  net.apply_masks();

  Engine engine(net);
  WeightStore grads = zero_like(net);
  std::vector<double> dlogits(engine.output_size());
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  const std::size_t batch = static_cast<std::size_t>(budget.batch_size);

  for (int epoch = 0; epoch < budget.epochs; ++epoch) {
    const double lr = budget.learning_rate_at(epoch);
    shuffle_indices(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t first = 0; first < order.size(); first += batch) {
      const std::size_t last = std::min(order.size(), first + batch);
      const double scale = 1.0 / static_cast<double>(last - first);
      zero_fill(grads);
      double loss = 0.0;
      for (std::size_t e = first; e < last; ++e) {
        const auto out = engine.forward_sample(dataset.image(order[e]));
        loss += softmax_xent(out, dataset.labels[order[e]], dlogits, scale);
        engine.backward_sample(dlogits, grads);
      }
      if (!std::isfinite(loss)) throw TrainingDiverged(epoch, "loss is not finite");
      try {
        sgd_step(net, grads, lr);
      } catch (const NonFiniteError& err) {
        throw TrainingDiverged(epoch, err.what());
      }
      epoch_loss += loss;
    }
    std::size_t layer = 0, index = 0;
    bool is_bias = false;
    if (find_non_finite(net.weights, layer, index, is_bias))
      throw TrainingDiverged(epoch, "non-finite parameter in layer " + std::to_string(layer));
    result.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  result.work = 3 * engine.macs() * static_cast<std::uint64_t>(budget.epochs) * dataset.size();
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<int> predict(const NetworkGenome& genome, const Dataset& dataset) {
  check_input(genome, dataset.shape, dataset.size(), dataset.images.size(), dataset.labels);
  Engine engine(genome);
  std::vector<int> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i)
    out.push_back(static_cast<int>(argmax_lowest(engine.forward_sample(dataset.image(i)))));
  return out;
}

double evaluate(const NetworkGenome& genome, const Dataset& dataset) {
  if (dataset.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  const auto predicted = predict(genome, dataset);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == dataset.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

std::uint64_t forward_macs(const NetworkGenome& genome) { return Engine(genome).macs(); }

}  // namespace edi
