#include "edi/layers.hpp"

#include <sstream>

namespace edi {

LayerSpec LayerSpec::conv(int out_channels, int in_channels, int kernel, int stride,
                          int padding) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.out_channels = out_channels;
  s.in_channels = in_channels;
  s.kernel_h = kernel;
  s.kernel_w = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::avgpool(int window, int stride) {
  LayerSpec s;
  s.kind = LayerKind::avgpool2d;
  s.window = window;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::dense(int out_dim, int in_dim) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.out_dim = out_dim;
  s.in_dim = in_dim;
  return s;
}

LayerSpec LayerSpec::act(Activation a) {
  LayerSpec s;
  s.kind = LayerKind::activation;
  s.activation = a;
  return s;
}

std::size_t LayerSpec::weight_count() const {
  switch (kind) {
    case LayerKind::conv2d:
      return static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w;
    case LayerKind::dense:
      return static_cast<std::size_t>(out_dim) * in_dim;
    default:
      return 0;
  }
}

std::size_t LayerSpec::bias_count() const {
  switch (kind) {
    case LayerKind::conv2d:
      return static_cast<std::size_t>(out_channels);
    case LayerKind::dense:
      return static_cast<std::size_t>(out_dim);
    default:
      return 0;
  }
}

std::size_t LayerSpec::fan_in() const {
  if (kind == LayerKind::conv2d) return static_cast<std::size_t>(in_channels) * kernel_h * kernel_w;
  if (kind == LayerKind::dense) return static_cast<std::size_t>(in_dim);
  return 0;
}

std::size_t LayerSpec::fan_out() const {
  if (kind == LayerKind::conv2d) return static_cast<std::size_t>(out_channels) * kernel_h * kernel_w;
  if (kind == LayerKind::dense) return static_cast<std::size_t>(out_dim);
  return 0;
}

ShapeError::ShapeError(std::size_t layer, const std::string& what)
    : std::runtime_error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}

Shape output_shape(const LayerSpec& spec, const Shape& in, std::size_t layer_index) {
  auto fail = [&](const std::string& msg) { throw ShapeError(layer_index, msg); };
  switch (spec.kind) {
    case LayerKind::conv2d: {
      if (spec.out_channels <= 0 || spec.in_channels <= 0 || spec.kernel_h <= 0 ||
          spec.kernel_w <= 0 || spec.stride <= 0 || spec.padding < 0)
        fail("conv parameters must be positive");
      if (in.channels != spec.in_channels) {
        std::ostringstream os;
        os << "conv expects " << spec.in_channels << " input channels, got " << in.channels;
        fail(os.str());
      }
      const int ph = in.height + 2 * spec.padding;
      const int pw = in.width + 2 * spec.padding;
      if (ph < spec.kernel_h || pw < spec.kernel_w) fail("conv kernel larger than input");
      return {spec.out_channels, (ph - spec.kernel_h) / spec.stride + 1,
              (pw - spec.kernel_w) / spec.stride + 1};
    }
    case LayerKind::avgpool2d: {
      if (spec.window <= 0 || spec.stride <= 0) fail("pool window and stride must be positive");
      if (in.height < spec.window || in.width < spec.window) fail("pool window larger than input");
      return {in.channels, (in.height - spec.window) / spec.stride + 1,
              (in.width - spec.window) / spec.stride + 1};
    }
    case LayerKind::dense: {
      if (spec.out_dim <= 0 || spec.in_dim <= 0) fail("dense dimensions must be positive");
      if (in.size() != static_cast<std::size_t>(spec.in_dim)) {
        std::ostringstream os;
        os << "dense expects " << spec.in_dim << " inputs, got " << in.size();
        fail(os.str());
      }
      return {spec.out_dim, 1, 1};
    }
    case LayerKind::activation:
      return in;
  }
  fail("unknown layer kind");
  return {};
}

std::vector<Shape> infer_shapes(const Shape& input, const std::vector<LayerSpec>& layers) {
  if (input.channels <= 0 || input.height <= 0 || input.width <= 0)
    throw ShapeError(0, "input shape must be positive");
  std::vector<Shape> shapes{input};
  shapes.reserve(layers.size() + 1);
  for (std::size_t i = 0; i < layers.size(); ++i)
    shapes.push_back(output_shape(layers[i], shapes.back(), i));
  return shapes;
}

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::avgpool2d: return "avgpool2d";
    case LayerKind::dense: return "dense";
    case LayerKind::activation: return "activation";
  }
  return "unknown";
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::none: return "none";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "unknown";
}

}  // namespace edi
