#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace edi {

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class LayerKind : std::uint8_t { conv2d = 0, avgpool2d = 1, dense = 2, activation = 3 };
enum class Activation : std::uint8_t { none = 0, tanh = 1, relu = 2 };

// One flat struct for every kind; fields that do not apply stay zero.
// Conv weights are laid out [out][in][kh][kw], dense weights [out][in].
struct LayerSpec {
  LayerKind kind = LayerKind::activation;
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int padding = 0;
  int out_dim = 0;
  int in_dim = 0;
  int window = 0;
  Activation activation = Activation::none;

  static LayerSpec conv(int out_channels, int in_channels, int kernel, int stride = 1,
                        int padding = 0);
  static LayerSpec avgpool(int window, int stride);
  static LayerSpec dense(int out_dim, int in_dim);
  static LayerSpec act(Activation a);

  bool has_weights() const { return kind == LayerKind::conv2d || kind == LayerKind::dense; }
  std::size_t weight_count() const;
  std::size_t bias_count() const;
  std::size_t fan_in() const;
  std::size_t fan_out() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Thrown when a layer cannot accept its input; carries the layer index.
class ShapeError : public std::runtime_error {
 public:
  ShapeError(std::size_t layer, const std::string& what);
  std::size_t layer() const { return layer_; }

 private:
  std::size_t layer_;
};

/// Output shape of one layer, or ShapeError(layer_index) if incompatible.
Shape output_shape(const LayerSpec& spec, const Shape& input, std::size_t layer_index);

/// Shapes of every activation: element 0 is the input, element k+1 the output of layer k.
std::vector<Shape> infer_shapes(const Shape& input, const std::vector<LayerSpec>& layers);

std::string to_string(LayerKind kind);
std::string to_string(Activation a);

/// Real-valued parameters; one weight per potential synapse. Layers without
/// parameters hold empty arrays so indices line up with the layer list.
struct WeightStore {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  friend bool operator==(const WeightStore&, const WeightStore&) = default;
};

/// Binary synapse mask congruent to WeightStore::weights. Biases are never masked.
struct SynapseMask {
  std::vector<std::vector<std::uint8_t>> bits;

  friend bool operator==(const SynapseMask&, const SynapseMask&) = default;
};

}  // namespace edi
