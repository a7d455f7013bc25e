#include "edi/genome.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "edi/rng.hpp"
#include "edi/serialize.hpp"

namespace edi {

void NetworkGenome::validate() const {
  infer_shapes(input, layers);
  if (weights.weights.size() != layers.size() || weights.biases.size() != layers.size() ||
      masks.bits.size() != layers.size())
    throw std::invalid_argument("genome: per-layer arrays do not match layer count");
  if (generation < 0) throw std::invalid_argument("genome: negative generation index");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& spec = layers[i];
    if (weights.weights[i].size() != spec.weight_count() ||
        weights.biases[i].size() != spec.bias_count() ||
        masks.bits[i].size() != spec.weight_count())
      throw std::invalid_argument("genome: layer " + std::to_string(i) +
                                  " arrays not congruent with its spec");
    for (auto b : masks.bits[i])
      if (b > 1) throw std::invalid_argument("genome: non-binary mask value in layer " +
                                             std::to_string(i));
  }
}

void NetworkGenome::apply_masks() {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& w = weights.weights[i];
    const auto& m = masks.bits[i];
    for (std::size_t j = 0; j < w.size(); ++j)
      if (!m[j]) w[j] = 0.0;
  }
}

bool NetworkGenome::same_architecture(const NetworkGenome& other) const {
  return input == other.input && layers == other.layers;
}

std::vector<LayerSpec> lenet5_layers() {
  return {
      LayerSpec::conv(6, 1, 5, 1, 2),  LayerSpec::act(Activation::tanh),
      LayerSpec::avgpool(2, 2),        LayerSpec::conv(16, 6, 5),
      LayerSpec::act(Activation::tanh), LayerSpec::avgpool(2, 2),
      LayerSpec::dense(120, 400),      LayerSpec::act(Activation::tanh),
      LayerSpec::dense(84, 120),       LayerSpec::act(Activation::tanh),
      LayerSpec::dense(10, 84),
  };
}

NetworkGenome make_genome(const Shape& input, std::vector<LayerSpec> layers, std::uint64_t seed,
                          std::string lineage_id) {
  NetworkGenome g;
  g.input = input;
  g.layers = std::move(layers);
  g.lineage_id = std::move(lineage_id);
  g.generation = 0;
  infer_shapes(g.input, g.layers);

  Rng rng(seed);
  const std::size_t n = g.layers.size();
  g.weights.weights.resize(n);
  g.weights.biases.resize(n);
  g.masks.bits.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& spec = g.layers[i];
    if (!spec.has_weights()) continue;
    const double limit =
        std::sqrt(6.0 / static_cast<double>(spec.fan_in() + spec.fan_out()));
    auto& w = g.weights.weights[i];
    w.resize(spec.weight_count());
    for (auto& v : w) v = (2.0 * uniform01(rng) - 1.0) * limit;
    g.weights.biases[i].assign(spec.bias_count(), 0.0);
    g.masks.bits[i].assign(spec.weight_count(), 1);
  }
  return g;
}

NetworkGenome build_ancestor(std::uint64_t seed) {
  return make_genome(Shape{1, 28, 28}, lenet5_layers(), seed);
}

std::size_t total_weight_count(const NetworkGenome& genome) {
  std::size_t total = 0;
  for (const auto& spec : genome.layers) total += spec.weight_count();
  return total;
}

std::size_t live_synapse_count(const NetworkGenome& genome, std::size_t layer) {
  const auto& m = genome.masks.bits.at(layer);
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

std::size_t live_synapse_count(const NetworkGenome& genome) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < genome.layers.size(); ++i) total += live_synapse_count(genome, i);
  return total;
}

bool is_degenerate(const NetworkGenome& genome) {
  for (std::size_t i = 0; i < genome.layers.size(); ++i)
    if (genome.layers[i].has_weights() && live_synapse_count(genome, i) == 0) return true;
  return false;
}

bool ClusterPartition::matches(const NetworkGenome& genome) const {
  if (layer_ranges.size() != genome.layers.size()) return false;
  for (std::size_t i = 0; i < genome.layers.size(); ++i) {
    const auto [first, last] = layer_ranges[i];
    std::size_t covered = 0;
    for (std::size_t c = first; c < last; ++c) {
      if (clusters[c].layer != i || clusters[c].begin != covered) return false;
      covered = clusters[c].end;
    }
    if (covered != genome.layers[i].weight_count()) return false;
  }
  return true;
}

ClusterPartition partition_clusters(const NetworkGenome& genome) {
  ClusterPartition p;
  p.layer_ranges.reserve(genome.layers.size());
  for (std::size_t i = 0; i < genome.layers.size(); ++i) {
    const auto& spec = genome.layers[i];
    const std::size_t first = p.clusters.size();
    if (spec.has_weights()) {
      const std::size_t count = spec.bias_count();  // filters or output neurons
      const std::size_t width = spec.fan_in();
      for (std::size_t k = 0; k < count; ++k)
        p.clusters.push_back(Cluster{p.clusters.size(), i, k * width, (k + 1) * width});
    }
    p.layer_ranges.emplace_back(first, p.clusters.size());
  }
  return p;
}

StrengthReport compute_strengths(const NetworkGenome& genome, const ClusterPartition& partition) {
  if (!partition.matches(genome))
    throw std::invalid_argument("compute_strengths: partition does not match genome");
  StrengthReport report;
  report.cluster.assign(partition.size(), 0.0);
  report.synapse.resize(genome.layers.size());
  for (std::size_t i = 0; i < genome.layers.size(); ++i)
    report.synapse[i].assign(genome.layers[i].weight_count(), 0.0);

  for (std::size_t layer = 0; layer < genome.layers.size(); ++layer) {
    const auto& w = genome.weights.weights[layer];
    const auto& m = genome.masks.bits[layer];
    const auto [first, last] = partition.layer_ranges[layer];
    double layer_max = 0.0;
    for (std::size_t c = first; c < last; ++c) {
      const Cluster& cl = partition.clusters[c];
      double sum = 0.0;
      double peak = 0.0;
      std::size_t live = 0;
      for (std::size_t j = cl.begin; j < cl.end; ++j) {
        if (!m[j]) continue;
        const double a = std::fabs(w[j]);
        sum += a;
        peak = std::max(peak, a);
        ++live;
      }
      const double mean = live ? sum / static_cast<double>(live) : 0.0;
      report.cluster[c] = mean;
      layer_max = std::max(layer_max, mean);
      auto& s = report.synapse[layer];
      if (peak > 0.0)
        for (std::size_t j = cl.begin; j < cl.end; ++j)
          s[j] = m[j] ? std::fabs(w[j]) / peak : 0.0;
    }
    for (std::size_t c = first; c < last; ++c)
      report.cluster[c] = layer_max > 0.0 ? report.cluster[c] / layer_max : 0.0;
  }
  return report;
}

StorageSize storage_size(const NetworkGenome& genome) {
  return {live_synapse_count(genome), sparse_encoded_size(genome)};
}

}  // namespace edi
