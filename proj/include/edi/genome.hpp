#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "edi/layers.hpp"

namespace edi {

/// The heritable unit: architecture, dense weights and the synapse mask.
struct NetworkGenome {
  Shape input{1, 28, 28};
  std::vector<LayerSpec> layers;
  WeightStore weights;
  SynapseMask masks;
  std::string lineage_id;
  int generation = 0;

  /// Throws std::invalid_argument (or ShapeError) unless specs, weights and
  /// masks are congruent and the mask is binary.
  void validate() const;

  /// Sets weight[i] = 0 wherever mask[i] == 0.
  void apply_masks();

  bool same_architecture(const NetworkGenome& other) const;

  friend bool operator==(const NetworkGenome&, const NetworkGenome&) = default;
};

/// conv 6@5x5 (pad 2) > tanh > avgpool 2 > conv 16@5x5 > tanh > avgpool 2 >
/// dense 120 > tanh > dense 84 > tanh > dense 10, for 1x28x28 input.
std::vector<LayerSpec> lenet5_layers();

/// Zero biases, weights uniform in +-sqrt(6 / (fan_in + fan_out)), all masks 1.
NetworkGenome make_genome(const Shape& input, std::vector<LayerSpec> layers, std::uint64_t seed,
                          std::string lineage_id = "ancestor");

/// Freshly initialized LeNet-5 at generation 0.
NetworkGenome build_ancestor(std::uint64_t seed);

std::size_t total_weight_count(const NetworkGenome& genome);
std::size_t live_synapse_count(const NetworkGenome& genome);
std::size_t live_synapse_count(const NetworkGenome& genome, std::size_t layer);

/// True when some weighted layer has no live synapse left.
bool is_degenerate(const NetworkGenome& genome);

// Synaptic clusters. Every cluster is a contiguous run of one layer's weight
// array: a conv filter (all kernels of one output channel) or a dense
// neuron's fan-in row.
struct Cluster {
  std::size_t id = 0;
  std::size_t layer = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
};

struct ClusterPartition {
  std::vector<Cluster> clusters;
  /// Index range [first, last) into `clusters` for each layer.
  std::vector<std::pair<std::size_t, std::size_t>> layer_ranges;

  std::size_t size() const { return clusters.size(); }
  bool matches(const NetworkGenome& genome) const;
};

ClusterPartition partition_clusters(const NetworkGenome& genome);

/// Normalized strengths in [0,1].
struct StrengthReport {
  /// Indexed by cluster id.
  std::vector<double> cluster;
  /// Congruent to WeightStore::weights.
  std::vector<std::vector<double>> synapse;
};

/// Cluster strength: mean |w| over the cluster's live synapses, divided by the
/// largest such mean in the same layer. Synapse strength: |w| over the largest
/// live |w| in its cluster. Dead entries get 0.
StrengthReport compute_strengths(const NetworkGenome& genome, const ClusterPartition& partition);

struct StorageSize {
  std::size_t live_synapses = 0;
  std::size_t bytes = 0;
};

/// bytes is the exact size of the sparse export (see serialize.hpp).
StorageSize storage_size(const NetworkGenome& genome);

}  // namespace edi
