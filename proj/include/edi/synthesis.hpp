#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edi/genome.hpp"
#include "edi/rng.hpp"

namespace edi {

/// Cluster-level and synapse-level environmental factors as functions of the
/// generation index. Values are fractions in [0,1] (a "70%" factor is 0.70).
class EnvironmentModel {
 public:
  using Schedule = std::function<double(int generation)>;

  static EnvironmentModel constant(double cluster_factor, double synapse_factor);
  static EnvironmentModel scheduled(Schedule cluster_factor, Schedule synapse_factor);

  /// Both throw std::out_of_range if the schedule leaves [0,1].
  double cluster_factor(int generation) const;
  double synapse_factor(int generation) const;

 private:
  EnvironmentModel(Schedule cluster, Schedule synapse);
  Schedule cluster_;
  Schedule synapse_;
};

/// Mating weights alpha_{c,k} (cluster strengths) and alpha_{s,k} (synapse weights).
struct MatingCoefficients {
  std::vector<double> cluster;
  std::vector<double> synapse;

  static MatingCoefficients uniform(std::size_t parent_count);
  std::size_t parent_count() const { return cluster.size(); }
  /// Nonnegative, equal lengths, each set sums to 1 within 1e-9.
  void validate() const;
};

class ArchitectureMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Convex combination of parent cluster strengths, per cluster.
std::vector<double> mate_cluster_strengths(std::span<const StrengthReport> parent_strengths,
                                           const MatingCoefficients& coeffs);

/// Per-synapse convex combination of parents' effective weights (weight *
/// mask, so a dead synapse contributes 0). Biases are combined the same way.
/// The result does not depend on the order in which parents are listed.
WeightStore mate_synapse_weights(std::span<const NetworkGenome> parents,
                                 const MatingCoefficients& coeffs);

/// R * (1 - strength): the chance that the survival test R*(1-s) <= gamma
/// fails for gamma ~ U[0,1). Throws std::out_of_range outside [0,1].
double drop_probability(double factor, double strength);

/// True iff factor * (1 - strength) <= gamma.
bool survives(double factor, double strength, double gamma);

/// One gamma ~ U[0,1) per cluster, in cluster order.
std::vector<std::uint8_t> sample_cluster_survival(std::span<const double> strengths,
                                                  double cluster_factor, Rng& rng,
                                                  std::vector<double>* gammas = nullptr);

/// |w| / max |w| within each cluster over the synapses with nonzero weight.
std::vector<std::vector<double>> synapse_strengths(const WeightStore& weights,
                                                   const ClusterPartition& partition);

/// Synapses of dead clusters and synapses outside `eligible` die without a
/// draw; every other synapse gets its own gamma and survives iff
/// synapse_factor * (1 - strength) <= gamma.
SynapseMask sample_synapse_survival(const std::vector<std::vector<double>>& strengths,
                                    const SynapseMask& eligible,
                                    const ClusterPartition& partition,
                                    std::span<const std::uint8_t> cluster_alive,
                                    double synapse_factor, Rng& rng);

struct LayerDropStats {
  std::size_t layer = 0;
  std::size_t clusters = 0;
  std::size_t clusters_dropped = 0;
  std::size_t eligible_synapses = 0;   ///< nonzero mated weight
  std::size_t surviving_synapses = 0;
};

struct SynthesisOutcome {
  NetworkGenome offspring;                 ///< untrained
  std::vector<std::uint8_t> cluster_alive;  ///< 1^c per cluster id
  SynapseMask synapse_alive;
  std::vector<LayerDropStats> layer_stats;
  std::vector<double> cluster_gammas;  ///< filled only when record_gammas is set
  double cluster_factor = 0.0;
  double synapse_factor = 0.0;
};

struct SynthesisOptions {
  bool record_gammas = false;
};

/// Offspring for `generation` from parents of generation - 1:
/// strengths -> mating -> cluster survival -> synapse survival.
/// Offspring weights are the mated weights on surviving synapses, 0 elsewhere.
SynthesisOutcome synthesize_offspring(std::span<const NetworkGenome> parents,
                                      const EnvironmentModel& env,
                                      const MatingCoefficients& coeffs, int generation, Rng& rng,
                                      const SynthesisOptions& options = {});

}  // namespace edi
