#include "edi/synthesis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace edi {

namespace {

double checked_factor(double value, const char* which, int generation) {
  if (!(value >= 0.0 && value <= 1.0)) {
    std::ostringstream os;
    os << which << " factor " << value << " at generation " << generation << " is outside [0,1]";
    throw std::out_of_range(os.str());
  }
  return value;
}

// Sum of alpha_k * x_k with the terms sorted first, so any permutation of the
// (parent, coefficient) pairs produces the same bits.
class CanonicalSum {
 public:
  explicit CanonicalSum(std::size_t m) : terms_(m) {}
  double& operator[](std::size_t k) { return terms_[k]; }
  double sum() {
    if (terms_.size() == 1) return terms_[0];
    std::sort(terms_.begin(), terms_.end());
    double total = 0.0;
    for (double t : terms_) total += t;
    return total;
  }

 private:
  std::vector<double> terms_;
};

void check_coefficients(std::size_t parents, const MatingCoefficients& coeffs) {
  coeffs.validate();
  if (coeffs.parent_count() != parents)
    throw std::invalid_argument("mating: coefficient count " +
                                std::to_string(coeffs.parent_count()) + " != parent count " +
                                std::to_string(parents));
}

}  // namespace

EnvironmentModel::EnvironmentModel(Schedule cluster, Schedule synapse)
    : cluster_(std::move(cluster)), synapse_(std::move(synapse)) {}

EnvironmentModel EnvironmentModel::constant(double cluster_factor, double synapse_factor) {
  checked_factor(cluster_factor, "cluster", 0);
  checked_factor(synapse_factor, "synapse", 0);
  return EnvironmentModel([cluster_factor](int) { return cluster_factor; },
                          [synapse_factor](int) { return synapse_factor; });
}

EnvironmentModel EnvironmentModel::scheduled(Schedule cluster_factor, Schedule synapse_factor) {
  if (!cluster_factor || !synapse_factor)
    throw std::invalid_argument("environment: empty schedule");
  return EnvironmentModel(std::move(cluster_factor), std::move(synapse_factor));
}

double EnvironmentModel::cluster_factor(int generation) const {
  return checked_factor(cluster_(generation), "cluster", generation);
}

double EnvironmentModel::synapse_factor(int generation) const {
  return checked_factor(synapse_(generation), "synapse", generation);
}

MatingCoefficients MatingCoefficients::uniform(std::size_t parent_count) {
  if (parent_count == 0) throw std::invalid_argument("mating: need at least one parent");
  const double a = 1.0 / static_cast<double>(parent_count);
  return {std::vector<double>(parent_count, a), std::vector<double>(parent_count, a)};
}

void MatingCoefficients::validate() const {
  if (cluster.empty() || cluster.size() != synapse.size())
    throw std::invalid_argument("mating: coefficient sets must be nonempty and equally long");
  for (const auto* set : {&cluster, &synapse}) {
    double total = 0.0;
    for (double a : *set) {
      if (!(a >= 0.0)) throw std::invalid_argument("mating: negative coefficient");
      total += a;
    }
    if (std::fabs(total - 1.0) > 1e-9)
      throw std::invalid_argument("mating: coefficients must sum to 1");
  }
}

std::vector<double> mate_cluster_strengths(std::span<const StrengthReport> parent_strengths,
                                           const MatingCoefficients& coeffs) {
  if (parent_strengths.empty()) throw std::invalid_argument("mating: no parents");
  check_coefficients(parent_strengths.size(), coeffs);
  const std::size_t clusters = parent_strengths[0].cluster.size();
  for (const auto& r : parent_strengths)
    if (r.cluster.size() != clusters)
      throw ArchitectureMismatch("mating: parents have different cluster counts");

  std::vector<double> mated(clusters);
  CanonicalSum acc(parent_strengths.size());
  for (std::size_t c = 0; c < clusters; ++c) {
    for (std::size_t k = 0; k < parent_strengths.size(); ++k)
      acc[k] = coeffs.cluster[k] * parent_strengths[k].cluster[c];
    mated[c] = std::clamp(acc.sum(), 0.0, 1.0);
  }
  return mated;
}

WeightStore mate_synapse_weights(std::span<const NetworkGenome> parents,
                                 const MatingCoefficients& coeffs) {
  if (parents.empty()) throw std::invalid_argument("mating: no parents");
  check_coefficients(parents.size(), coeffs);
  for (const auto& p : parents) {
    p.validate();
    if (!p.same_architecture(parents[0]))
      throw ArchitectureMismatch("mating: parents do not share one architecture");
  }

  const std::size_t m = parents.size();
  const std::size_t layers = parents[0].layers.size();
  WeightStore mated;
  mated.weights.resize(layers);
  mated.biases.resize(layers);
  CanonicalSum acc(m);
  for (std::size_t i = 0; i < layers; ++i) {
    const std::size_t n = parents[0].weights.weights[i].size();
    auto& w = mated.weights[i];
    w.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < m; ++k) {
        const double live = parents[k].masks.bits[i][j] ? parents[k].weights.weights[i][j] : 0.0;
        acc[k] = coeffs.synapse[k] * live;
      }
      w[j] = acc.sum();
    }
    const std::size_t nb = parents[0].weights.biases[i].size();
    auto& b = mated.biases[i];
    b.resize(nb);
    for (std::size_t j = 0; j < nb; ++j) {
      for (std::size_t k = 0; k < m; ++k) acc[k] = coeffs.synapse[k] * parents[k].weights.biases[i][j];
      b[j] = acc.sum();
    }
  }
  return mated;
}

double drop_probability(double factor, double strength) {
  if (!(factor >= 0.0 && factor <= 1.0))
    throw std::out_of_range("drop_probability: factor outside [0,1]");
  if (!(strength >= 0.0 && strength <= 1.0))
    throw std::out_of_range("drop_probability: strength outside [0,1]");
  return factor * (1.0 - strength);
}

bool survives(double factor, double strength, double gamma) {
  return factor * (1.0 - strength) <= gamma;
}

std::vector<std::uint8_t> sample_cluster_survival(std::span<const double> strengths,
                                                  double cluster_factor, Rng& rng,
                                                  std::vector<double>* gammas) {
  drop_probability(cluster_factor, 0.0);  // range check
  std::vector<std::uint8_t> alive(strengths.size());
  if (gammas) gammas->clear();
  for (std::size_t c = 0; c < strengths.size(); ++c) {
    if (!(strengths[c] >= 0.0 && strengths[c] <= 1.0))
      throw std::out_of_range("sample_cluster_survival: strength outside [0,1]");
    const double gamma = uniform01(rng);
    if (gammas) gammas->push_back(gamma);
    alive[c] = survives(cluster_factor, strengths[c], gamma) ? 1 : 0;
  }
  return alive;
}

std::vector<std::vector<double>> synapse_strengths(const WeightStore& weights,
                                                   const ClusterPartition& partition) {
  std::vector<std::vector<double>> s(weights.weights.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i].assign(weights.weights[i].size(), 0.0);
  for (const auto& cl : partition.clusters) {
    const auto& w = weights.weights.at(cl.layer);
    if (cl.end > w.size()) throw ArchitectureMismatch("synapse_strengths: partition mismatch");
    double peak = 0.0;
    for (std::size_t j = cl.begin; j < cl.end; ++j) peak = std::max(peak, std::fabs(w[j]));
    if (peak == 0.0) continue;
    for (std::size_t j = cl.begin; j < cl.end; ++j) s[cl.layer][j] = std::fabs(w[j]) / peak;
  }
  return s;
}

SynapseMask sample_synapse_survival(const std::vector<std::vector<double>>& strengths,
                                    const SynapseMask& eligible,
                                    const ClusterPartition& partition,
                                    std::span<const std::uint8_t> cluster_alive,
                                    double synapse_factor, Rng& rng) {
  drop_probability(synapse_factor, 0.0);  // range check
  if (cluster_alive.size() != partition.size())
    throw std::invalid_argument("sample_synapse_survival: indicator count != cluster count");
  if (strengths.size() != eligible.bits.size())
    throw std::invalid_argument("sample_synapse_survival: strength and eligibility layouts differ");
  SynapseMask alive;
  alive.bits.resize(eligible.bits.size());
  for (std::size_t i = 0; i < alive.bits.size(); ++i) {
    if (strengths[i].size() != eligible.bits[i].size())
      throw std::invalid_argument("sample_synapse_survival: layer size mismatch");
    alive.bits[i].assign(eligible.bits[i].size(), 0);
  }
  for (const auto& cl : partition.clusters) {
    if (!cluster_alive[cl.id]) continue;
    const auto& s = strengths.at(cl.layer);
    const auto& e = eligible.bits[cl.layer];
    auto& a = alive.bits[cl.layer];
    for (std::size_t j = cl.begin; j < cl.end; ++j) {
      if (!e[j]) continue;
      a[j] = survives(synapse_factor, s[j], uniform01(rng)) ? 1 : 0;
    }
  }
  return alive;
}

SynthesisOutcome synthesize_offspring(std::span<const NetworkGenome> parents,
                                      const EnvironmentModel& env,
                                      const MatingCoefficients& coeffs, int generation, Rng& rng,
                                      const SynthesisOptions& options) {
  if (parents.empty()) throw std::invalid_argument("synthesis: empty parent list");
  if (generation < 1) throw std::invalid_argument("synthesis: offspring generation must be >= 1");
  for (const auto& p : parents)
    if (p.generation != generation - 1)
      throw std::invalid_argument("synthesis: parent generation " + std::to_string(p.generation) +
                                  " is not " + std::to_string(generation - 1));

  const NetworkGenome& first = parents[0];
  const ClusterPartition partition = partition_clusters(first);
  std::vector<StrengthReport> reports;
  reports.reserve(parents.size());
  for (const auto& p : parents) {
    if (!p.same_architecture(first))
      throw ArchitectureMismatch("synthesis: parents do not share one architecture");
    reports.push_back(compute_strengths(p, partition));
  }

  const auto mated_strengths = mate_cluster_strengths(reports, coeffs);
  WeightStore mated = mate_synapse_weights(parents, coeffs);

  SynapseMask eligible;
  eligible.bits.resize(mated.weights.size());
  for (std::size_t i = 0; i < mated.weights.size(); ++i) {
    eligible.bits[i].resize(mated.weights[i].size());
    for (std::size_t j = 0; j < mated.weights[i].size(); ++j)
      eligible.bits[i][j] = mated.weights[i][j] != 0.0 ? 1 : 0;
  }
  const auto strengths = synapse_strengths(mated, partition);

  SynthesisOutcome out;
  out.cluster_factor = env.cluster_factor(generation);
  out.synapse_factor = env.synapse_factor(generation);
  out.cluster_alive = sample_cluster_survival(
      mated_strengths, out.cluster_factor, rng, options.record_gammas ? &out.cluster_gammas : nullptr);
  out.synapse_alive = sample_synapse_survival(strengths, eligible, partition, out.cluster_alive,
                                              out.synapse_factor, rng);

  NetworkGenome& child = out.offspring;
  child.input = first.input;
  child.layers = first.layers;
  child.lineage_id = first.lineage_id;
  child.generation = generation;
  child.masks = out.synapse_alive;
  child.weights = std::move(mated);
  child.apply_masks();

  for (std::size_t i = 0; i < child.layers.size(); ++i) {
    if (!child.layers[i].has_weights()) continue;
    LayerDropStats st;
    st.layer = i;
    const auto [lo, hi] = partition.layer_ranges[i];
    st.clusters = hi - lo;
    for (std::size_t c = lo; c < hi; ++c) st.clusters_dropped += out.cluster_alive[c] ? 0 : 1;
    for (auto e : eligible.bits[i]) st.eligible_synapses += e;
    for (auto a : out.synapse_alive.bits[i]) st.surviving_synapses += a;
    out.layer_stats.push_back(st);
  }
  return out;
}

}  // namespace edi
