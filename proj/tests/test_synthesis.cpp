#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "edi/synthesis.hpp"
#include "test_support.hpp"

using namespace edi;

namespace {

// Dense 4 -> 3: three clusters of four synapses.
NetworkGenome toy(const std::vector<double>& weights, int generation = 0) {
  auto g = make_genome(Shape{1, 1, 4}, {LayerSpec::dense(3, 4)}, 0);
  g.weights.weights[0] = weights;
  for (std::size_t j = 0; j < weights.size(); ++j) g.masks.bits[0][j] = weights[j] != 0.0;
  g.generation = generation;
  return g;
}

double survival_rate(double factor, double strength, std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> s(draws, strength);
  const auto alive = sample_cluster_survival(s, factor, rng);
  return static_cast<double>(std::accumulate(alive.begin(), alive.end(), std::size_t{0})) /
         static_cast<double>(draws);
}

std::size_t live(const SynapseMask& m) {
  std::size_t n = 0;
  for (const auto& layer : m.bits) n += static_cast<std::size_t>(std::count(layer.begin(), layer.end(), 1));
  return n;
}

}  // namespace

TEST_CASE("environment model range checks") {
  const auto env = EnvironmentModel::constant(0.7, 0.7);
  CHECK(env.cluster_factor(0) == 0.7);
  CHECK(env.synapse_factor(50) == 0.7);
  CHECK_THROWS_AS(EnvironmentModel::constant(1.2, 0.5), std::out_of_range);
  const auto ramp = EnvironmentModel::scheduled([](int g) { return 0.5 + 0.1 * g; },
                                                [](int) { return 0.7; });
  CHECK(ramp.cluster_factor(2) == doctest::Approx(0.7));
  CHECK_THROWS_AS(ramp.cluster_factor(6), std::out_of_range);
}

TEST_CASE("mating coefficients") {
  const auto u = MatingCoefficients::uniform(4);
  CHECK(u.cluster == std::vector<double>(4, 0.25));
  CHECK_NOTHROW(u.validate());
  CHECK_THROWS(MatingCoefficients{{0.5, 0.6}, {0.5, 0.5}}.validate());
  CHECK_THROWS(MatingCoefficients{{1.5, -0.5}, {0.5, 0.5}}.validate());
  CHECK_THROWS(MatingCoefficients{{1.0}, {0.5, 0.5}}.validate());
  CHECK_THROWS(MatingCoefficients::uniform(0));
}

TEST_CASE("mate_cluster_strengths") {
  const StrengthReport a{{0.2, 1.0}, {}};
  const StrengthReport b{{0.8, 1.0}, {}};
  const std::vector<StrengthReport> one{a};
  CHECK(mate_cluster_strengths(one, MatingCoefficients::uniform(1)) == a.cluster);
  const std::vector<StrengthReport> same{b, b, b};
  const auto m3 = mate_cluster_strengths(same, MatingCoefficients::uniform(3));
  for (std::size_t i = 0; i < m3.size(); ++i) CHECK(m3[i] == doctest::Approx(b.cluster[i]));
  const std::vector<StrengthReport> two{a, b};
  CHECK(mate_cluster_strengths(two, MatingCoefficients::uniform(2))[0] == doctest::Approx(0.5));
  const std::vector<StrengthReport> ragged{a, StrengthReport{{0.5}, {}}};
  CHECK_THROWS_AS(mate_cluster_strengths(ragged, MatingCoefficients::uniform(2)), ArchitectureMismatch);
  CHECK_THROWS(mate_cluster_strengths(two, MatingCoefficients::uniform(3)));
}

TEST_CASE("mate_synapse_weights") {
  const auto p = toy({1.0, 0.5, -0.25, 0.0, 2.0, 0.0, 0.0, 0.0, 0.3, 0.3, 0.3, 0.3});
  auto q = toy({0.0, 0.5, 0.25, 0.0, 1.0, 0.0, 0.0, 0.0, -0.3, 0.3, 0.1, 0.3});
  q.masks.bits[0][4] = 0;  // stale weight behind a dead mask contributes nothing
  q.weights.biases[0] = {1.0, 0.0, -1.0};

  const std::vector<NetworkGenome> solo{p};
  CHECK(mate_synapse_weights(solo, MatingCoefficients::uniform(1)) == p.weights);

  const std::vector<NetworkGenome> pair{p, q};
  const auto mated = mate_synapse_weights(pair, MatingCoefficients::uniform(2));
  CHECK(mated.weights[0][0] == 0.5);   // (1.0 + dead) / 2
  CHECK(mated.weights[0][1] == 0.5);
  CHECK(mated.weights[0][2] == 0.0);
  CHECK(mated.weights[0][3] == 0.0);   // dead in both
  CHECK(mated.weights[0][4] == 1.0);
  CHECK(mated.weights[0][8] == 0.0);
  CHECK(mated.biases[0] == std::vector<double>{0.5, 0.0, -0.5});

  auto other = make_genome(Shape{1, 1, 5}, {LayerSpec::dense(3, 5)}, 0);
  const std::vector<NetworkGenome> mismatched{p, other};
  CHECK_THROWS_AS(mate_synapse_weights(mismatched, MatingCoefficients::uniform(2)),
                  ArchitectureMismatch);
}

TEST_CASE("mating is invariant to parent order") {
  std::vector<NetworkGenome> parents;
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto g = build_ancestor(s);
    testing::randomize(g, 100 + s, 0.4, 0.3);
    parents.push_back(g);
  }
  const MatingCoefficients coeffs{{0.1, 0.2, 0.3, 0.15, 0.25}, {0.05, 0.4, 0.2, 0.15, 0.2}};
  const auto base = mate_synapse_weights(parents, coeffs);
  std::vector<std::size_t> perm{0, 1, 2, 3, 4};
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    shuffle_indices(perm, rng);
    std::vector<NetworkGenome> shuffled;
    MatingCoefficients c;
    for (std::size_t k : perm) {
      shuffled.push_back(parents[k]);
      c.cluster.push_back(coeffs.cluster[k]);
      c.synapse.push_back(coeffs.synapse[k]);
    }
    CHECK(mate_synapse_weights(shuffled, c) == base);
  }
}

TEST_CASE("drop_probability and survives") {
  CHECK(drop_probability(0.8, 1.0) == 0.0);
  CHECK(drop_probability(0.0, 0.3) == 0.0);
  CHECK(drop_probability(0.7, 0.5) == doctest::Approx(0.35));
  CHECK_THROWS_AS(drop_probability(1.1, 0.5), std::out_of_range);
  CHECK_THROWS_AS(drop_probability(0.5, -0.1), std::out_of_range);
  CHECK(survives(0.7, 0.5, 0.35));
  CHECK_FALSE(survives(0.7, 0.5, 0.3499));
  CHECK_FALSE(survives(1.0, 0.0, 0.9999999));

  // Monte Carlo over the raw test with gamma ~ U[0,1).
  Rng rng(11);
  std::size_t dropped = 0;
  const std::size_t n = 1000000;
  for (std::size_t i = 0; i < n; ++i) dropped += !survives(0.7, 0.5, uniform01(rng));
  CHECK(std::fabs(static_cast<double>(dropped) / n - 0.35) <= 0.002);
}

TEST_CASE("cluster survival sampling") {
  Rng rng(1);
  const std::vector<double> s{0.0, 0.3, 0.9, 1.0};
  CHECK(sample_cluster_survival(s, 0.0, rng) == std::vector<std::uint8_t>{1, 1, 1, 1});
  CHECK(survival_rate(1.0, 0.0, 100000, 2) == 0.0);
  CHECK(std::fabs(survival_rate(0.7, 0.5, 100000, 3) - 0.65) <= 0.005);

  Rng r1(9), r2(9);
  std::vector<double> g1, g2;
  CHECK(sample_cluster_survival(s, 0.9, r1, &g1) == sample_cluster_survival(s, 0.9, r2, &g2));
  CHECK(g1 == g2);
  CHECK(g1.size() == s.size());
}

TEST_CASE("survival law holds within 3 sigma on a 5x5 grid") {
  const std::size_t n = 100000;
  std::uint64_t seed = 50;
  for (double r : {0.0, 0.25, 0.5, 0.75, 1.0})
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double p = 1.0 - r * (1.0 - s);
      const double sigma = std::sqrt(p * (1.0 - p) / n);
      const double rate = survival_rate(r, s, n, ++seed);
      CAPTURE(r);
      CAPTURE(s);
      CHECK(std::fabs(rate - p) <= 3.0 * sigma + 1e-12);
    }
}

TEST_CASE("lower cluster factor keeps more clusters") {
  const std::vector<double> s{0.1, 0.4, 0.7, 1.0, 0.55};
  double low = 0.0, high = 0.0;
  Rng rng(21);
  for (int t = 0; t < 10000; ++t) {
    const auto a = sample_cluster_survival(s, 0.5, rng);
    const auto b = sample_cluster_survival(s, 0.95, rng);
    low += std::accumulate(a.begin(), a.end(), 0.0);
    high += std::accumulate(b.begin(), b.end(), 0.0);
  }
  CHECK(low > high);
}

TEST_CASE("synapse survival sampling") {
  const auto g = toy({0.2, 1.0, 0.5, 0.0, 0.2, 1.0, 0.3, 0.3, 1.0, 1.0, 1.0, 1.0});
  const auto p = partition_clusters(g);
  const auto strengths = synapse_strengths(g.weights, p);
  CHECK(strengths[0][0] == doctest::Approx(0.2));
  CHECK(strengths[0][3] == 0.0);

  Rng rng(4);
  const std::vector<std::uint8_t> clusters{0, 1, 1};
  const auto m = sample_synapse_survival(strengths, g.masks, p, clusters, 0.7, rng);
  for (std::size_t j = 0; j < 4; ++j) CHECK(m.bits[0][j] == 0);  // dead cluster
  CHECK(m.bits[0][5] == 1);                                       // |w_norm| = 1
  for (std::size_t j = 8; j < 12; ++j) CHECK(m.bits[0][j] == 1);

  // |w_norm| = 0.2 at R^s = 0.7 survives with probability 0.44.
  const std::size_t n = 100000;
  auto big = make_genome(Shape{1, 1, 2}, {LayerSpec::dense(n, 2)}, 0);
  for (std::size_t c = 0; c < n; ++c) {
    big.weights.weights[0][2 * c] = 1.0;
    big.weights.weights[0][2 * c + 1] = 0.2;
  }
  const auto bp = partition_clusters(big);
  const std::vector<std::uint8_t> all(n, 1);
  const auto bm = sample_synapse_survival(synapse_strengths(big.weights, bp), big.masks, bp, all, 0.7, rng);
  std::size_t kept = 0;
  for (std::size_t c = 0; c < n; ++c) kept += bm.bits[0][2 * c + 1];
  CHECK(std::fabs(static_cast<double>(kept) / n - 0.44) <= 0.005);
}

TEST_CASE("synthesize_offspring: no pressure keeps the union support") {
  const auto p = toy({1.0, 0.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.3, 0.3, 0.3, 0.3});
  const auto q = toy({0.0, 0.5, 0.25, 0.0, 1.0, 0.0, 0.0, 0.0, -0.3, 0.3, 0.1, 0.3});
  const auto env = EnvironmentModel::constant(0.0, 0.0);
  Rng rng(5);

  const std::vector<NetworkGenome> solo{p};
  const auto one = synthesize_offspring(solo, env, MatingCoefficients::uniform(1), 1, rng);
  CHECK(one.offspring.masks == p.masks);
  CHECK(one.offspring.weights == p.weights);
  CHECK(one.offspring.generation == 1);

  const std::vector<NetworkGenome> pair{p, q};
  const auto two = synthesize_offspring(pair, env, MatingCoefficients::uniform(2), 1, rng);
  const auto mated = mate_synapse_weights(pair, MatingCoefficients::uniform(2));
  for (std::size_t j = 0; j < 12; ++j)
    CHECK(two.offspring.masks.bits[0][j] == (mated.weights[0][j] != 0.0 ? 1 : 0));
  CHECK(two.offspring.masks.bits[0][8] == 0);  // 0.3 and -0.3 cancel
}

TEST_CASE("synthesize_offspring: hierarchy, sparsification, validation") {
  std::vector<NetworkGenome> parents;
  for (std::uint64_t s = 0; s < 3; ++s) {
    auto g = build_ancestor(s);
    testing::randomize(g, 40 + s, 0.4, 0.5);
    g.generation = 2;
    parents.push_back(g);
  }
  const auto env = EnvironmentModel::constant(0.8, 0.7);
  Rng rng(8);
  const auto coeffs = MatingCoefficients::uniform(3);
  const auto out = synthesize_offspring(parents, env, coeffs, 3, rng, SynthesisOptions{true});
  const auto part = partition_clusters(out.offspring);
  const auto mated = mate_synapse_weights(parents, coeffs);
  CHECK(out.offspring.generation == 3);
  CHECK(out.cluster_gammas.size() == part.size());
  CHECK(out.cluster_factor == 0.8);
  std::size_t eligible = 0;
  for (const auto& c : part.clusters)
    for (std::size_t j = c.begin; j < c.end; ++j) {
      const bool alive = out.offspring.masks.bits[c.layer][j];
      if (!out.cluster_alive[c.id]) CHECK_FALSE(alive);
      if (mated.weights[c.layer][j] == 0.0) CHECK_FALSE(alive);
      else ++eligible;
      CHECK(out.offspring.weights.weights[c.layer][j] == (alive ? mated.weights[c.layer][j] : 0.0));
    }
  CHECK(live_synapse_count(out.offspring) <= eligible);
  std::size_t stat_live = 0;
  for (const auto& s : out.layer_stats) stat_live += s.surviving_synapses;
  CHECK(stat_live == live_synapse_count(out.offspring));

  Rng again(8);
  const auto repeat = synthesize_offspring(parents, env, coeffs, 3, again, SynthesisOptions{true});
  CHECK(repeat.offspring == out.offspring);

  const std::vector<NetworkGenome> none;
  CHECK_THROWS(synthesize_offspring(none, env, MatingCoefficients::uniform(1), 1, rng));
  CHECK_THROWS(synthesize_offspring(parents, env, coeffs, 5, rng));
  auto mixed = parents;
  mixed[1].generation = 1;
  CHECK_THROWS(synthesize_offspring(mixed, env, coeffs, 3, rng));
}

TEST_CASE("lineage live count never increases") {
  auto g = build_ancestor(12);
  const auto env = EnvironmentModel::constant(0.9, 0.7);
  Rng rng(12);
  std::size_t previous = live_synapse_count(g);
  for (int gen = 1; gen <= 8; ++gen) {
    const std::vector<NetworkGenome> parent{g};
    g = synthesize_offspring(parent, env, MatingCoefficients::uniform(1), gen, rng).offspring;
    const std::size_t now = live_synapse_count(g);
    CHECK(now <= previous);
    previous = now;
  }
}

TEST_CASE("expected live count after one generation matches closed form") {
  // Cluster means of |w|: 0.5, 0.25, 0.125 -> strengths 1, 0.5, 0.25.
  const auto g = toy({0.8, 0.4, 0.6, 0.2, 0.4, 0.1, 0.3, 0.2, 0.2, 0.05, 0.15, 0.1});
  const double rc = 0.8, rs = 0.7;

  double expected = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0, top = 0.0;
    for (std::size_t j = 4 * c; j < 4 * c + 4; ++j) {
      mean += std::fabs(g.weights.weights[0][j]) / 4.0;
      top = std::max(top, std::fabs(g.weights.weights[0][j]));
    }
    const double cluster_strength = mean / 0.5;
    double synapses = 0.0;
    for (std::size_t j = 4 * c; j < 4 * c + 4; ++j)
      synapses += 1.0 - rs * (1.0 - std::fabs(g.weights.weights[0][j]) / top);
    expected += (1.0 - rc * (1.0 - cluster_strength)) * synapses;
  }

  const auto env = EnvironmentModel::constant(rc, rs);
  const std::vector<NetworkGenome> parent{g};
  Rng rng(77);
  double total = 0.0;
  const int runs = 10000;
  for (int r = 0; r < runs; ++r)
    total += static_cast<double>(live(
        synthesize_offspring(parent, env, MatingCoefficients::uniform(1), 1, rng).offspring.masks));
  CHECK(std::fabs(total / runs - expected) / expected <= 0.02);
}
