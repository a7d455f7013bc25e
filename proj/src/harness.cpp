#include "edi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "edi/rng.hpp"
#include "edi/serialize.hpp"
#include "edi/synthesis.hpp"

namespace edi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kDataStream = 0xDA7A;
constexpr std::uint64_t kAncestorInitStream = 0xA11CE0;
constexpr std::uint64_t kAncestorTrainStream = 0xA11CE1;
constexpr std::uint64_t kRetrainStream = 0x7E7A1;

json budget_to_json(const TrainBudget& b) {
  return {{"epochs", b.epochs},
          {"batch_size", b.batch_size},
          {"learning_rate", b.learning_rate},
          {"lr_decay", b.lr_decay},
          {"decay_every", b.decay_every}};
}

TrainBudget budget_from_json(const json& j, TrainBudget b) {
  b.epochs = j.value("epochs", b.epochs);
  b.batch_size = j.value("batch_size", b.batch_size);
  b.learning_rate = j.value("learning_rate", b.learning_rate);
  b.lr_decay = j.value("lr_decay", b.lr_decay);
  b.decay_every = j.value("decay_every", b.decay_every);
  return b;
}

json config_json(const ExperimentConfig& c) {
  return {{"parent_counts", c.parent_counts},
          {"cluster_factors", c.cluster_factors},
          {"synapse_factor", c.synapse_factor},
          {"generations", c.generations},
          {"population", c.population},
          {"ancestor_budget", budget_to_json(c.ancestor_budget)},
          {"retrain_budget", budget_to_json(c.retrain_budget)},
          {"seed", c.seed},
          {"output_dir", c.output_dir.string()},
          {"data_dir", c.data_dir.string()},
          {"train_fraction", c.train_fraction},
          {"test_limit", c.test_limit},
          {"workers", c.workers},
          {"persist_genomes", c.persist_genomes},
          {"record_gammas", c.record_gammas}};
}

// Settings that determine a cell's records; output location and worker count do not.
json lineage_fingerprint(const ExperimentConfig& c, int m, double rc) {
  return {{"m", m},
          {"cluster_factor", rc},
          {"synapse_factor", c.synapse_factor},
          {"generations", c.generations},
          {"population", c.population_for(m)},
          {"ancestor_budget", budget_to_json(c.ancestor_budget)},
          {"retrain_budget", budget_to_json(c.retrain_budget)},
          {"seed", c.seed},
          {"train_fraction", c.train_fraction},
          {"test_limit", c.test_limit}};
}

json ancestor_fingerprint(const ExperimentConfig& c, std::size_t index, const ExperimentData& d) {
  return {{"index", index},
          {"seed", c.seed},
          {"budget", budget_to_json(c.ancestor_budget)},
          {"train_fraction", c.train_fraction},
          {"train_items", d.train.size()}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string offspring_id(int generation, std::size_t index) {
  return "g" + std::to_string(generation) + "o" + std::to_string(index);
}

json diagnostics_json(const SynthesisOutcome& outcome, const std::string& id,
                      const std::vector<std::string>& parent_ids, bool diverged,
                      const std::string& divergence) {
  json layers = json::array();
  for (const auto& s : outcome.layer_stats) {
    const double drop_rate =
        s.clusters ? static_cast<double>(s.clusters_dropped) / static_cast<double>(s.clusters) : 0.0;
    const double synapse_drop =
        s.eligible_synapses
            ? 1.0 - static_cast<double>(s.surviving_synapses) / static_cast<double>(s.eligible_synapses)
            : 0.0;
    layers.push_back({{"layer", s.layer},
                      {"clusters", s.clusters},
                      {"clusters_dropped", s.clusters_dropped},
                      {"cluster_drop_rate", drop_rate},
                      {"eligible_synapses", s.eligible_synapses},
                      {"surviving_synapses", s.surviving_synapses},
                      {"synapse_drop_rate", synapse_drop}});
  }
  json j = {{"offspring_id", id},
            {"generation", outcome.offspring.generation},
            {"parents", parent_ids},
            {"cluster_factor", outcome.cluster_factor},
            {"synapse_factor", outcome.synapse_factor},
            {"layers", layers},
            {"diverged", diverged}};
  if (diverged) j["divergence"] = divergence;
  if (!outcome.cluster_gammas.empty()) j["cluster_gammas"] = outcome.cluster_gammas;
  return j;
}

}  // namespace

int ExperimentConfig::population_for(int m) const {
  return population > 0 ? population : std::max(m, 1);
}

void ExperimentConfig::validate() const {
  if (parent_counts.empty()) throw std::invalid_argument("config: no parent counts");
  for (int m : parent_counts) {
    if (m < 1) throw std::invalid_argument("config: parent count must be >= 1");
    if (population_for(m) < m)
      throw std::invalid_argument("config: population " + std::to_string(population_for(m)) +
                                  " is smaller than m = " + std::to_string(m));
  }
  if (cluster_factors.empty()) throw std::invalid_argument("config: empty cluster factor grid");
  for (double r : cluster_factors)
    if (!(r >= 0.0 && r <= 1.0))
      throw std::invalid_argument("config: cluster factor outside [0,1]");
  if (!(synapse_factor >= 0.0 && synapse_factor <= 1.0))
    throw std::invalid_argument("config: synapse factor outside [0,1]");
  if (generations < 0) throw std::invalid_argument("config: generations must be >= 0");
  if (population < 0) throw std::invalid_argument("config: population must be >= 0");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw std::invalid_argument("config: train fraction must be in (0,1]");
  if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
  ancestor_budget.validate();
  retrain_budget.validate();
}

std::string config_to_json(const ExperimentConfig& config) {
  return config_json(config).dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text, ExperimentConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  static const std::vector<std::string> known{
      "parent_counts", "cluster_factors", "synapse_factor", "generations", "population",
      "ancestor_budget", "retrain_budget", "seed", "output_dir", "data_dir", "train_fraction",
      "test_limit", "workers", "persist_genomes", "record_gammas"};
  for (const auto& item : j.items())
    if (std::find(known.begin(), known.end(), item.key()) == known.end())
      throw std::invalid_argument("config: unknown key '" + item.key() + "'");
  try {
    c.parent_counts = j.value("parent_counts", c.parent_counts);
    c.cluster_factors = j.value("cluster_factors", c.cluster_factors);
    c.synapse_factor = j.value("synapse_factor", c.synapse_factor);
    c.generations = j.value("generations", c.generations);
    c.population = j.value("population", c.population);
    if (j.contains("ancestor_budget"))
      c.ancestor_budget = budget_from_json(j["ancestor_budget"], c.ancestor_budget);
    if (j.contains("retrain_budget"))
      c.retrain_budget = budget_from_json(j["retrain_budget"], c.retrain_budget);
    c.seed = j.value("seed", c.seed);
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("data_dir")) c.data_dir = j["data_dir"].get<std::string>();
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.test_limit = j.value("test_limit", c.test_limit);
    c.workers = j.value("workers", c.workers);
    c.persist_genomes = j.value("persist_genomes", c.persist_genomes);
    c.record_gammas = j.value("record_gammas", c.record_gammas);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path, ExperimentConfig base) {
  return config_from_json(read_text(path), std::move(base));
}

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  const auto paths = mnist_paths(config.data_dir);
  ExperimentData data;
  const Dataset full_train = load_idx(paths.train_images, paths.train_labels, Split::train);
  data.train = stratified_subset(full_train, config.train_fraction,
                                 derive_seed(config.seed, kDataStream));
  data.test = load_idx(paths.test_images, paths.test_labels, Split::test);
  if (config.test_limit > 0 && config.test_limit < data.test.size()) {
    std::vector<std::size_t> first(config.test_limit);
    std::iota(first.begin(), first.end(), std::size_t{0});
    data.test = take_indices(data.test, first);
  }
  return data;
}

AncestorPool obtain_ancestors(const ExperimentConfig& config, const ExperimentData& data,
                              std::size_t count) {
  AncestorPool pool;
  const bool cache = !config.output_dir.empty();
  const fs::path dir = config.output_dir / "ancestors";
  if (cache) fs::create_directories(dir);
  for (std::size_t k = 0; k < count; ++k) {
    const json fingerprint = ancestor_fingerprint(config, k, data);
    const fs::path genome_path = dir / ("ancestor_" + std::to_string(k) + ".edg");
    const fs::path meta_path = dir / ("ancestor_" + std::to_string(k) + ".json");
    if (cache && fs::exists(genome_path) && fs::exists(meta_path)) {
      const json meta = json::parse(read_text(meta_path));
      if (meta.value("fingerprint", json{}) == fingerprint) {
        pool.genomes.push_back(load_genome(genome_path));
        // The cached accuracy is only valid for the test set it was measured on.
        if (meta.value("test_items", std::size_t{0}) == data.test.size())
          pool.accuracy.push_back(meta.at("accuracy").get<double>());
        else
          pool.accuracy.push_back(evaluate(pool.genomes.back(), data.test));
        continue;
      }
    }
    NetworkGenome seed_genome = build_ancestor(derive_seed(config.seed, kAncestorInitStream, k));
    seed_genome.lineage_id = "a" + std::to_string(k);
    auto trained = train(std::move(seed_genome), data.train, config.ancestor_budget,
                         derive_seed(config.seed, kAncestorTrainStream, k));
    const double acc = evaluate(trained.genome, data.test);
    ++pool.trained;
    if (cache) {
      save_genome(trained.genome, genome_path);
      write_text(meta_path, json{{"fingerprint", fingerprint},
                                 {"accuracy", acc},
                                 {"test_items", data.test.size()},
                                 {"train_seconds", trained.seconds},
                                 {"loss_history", trained.loss_history}}
                                .dump(2));
    }
    pool.genomes.push_back(std::move(trained.genome));
    pool.accuracy.push_back(acc);
  }
  return pool;
}

std::vector<GenerationRecord> run_lineage(const ExperimentConfig& config, int m,
                                          double cluster_factor, const ExperimentData& data,
                                          const LineageHooks& hooks) {
  config.validate();
  if (m < 1) throw std::invalid_argument("run_lineage: m must be >= 1");
  if (!(cluster_factor >= 0.0 && cluster_factor <= 1.0))
    throw std::invalid_argument("run_lineage: cluster factor outside [0,1]");
  const std::size_t population_size = static_cast<std::size_t>(config.population_for(m));
  if (population_size < static_cast<std::size_t>(m))
    throw std::invalid_argument("run_lineage: population smaller than m");

  AncestorPool local;
  const AncestorPool* pool = hooks.ancestors;
  if (!pool || pool->genomes.size() < population_size) {
    local = obtain_ancestors(config, data, population_size);
    pool = &local;
  }

  const bool persist = !hooks.cell_dir.empty();
  const fs::path genome_dir = hooks.cell_dir / "genomes";
  const fs::path diag_dir = hooks.cell_dir / "diagnostics";
  if (persist) {
    if (config.persist_genomes) fs::create_directories(genome_dir);
    fs::create_directories(diag_dir);
  }

  const EnvironmentModel env = EnvironmentModel::constant(cluster_factor, config.synapse_factor);
  const std::uint64_t seed = cell_seed(config.seed, m, cluster_factor);

  std::vector<NetworkGenome> population(pool->genomes.begin(),
                                        pool->genomes.begin() + static_cast<std::ptrdiff_t>(population_size));
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < population_size; ++k) {
    ids.push_back(offspring_id(0, k));
    if (persist && config.persist_genomes)
      write_bytes(genome_dir / (ids.back() + ".edsp"), encode_sparse(population[k]));
  }

  std::vector<GenerationRecord> records;
  auto emit = [&](GenerationRecord r) {
    records.push_back(std::move(r));
    return !hooks.keep_going || hooks.keep_going(records.back());
  };

  {
    const auto storage = storage_size(population[0]);
    GenerationRecord r;
    r.parent_count = m;
    r.cluster_factor = cluster_factor;
    r.synapse_factor = config.synapse_factor;
    r.generation = 0;
    r.offspring_id = ids[0];
    r.accuracy = pool->accuracy[0];
    r.live_synapses = storage.live_synapses;
    r.storage_bytes = storage.bytes;
    r.degenerate = is_degenerate(population[0]);
    if (!emit(r) || r.degenerate) return records;
  }

  std::uint64_t work = 0;
  double seconds = 0.0;
  for (int g = 1; g <= config.generations; ++g) {
    std::vector<NetworkGenome> next;
    std::vector<std::string> next_ids;
    std::string representative_parents;
    std::size_t representative_bytes = 0;

    const std::size_t mates = std::min(static_cast<std::size_t>(m), population.size());
    const MatingCoefficients coeffs = MatingCoefficients::uniform(mates);
    for (std::size_t o = 0; o < population_size; ++o) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(g), o));
      // Parent choice depends on the rng stream only.
      std::vector<std::size_t> order(population.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = 0; i < mates; ++i)
        std::swap(order[i], order[i + uniform_index(rng, order.size() - i)]);
      std::vector<NetworkGenome> parents;
      std::vector<std::string> parent_ids;
      for (std::size_t i = 0; i < mates; ++i) {
        parents.push_back(population[order[i]]);
        parent_ids.push_back(ids[order[i]]);
      }

      SynthesisOutcome outcome = synthesize_offspring(parents, env, coeffs, g, rng,
                                                      SynthesisOptions{config.record_gammas});
      const std::string id = offspring_id(g, o);
      const auto storage = storage_size(outcome.offspring);
      bool diverged = false;
      std::string divergence;
      NetworkGenome trained;
      try {
        auto result = train(outcome.offspring, data.train, config.retrain_budget,
                            derive_seed(seed ^ kRetrainStream, static_cast<std::uint64_t>(g), o));
        work += result.work;
        seconds += result.seconds;
        trained = std::move(result.genome);
      } catch (const TrainingDiverged& e) {
        diverged = true;
        divergence = e.what();
      }
      if (persist) {
        write_text(diag_dir / (id + ".json"),
                   diagnostics_json(outcome, id, parent_ids, diverged, divergence).dump(2));
        if (config.persist_genomes && !diverged)
          write_bytes(genome_dir / (id + ".edsp"), encode_sparse(trained));
      }
      if (diverged) continue;
      if (next.empty()) {
        std::ostringstream joined;
        for (std::size_t i = 0; i < parent_ids.size(); ++i) joined << (i ? ";" : "") << parent_ids[i];
        representative_parents = joined.str();
        representative_bytes = storage.bytes;
      }
      next.push_back(std::move(trained));
      next_ids.push_back(id);
    }
    if (next.empty())
      throw std::runtime_error("every offspring of generation " + std::to_string(g) + " diverged");

    const NetworkGenome& rep = next[0];
    GenerationRecord r;
    r.parent_count = m;
    r.cluster_factor = cluster_factor;
    r.synapse_factor = config.synapse_factor;
    r.generation = g;
    r.offspring_id = next_ids[0];
    r.parent_ids = representative_parents;
    r.accuracy = evaluate(rep, data.test);
    r.live_synapses = live_synapse_count(rep);
    r.storage_bytes = representative_bytes;
    r.train_work = work;
    r.train_seconds = seconds;
    r.degenerate = is_degenerate(rep);
    population = std::move(next);
    ids = std::move(next_ids);
    if (!emit(r) || r.degenerate) break;
  }
  return records;
}

std::uint64_t cell_seed(std::uint64_t master, int m, double cluster_factor) {
  return derive_seed(master, static_cast<std::uint64_t>(m),
                     static_cast<std::uint64_t>(std::llround(cluster_factor * 10000.0)));
}

std::string cell_name(int m, double cluster_factor) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "m%d_rc%04lld", m, std::llround(cluster_factor * 1000.0));
  return buf;
}

std::vector<GenerationRecord> SweepResult::all_records() const {
  std::vector<GenerationRecord> out;
  for (const auto& cell : cells)
    if (cell.status != CellStatus::failed) out.insert(out.end(), cell.records.begin(), cell.records.end());
  return out;
}

SweepResult run_sweep(const ExperimentConfig& config, const ExperimentData& data,
                      const SweepProgress& progress) {
  config.validate();
  SweepResult result;
  result.config = config;
  const bool persist = !config.output_dir.empty();
  if (persist) {
    fs::create_directories(config.output_dir / "cells");
    write_text(config.output_dir / "config.json", config_to_json(config));
  }

  std::vector<std::size_t> pending;
  for (int m : config.parent_counts)
    for (double rc : config.cluster_factors) {
      CellResult cell;
      cell.parent_count = m;
      cell.cluster_factor = rc;
      cell.seed = cell_seed(config.seed, m, rc);
      bool resumed = false;
      if (persist) {
        const fs::path dir = config.output_dir / "cells" / cell_name(m, rc);
        const fs::path marker = dir / "complete.json";
        if (fs::exists(marker) && fs::exists(dir / "records.csv")) {
          const json meta = json::parse(read_text(marker));
          if (meta.value("fingerprint", json{}) == lineage_fingerprint(config, m, rc)) {
            cell.records = read_csv(dir / "records.csv");
            cell.status = CellStatus::resumed;
            resumed = true;
          }
        }
      }
      if (!resumed) pending.push_back(result.cells.size());
      result.cells.push_back(std::move(cell));
    }
  if (pending.empty()) return result;

  std::size_t max_population = 0;
  for (int m : config.parent_counts)
    max_population = std::max(max_population, static_cast<std::size_t>(config.population_for(m)));
  const AncestorPool pool = obtain_ancestors(config, data, max_population);
  result.ancestors_trained = pool.trained;

  std::mutex progress_mutex;
  std::atomic<std::size_t> next_job{0};
  auto worker = [&] {
    for (std::size_t job = next_job++; job < pending.size(); job = next_job++) {
      CellResult& cell = result.cells[pending[job]];
      const fs::path dir =
          persist ? config.output_dir / "cells" / cell_name(cell.parent_count, cell.cluster_factor)
                  : fs::path{};
      try {
        if (persist) {
          fs::create_directories(dir);
          fs::remove(dir / "complete.json");
        }
        LineageHooks hooks;
        hooks.cell_dir = dir;
        hooks.ancestors = &pool;
        if (progress)
          hooks.keep_going = [&](const GenerationRecord& r) {
            std::lock_guard lock(progress_mutex);
            progress(cell.parent_count, cell.cluster_factor, r);
            return true;
          };
        cell.records = run_lineage(config, cell.parent_count, cell.cluster_factor, data, hooks);
        cell.status = CellStatus::completed;
        if (persist) {
          write_csv(cell.records, dir / "records.csv", CsvOptions{true});
          write_text(dir / "complete.json",
                     json{{"fingerprint",
                           lineage_fingerprint(config, cell.parent_count, cell.cluster_factor)}}
                         .dump(2));
        }
      } catch (const std::exception& e) {
        cell.status = CellStatus::failed;
        cell.error = e.what();
        cell.records.clear();
        if (persist) {
          try {
            write_text(dir / "failed.txt", cell.error + "\n");
          } catch (const std::exception&) {
            // the cell directory itself is unusable; the error stays in the result
          }
        }
      }
    }
  };
  const std::size_t threads =
      std::min(pending.size(), static_cast<std::size_t>(std::max(config.workers, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    for (std::size_t t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
    for (auto& t : pool_threads) t.join();
  }
  result.lineages_run = pending.size();
  return result;
}

SweepResult run_sweep(const ExperimentConfig& config, const SweepProgress& progress) {
  config.validate();
  return run_sweep(config, load_experiment_data(config), progress);
}

SweepResult load_sweep(const fs::path& dir) {
  SweepResult result;
  result.config = load_config(dir / "config.json");
  result.config.output_dir = dir;
  for (int m : result.config.parent_counts)
    for (double rc : result.config.cluster_factors) {
      CellResult cell;
      cell.parent_count = m;
      cell.cluster_factor = rc;
      cell.seed = cell_seed(result.config.seed, m, rc);
      const fs::path cell_dir = dir / "cells" / cell_name(m, rc);
      if (fs::exists(cell_dir / "complete.json") && fs::exists(cell_dir / "records.csv")) {
        cell.records = read_csv(cell_dir / "records.csv");
        cell.status = CellStatus::resumed;
      } else {
        cell.status = CellStatus::failed;
        cell.error = fs::exists(cell_dir / "failed.txt") ? read_text(cell_dir / "failed.txt")
                                                         : "cell not completed";
      }
      result.cells.push_back(std::move(cell));
    }
  return result;
}

void export_csv(const SweepResult& result, const fs::path& path, const CsvOptions& options) {
  write_csv(result.all_records(), path, options);
}

}  // namespace edi
