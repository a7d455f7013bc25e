#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "edi/dataio.hpp"
#include "edi/genome.hpp"
#include "edi/network.hpp"
#include "edi/records.hpp"

namespace edi {

struct ExperimentConfig {
  std::vector<int> parent_counts{1};
  std::vector<double> cluster_factors{0.50, 0.55, 0.60, 0.65, 0.70,
                                      0.75, 0.80, 0.85, 0.90, 0.95};
  double synapse_factor = 0.70;
  int generations = 60;
  /// Networks synthesized per generation; 0 means max(m, 1).
  int population = 0;
  TrainBudget ancestor_budget;
  TrainBudget retrain_budget;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  std::filesystem::path data_dir = "data/mnist";
  double train_fraction = 0.1;
  /// Evaluate on the first N test items; 0 means the full test split.
  std::size_t test_limit = 0;
  int workers = 1;
  bool persist_genomes = true;
  bool record_gammas = false;

  int population_for(int m) const;
  /// Throws std::invalid_argument on the first violated constraint.
  void validate() const;
};

std::string config_to_json(const ExperimentConfig& config);
/// Fields absent from `json` keep their value from `base`.
ExperimentConfig config_from_json(const std::string& json, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

struct ExperimentData {
  Dataset train;  ///< stratified subset of the training split
  Dataset test;
};

/// Loads MNIST from config.data_dir, subsets the training split, trims the test split.
ExperimentData load_experiment_data(const ExperimentConfig& config);

/// Trained ancestors 0..count-1. With an output_dir they are cached under
/// output_dir/ancestors and reused when the cached training settings match.
struct AncestorPool {
  std::vector<NetworkGenome> genomes;
  std::vector<double> accuracy;
  std::size_t trained = 0;  ///< how many were trained rather than loaded
};
AncestorPool obtain_ancestors(const ExperimentConfig& config, const ExperimentData& data,
                              std::size_t count);

struct LineageHooks {
  /// Called after each record; return false to stop the lineage early.
  std::function<bool(const GenerationRecord&)> keep_going;
  /// Where genomes and diagnostics go; empty disables persistence.
  std::filesystem::path cell_dir;
  /// Pre-trained ancestors (at least population_for(m)); trained on demand if null.
  const AncestorPool* ancestors = nullptr;
};

/// Generation 0 is the trained ancestor population; every later generation
/// synthesizes `population` offspring from m parents drawn uniformly without
/// replacement from the previous generation, retrains them and records
/// offspring 0. Stops at config.generations or when offspring 0 is degenerate.
std::vector<GenerationRecord> run_lineage(const ExperimentConfig& config, int m,
                                          double cluster_factor, const ExperimentData& data,
                                          const LineageHooks& hooks = {});

enum class CellStatus { completed, resumed, failed };

struct CellResult {
  int parent_count = 1;
  double cluster_factor = 0.0;
  CellStatus status = CellStatus::completed;
  std::string error;
  std::uint64_t seed = 0;
  std::vector<GenerationRecord> records;
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<CellResult> cells;  ///< m-major, then cluster factor, in config order
  std::size_t ancestors_trained = 0;
  std::size_t lineages_run = 0;   ///< cells executed in this call (not resumed)

  /// Every record of every non-failed cell, in cell order.
  std::vector<GenerationRecord> all_records() const;
};

/// Seed for the lineage of cell (m, cluster_factor).
std::uint64_t cell_seed(std::uint64_t master, int m, double cluster_factor);
std::string cell_name(int m, double cluster_factor);

/// One lineage per (m, cluster factor). With an output_dir, completed cells
/// are skipped on rerun and their records loaded from disk.
using SweepProgress = std::function<void(int m, double cluster_factor, const GenerationRecord&)>;
SweepResult run_sweep(const ExperimentConfig& config, const ExperimentData& data,
                      const SweepProgress& progress = {});
SweepResult run_sweep(const ExperimentConfig& config, const SweepProgress& progress = {});

/// Rebuilds a SweepResult from a sweep output directory.
SweepResult load_sweep(const std::filesystem::path& dir);

void export_csv(const SweepResult& result, const std::filesystem::path& path,
                const CsvOptions& options = {});

}  // namespace edi
