#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "edi/harness.hpp"
#include "edi/plots.hpp"

namespace fs = std::filesystem;
using namespace edi;

namespace {

// Flag values are kept apart from the config so that a --config file can be
// applied first and only flags actually given on the command line override it.
struct BudgetFlags {
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> learning_rate;
  std::optional<double> lr_decay;
  std::optional<int> decay_every;

  void add(CLI::App& app, const std::string& prefix, const std::string& what) {
    app.add_option("--" + prefix + "-epochs", epochs, what + " epochs")->check(CLI::NonNegativeNumber);
    app.add_option("--" + prefix + "-batch", batch_size, what + " minibatch size")->check(CLI::PositiveNumber);
    app.add_option("--" + prefix + "-lr", learning_rate, what + " initial learning rate")
        ->check(CLI::PositiveNumber);
    app.add_option("--" + prefix + "-lr-decay", lr_decay, what + " learning-rate decay factor")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--" + prefix + "-decay-every", decay_every, what + " epochs between decays")
        ->check(CLI::PositiveNumber);
  }

  void apply(TrainBudget& b) const {
    if (epochs) b.epochs = *epochs;
    if (batch_size) b.batch_size = *batch_size;
    if (learning_rate) b.learning_rate = *learning_rate;
    if (lr_decay) b.lr_decay = *lr_decay;
    if (decay_every) b.decay_every = *decay_every;
  }
};

struct ConfigFlags {
  std::string config_file;
  std::vector<int> parent_counts;
  std::vector<double> cluster_factors;
  std::optional<double> synapse_factor;
  std::optional<int> generations;
  std::optional<int> population;
  BudgetFlags ancestor;
  BudgetFlags retrain;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> data_dir;
  std::optional<double> train_fraction;
  std::optional<std::size_t> test_limit;
  std::optional<int> workers;
  std::optional<bool> persist_genomes;
  std::optional<bool> record_gammas;

  void add(CLI::App& app) {
    app.add_option("--config", config_file, "JSON config file; flags override its values")
        ->check(CLI::ExistingFile);
    app.add_option("--m", parent_counts, "parent count(s) m")->check(CLI::PositiveNumber);
    app.add_option("--rc", cluster_factors, "cluster-level environmental factor(s) in [0,1]")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--rs", synapse_factor, "synapse-level environmental factor in [0,1]")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--generations", generations, "generation limit")->check(CLI::NonNegativeNumber);
    app.add_option("--population", population, "networks per generation (0: max(m,1))")
        ->check(CLI::NonNegativeNumber);
    ancestor.add(app, "ancestor", "ancestor training");
    retrain.add(app, "retrain", "per-generation retraining");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", output_dir, "output directory");
    app.add_option("--data", data_dir, "directory with the MNIST IDX files");
    app.add_option("--train-fraction", train_fraction, "stratified training subset fraction")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--test-limit", test_limit, "evaluate on the first N test items (0: all)");
    app.add_option("--workers", workers, "concurrent sweep cells")->check(CLI::PositiveNumber);
    app.add_flag("--persist-genomes,!--no-persist-genomes", persist_genomes,
                 "write every synthesized genome to disk");
    app.add_flag("--record-gammas,!--no-record-gammas", record_gammas,
                 "store per-cluster survival draws in the diagnostics");
  }

  ExperimentConfig build() const {
    ExperimentConfig c;
    c.output_dir = "out";
    if (!config_file.empty()) c = load_config(config_file, c);
    if (!parent_counts.empty()) c.parent_counts = parent_counts;
    if (!cluster_factors.empty()) c.cluster_factors = cluster_factors;
    if (synapse_factor) c.synapse_factor = *synapse_factor;
    if (generations) c.generations = *generations;
    if (population) c.population = *population;
    ancestor.apply(c.ancestor_budget);
    retrain.apply(c.retrain_budget);
    if (seed) c.seed = *seed;
    if (output_dir) c.output_dir = *output_dir;
    if (data_dir) c.data_dir = *data_dir;
    if (train_fraction) c.train_fraction = *train_fraction;
    if (test_limit) c.test_limit = *test_limit;
    if (workers) c.workers = *workers;
    if (persist_genomes) c.persist_genomes = *persist_genomes;
    if (record_gammas) c.record_gammas = *record_gammas;
    c.validate();
    c.ancestor_budget.validate();
    c.retrain_budget.validate();
    return c;
  }
};

void print_record(const GenerationRecord& r) {
  std::printf("m=%d rc=%.2f gen %3d  acc %.4f  live %7zu  bytes %7zu%s\n", r.parent_count,
              r.cluster_factor, r.generation, r.accuracy, r.live_synapses, r.storage_bytes,
              r.degenerate ? "  (degenerate)" : "");
  std::fflush(stdout);
}

int train_ancestor(const ConfigFlags& flags, std::size_t count) {
  const auto config = flags.build();
  const auto data = load_experiment_data(config);
  std::printf("training on %zu items, evaluating on %zu\n", data.train.size(), data.test.size());
  const auto pool = obtain_ancestors(config, data, count);
  for (std::size_t k = 0; k < pool.genomes.size(); ++k)
    std::printf("ancestor %zu: test accuracy %.4f\n", k, pool.accuracy[k]);
  std::printf("%zu trained, %zu loaded from %s\n", pool.trained, pool.genomes.size() - pool.trained,
              (config.output_dir / "ancestors").string().c_str());
  return 0;
}

int evolve(const ConfigFlags& flags) {
  auto config = flags.build();
  if (config.parent_counts.size() != 1 || config.cluster_factors.size() != 1)
    throw CLI::ValidationError("evolve runs one lineage: give exactly one --m and one --rc");
  const int m = config.parent_counts[0];
  const double rc = config.cluster_factors[0];
  const auto data = load_experiment_data(config);
  fs::create_directories(config.output_dir);

  LineageHooks hooks;
  hooks.cell_dir = config.output_dir / "lineage";
  hooks.keep_going = [](const GenerationRecord& r) {
    print_record(r);
    return true;
  };
  const auto records = run_lineage(config, m, rc, data, hooks);
  const fs::path csv = config.output_dir / "records.csv";
  write_csv(records, csv, CsvOptions{true});
  std::printf("%zu records written to %s\n", records.size(), csv.string().c_str());
  return 0;
}

int sweep(const ConfigFlags& flags) {
  if (!flags.seed)
    throw CLI::ValidationError(
        "sweep requires --seed: every sweep must be reproducible from an explicit master seed");
  const auto config = flags.build();
  const auto result = run_sweep(config, [](int, double, const GenerationRecord& r) { print_record(r); });
  export_csv(result, config.output_dir / "results.csv");
  int failed = 0, resumed = 0;
  for (const auto& cell : result.cells) {
    if (cell.status == CellStatus::resumed) ++resumed;
    if (cell.status == CellStatus::failed) {
      ++failed;
      std::fprintf(stderr, "cell %s failed: %s\n",
                   cell_name(cell.parent_count, cell.cluster_factor).c_str(), cell.error.c_str());
    }
  }
  std::printf("%zu cells (%zu run, %d resumed, %d failed); results in %s\n", result.cells.size(),
              result.lineages_run, resumed, failed,
              config.output_dir.string().c_str());
  return failed ? 2 : 0;
}

int report(const fs::path& dir, bool wall_time) {
  const auto result = load_sweep(dir);
  const fs::path csv = dir / "results.csv";
  export_csv(result, csv, CsvOptions{wall_time});
  const auto plots = emit_plots(result, dir / "plots");
  std::printf("wrote %s and %zu plots under %s\n", csv.string().c_str(), plots.size(),
              (dir / "plots").string().c_str());
  for (const auto& cell : result.cells)
    if (cell.status == CellStatus::failed)
      std::fprintf(stderr, "cell %s missing: %s\n",
                   cell_name(cell.parent_count, cell.cluster_factor).c_str(), cell.error.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary synthesis of sparse LeNet-5 networks under environmental factor models"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  ConfigFlags ancestor_flags, evolve_flags, sweep_flags;
  std::size_t ancestor_count = 1;
  auto* train_cmd = app.add_subcommand("train-ancestor", "train (or load cached) ancestor networks");
  ancestor_flags.add(*train_cmd);
  train_cmd->add_option("--count", ancestor_count, "number of ancestors")->check(CLI::PositiveNumber);

  auto* evolve_cmd = app.add_subcommand("evolve", "run one lineage and write records.csv");
  evolve_flags.add(*evolve_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "run one lineage per (m, rc) cell");
  sweep_flags.add(*sweep_cmd);

  std::string report_dir;
  bool report_wall_time = false;
  auto* report_cmd = app.add_subcommand("report", "write results.csv and plots from a sweep directory");
  report_cmd->add_option("dir", report_dir, "sweep output directory")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_flag("--wall-time", report_wall_time, "include the train_seconds column");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return train_ancestor(ancestor_flags, ancestor_count);
    if (*evolve_cmd) return evolve(evolve_flags);
    if (*sweep_cmd) return sweep(sweep_flags);
    if (*report_cmd) return report(report_dir, report_wall_time);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
