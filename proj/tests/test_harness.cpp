#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "edi/harness.hpp"
#include "edi/plots.hpp"
#include "test_support.hpp"

using namespace edi;
namespace fs = std::filesystem;

namespace {

const fs::path& data_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "edi_harness_mnist";
    fs::remove_all(d);
    testing::write_synthetic_mnist(d, 12, 6, 42);
    return d;
  }();
  return dir;
}

ExperimentConfig tiny_config(const std::string& out) {
  ExperimentConfig c;
  c.data_dir = data_dir();
  c.output_dir = out.empty() ? fs::path{} : fs::temp_directory_path() / out;
  if (!out.empty()) fs::remove_all(c.output_dir);
  c.train_fraction = 1.0;
  c.parent_counts = {1};
  c.cluster_factors = {0.5};
  c.generations = 2;
  c.seed = 7;
  c.ancestor_budget.epochs = 2;
  c.ancestor_budget.batch_size = 16;
  c.retrain_budget.epochs = 1;
  c.retrain_budget.batch_size = 16;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

GenerationRecord sample_record(int g) {
  GenerationRecord r;
  r.parent_count = 2;
  r.cluster_factor = 0.55;
  r.synapse_factor = 0.7;
  r.generation = g;
  r.offspring_id = "g" + std::to_string(g) + "o0";
  r.parent_ids = g ? "g" + std::to_string(g - 1) + "o1;g" + std::to_string(g - 1) + "o0" : "";
  r.accuracy = 0.1 + 1.0 / 3.0 + g * 1e-17;
  r.live_synapses = 61470u >> g;
  r.storage_bytes = 492870u >> g;
  r.train_work = 123456789012345ull * static_cast<std::uint64_t>(g);
  r.train_seconds = 0.1 * g;
  r.degenerate = g == 2;
  return r;
}

}  // namespace

TEST_CASE("config validation and JSON round trip") {
  ExperimentConfig c = tiny_config("");
  CHECK_NOTHROW(c.validate());
  CHECK(ExperimentConfig{}.population_for(5) == 5);
  CHECK(ExperimentConfig{}.cluster_factors.size() == 10);
  CHECK(ExperimentConfig{}.synapse_factor == 0.70);
  CHECK(ExperimentConfig{}.generations == 60);

  c.parent_counts = {1, 3};
  c.population = 2;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.population = 0;
  c.cluster_factors = {0.5, 1.2};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  const auto base = tiny_config("");
  const auto back = config_from_json(config_to_json(base));
  CHECK(config_to_json(back) == config_to_json(base));
  const auto partial = config_from_json(R"({"generations": 9, "cluster_factors": [0.6]})", base);
  CHECK(partial.generations == 9);
  CHECK(partial.cluster_factors == std::vector<double>{0.6});
  CHECK(partial.seed == base.seed);
  CHECK_THROWS_AS(config_from_json(R"({"generation": 9})"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("[1]"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{"), std::invalid_argument);
}

TEST_CASE("CSV export") {
  CHECK(to_csv({}) ==
        "parent_count,cluster_factor,synapse_factor,generation,offspring_id,parent_ids,accuracy,"
        "live_synapses,storage_bytes,train_work,degenerate\n");
  const std::vector<GenerationRecord> recs{sample_record(0), sample_record(1), sample_record(2)};
  const auto text = to_csv(recs);
  CHECK(count_of(text, "\n") == 4);

  auto without_seconds = recs;
  for (auto& r : without_seconds) r.train_seconds = 0.0;
  CHECK(parse_csv(text) == without_seconds);
  CHECK(parse_csv(to_csv(recs, CsvOptions{true})) == recs);

  const auto path = fs::temp_directory_path() / "edi_records.csv";
  write_csv(recs, path);
  CHECK(read_csv(path) == without_seconds);
  fs::remove(path);
  CHECK_THROWS(write_csv(recs, fs::temp_directory_path() / "edi_no_dir" / "x" / "r.csv"));
  CHECK_THROWS(parse_csv("bogus,header\n1,2\n"));

  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, -0.0})
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("log axis") {
  const auto axis = log_axis_for(600.0, 492870.0);
  CHECK(axis.low_exponent == 2);
  CHECK(axis.high_exponent == 6);
  CHECK(axis.decades() == 4);
}

TEST_CASE("lineage: zero generations gives the ancestor only") {
  auto c = tiny_config("");
  c.generations = 0;
  const auto data = load_experiment_data(c);
  CHECK(data.train.size() == 120);
  CHECK(data.test.size() == 60);
  const auto recs = run_lineage(c, 1, 0.7, data);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].generation == 0);
  CHECK(recs[0].live_synapses == 61470);
  CHECK(recs[0].storage_bytes == 492870);
  CHECK(recs[0].parent_ids.empty());
  CHECK(recs[0].train_work == 0);
}

TEST_CASE("lineage: contiguous generations, monotone storage, parent discipline") {
  auto c = tiny_config("edi_lineage");
  c.generations = 4;
  c.parent_counts = {2};
  const auto data = load_experiment_data(c);
  LineageHooks hooks;
  hooks.cell_dir = c.output_dir / "cell";
  const auto recs = run_lineage(c, 2, 0.9, data, hooks);
  REQUIRE(recs.size() >= 2);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs[i].generation == static_cast<int>(i));
    CHECK(recs[i].parent_count == 2);
    if (i == 0) continue;
    // Mating takes the union of the parents' supports, so with m = 2 the
    // representative is bounded by the ancestor, not by its predecessor.
    CHECK(recs[i].live_synapses <= recs[0].live_synapses);
    CHECK(recs[i].train_work > recs[i - 1].train_work);
    // two distinct parents, both from the preceding generation
    const std::string prefix = "g" + std::to_string(i - 1) + "o";
    const auto& p = recs[i].parent_ids;
    const auto split = p.find(';');
    REQUIRE(split != std::string::npos);
    CHECK(p.rfind(prefix, 0) == 0);
    CHECK(p.compare(split + 1, prefix.size(), prefix) == 0);
    CHECK(p.substr(0, split) != p.substr(split + 1));
  }
  // every offspring persisted with diagnostics
  for (std::size_t g = 1; g < recs.size(); ++g)
    for (int o = 0; o < 2; ++o) {
      const std::string id = "g" + std::to_string(g) + "o" + std::to_string(o);
      CHECK(fs::exists(hooks.cell_dir / "genomes" / (id + ".edsp")));
      CHECK(fs::exists(hooks.cell_dir / "diagnostics" / (id + ".json")));
    }
  fs::remove_all(c.output_dir);
}

TEST_CASE("lineage: one-parent live count and storage never increase") {
  auto c = tiny_config("");
  c.generations = 5;
  const auto data = load_experiment_data(c);
  const auto recs = run_lineage(c, 1, 0.8, data);
  REQUIRE(recs.size() == 6);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    CHECK(recs[i].live_synapses <= recs[i - 1].live_synapses);
    CHECK(recs[i].storage_bytes <= recs[i - 1].storage_bytes);
    CHECK(recs[i].parent_ids == "g" + std::to_string(i - 1) + "o0");
  }
}

TEST_CASE("lineage: keep_going stops early") {
  auto c = tiny_config("");
  c.generations = 5;
  const auto data = load_experiment_data(c);
  LineageHooks hooks;
  hooks.keep_going = [](const GenerationRecord& r) { return r.generation < 1; };
  CHECK(run_lineage(c, 1, 0.5, data, hooks).size() == 2);
}

TEST_CASE("lineage: all offspring diverging is an error") {
  auto c = tiny_config("");
  c.retrain_budget.learning_rate = std::numeric_limits<double>::max();
  c.retrain_budget.batch_size = 4;
  const auto data = load_experiment_data(c);
  CHECK_THROWS_WITH(run_lineage(c, 1, 0.5, data), doctest::Contains("diverged"));
}

TEST_CASE("sweep: cells, determinism, resume, plots") {
  auto c = tiny_config("edi_sweep_a");
  c.cluster_factors = {0.5, 0.9};
  c.parent_counts = {1, 2};
  c.workers = 2;
  const auto first = run_sweep(c);
  REQUIRE(first.cells.size() == 4);
  CHECK(first.lineages_run == 4);
  CHECK(first.ancestors_trained == 2);
  for (const auto& cell : first.cells) {
    CHECK(cell.status == CellStatus::completed);
    CHECK(cell.records.size() == 3);
  }
  CHECK(first.cells[1].parent_count == 1);
  CHECK(first.cells[1].cluster_factor == 0.9);
  CHECK(first.cells[0].seed != first.cells[1].seed);

  SUBCASE("identical seeds give identical exports") {
    auto again = c;
    again.output_dir = fs::temp_directory_path() / "edi_sweep_b";
    fs::remove_all(again.output_dir);
    again.workers = 1;
    const auto second = run_sweep(again);
    const auto a = fs::temp_directory_path() / "edi_sweep_a.csv";
    const auto b = fs::temp_directory_path() / "edi_sweep_b.csv";
    export_csv(first, a);
    export_csv(second, b);
    CHECK(slurp(a) == slurp(b));
    CHECK(count_of(slurp(a), "\n") == 13);
    fs::remove(a);
    fs::remove(b);
    fs::remove_all(again.output_dir);
  }
  SUBCASE("rerun resumes without training") {
    const auto resumed = run_sweep(c);
    CHECK(resumed.lineages_run == 0);
    CHECK(resumed.ancestors_trained == 0);
    for (std::size_t i = 0; i < resumed.cells.size(); ++i) {
      CHECK(resumed.cells[i].status == CellStatus::resumed);
      CHECK(resumed.cells[i].records == first.cells[i].records);
    }
    const auto loaded = load_sweep(c.output_dir);
    CHECK(loaded.all_records() == first.all_records());

    // a changed budget invalidates the cells but not the cached ancestors
    auto changed = c;
    changed.retrain_budget.learning_rate = 0.02;
    const auto rerun = run_sweep(changed);
    CHECK(rerun.lineages_run == 4);
    CHECK(rerun.ancestors_trained == 0);
  }
  SUBCASE("plots") {
    const auto dir = c.output_dir / "plots";
    const auto files = emit_plots(first, dir);
    CHECK(files.size() == 5);
    for (const auto* name : {"accuracy_m1.svg", "storage_m1.svg", "accuracy_m2.svg",
                             "storage_m2.svg", "scatter.svg"})
      CHECK(fs::exists(dir / name));
    CHECK(count_of(slurp(dir / "accuracy_m1.svg"), "<polyline") == 2);
    CHECK(count_of(slurp(dir / "storage_m2.svg"), "<polyline") == 2);
    CHECK(count_of(slurp(dir / "scatter.svg"), "<circle") >= 12);
    CHECK_THROWS(emit_plots(SweepResult{}, dir));
  }
  fs::remove_all(c.output_dir);
}

TEST_CASE("sweep: single cell and isolated failures") {
  auto c = tiny_config("edi_sweep_fail");
  c.cluster_factors = {0.5, 0.7};
  fs::create_directories(c.output_dir / "cells");
  // A plain file where the second cell's directory belongs.
  std::ofstream(c.output_dir / "cells" / cell_name(1, 0.7)) << "blocked";
  const auto result = run_sweep(c);
  REQUIRE(result.cells.size() == 2);
  CHECK(result.cells[0].status == CellStatus::completed);
  CHECK(result.cells[1].status == CellStatus::failed);
  CHECK_FALSE(result.cells[1].error.empty());
  CHECK(result.all_records().size() == 3);
  fs::remove_all(c.output_dir);
}

TEST_CASE("cached ancestors are reused across test limits with a fresh accuracy") {
  auto c = tiny_config("edi_ancestor_cache");
  const auto data = load_experiment_data(c);
  const auto first = obtain_ancestors(c, data, 1);
  CHECK(first.trained == 1);

  c.test_limit = 30;
  const auto trimmed = load_experiment_data(c);
  const auto second = obtain_ancestors(c, trimmed, 1);
  CHECK(second.trained == 0);
  CHECK(second.genomes[0] == first.genomes[0]);
  CHECK(second.accuracy[0] == evaluate(first.genomes[0], trimmed.test));

  c.ancestor_budget.epochs = 1;
  CHECK(obtain_ancestors(c, trimmed, 1).trained == 1);
  fs::remove_all(c.output_dir);
}
