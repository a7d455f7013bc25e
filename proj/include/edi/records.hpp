#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace edi {

/// Metrics for the representative network of one generation of a lineage.
struct GenerationRecord {
  int parent_count = 1;
  double cluster_factor = 0.0;
  double synapse_factor = 0.0;
  int generation = 0;
  std::string offspring_id;
  std::string parent_ids;  ///< ';'-separated, empty for ancestors
  double accuracy = 0.0;
  std::size_t live_synapses = 0;
  std::size_t storage_bytes = 0;
  /// Cumulative retraining work of the lineage, in live multiply-accumulates.
  std::uint64_t train_work = 0;
  /// Cumulative retraining wall time of the lineage. Not reproducible.
  double train_seconds = 0.0;
  bool degenerate = false;

  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

struct CsvOptions {
  /// Adds the train_seconds column. Off by default so that exports of
  /// identically seeded runs are byte-identical.
  bool wall_time = false;
};

/// Column order of the export; train_seconds is appended when requested.
const std::vector<std::string>& csv_columns();

std::string to_csv(const std::vector<GenerationRecord>& records, const CsvOptions& options = {});
void write_csv(const std::vector<GenerationRecord>& records, const std::filesystem::path& path,
               const CsvOptions& options = {});
/// Parses either column layout; train_seconds defaults to 0 when absent.
std::vector<GenerationRecord> parse_csv(const std::string& text);
std::vector<GenerationRecord> read_csv(const std::filesystem::path& path);

/// Shortest "%.17g" rendering; parses back to the same double.
std::string format_double(double v);

}  // namespace edi
