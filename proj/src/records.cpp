#include "edi/records.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace edi {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw std::runtime_error("csv: bad number '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  char* end = nullptr;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw std::runtime_error("csv: bad integer '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns{
      "parent_count", "cluster_factor", "synapse_factor", "generation",
      "offspring_id", "parent_ids",     "accuracy",       "live_synapses",
      "storage_bytes", "train_work",    "degenerate"};
  return columns;
}

std::string to_csv(const std::vector<GenerationRecord>& records, const CsvOptions& options) {
  std::ostringstream os;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  if (options.wall_time) os << ",train_seconds";
  os << '\n';
  for (const auto& r : records) {
    os << r.parent_count << ',' << format_double(r.cluster_factor) << ','
       << format_double(r.synapse_factor) << ',' << r.generation << ',' << r.offspring_id << ','
       << r.parent_ids << ',' << format_double(r.accuracy) << ',' << r.live_synapses << ','
       << r.storage_bytes << ',' << r.train_work << ',' << (r.degenerate ? 1 : 0);
    if (options.wall_time) os << ',' << format_double(r.train_seconds);
    os << '\n';
  }
  return os.str();
}

void write_csv(const std::vector<GenerationRecord>& records, const std::filesystem::path& path,
               const CsvOptions& options) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_csv(records, options);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<GenerationRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: missing header");
  const auto header = split_line(line);
  const auto& cols = csv_columns();
  const bool wall = header.size() == cols.size() + 1 && header.back() == "train_seconds";
  if (header.size() != cols.size() + (wall ? 1 : 0))
    throw std::runtime_error("csv: unexpected header");
  for (std::size_t i = 0; i < cols.size(); ++i)
    if (header[i] != cols[i]) throw std::runtime_error("csv: unexpected column " + header[i]);

  std::vector<GenerationRecord> records;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_line(line);
    if (f.size() != header.size()) throw std::runtime_error("csv: wrong field count");
    GenerationRecord r;
    r.parent_count = static_cast<int>(to_u64(f[0]));
    r.cluster_factor = to_double(f[1]);
    r.synapse_factor = to_double(f[2]);
    r.generation = static_cast<int>(to_u64(f[3]));
    r.offspring_id = f[4];
    r.parent_ids = f[5];
    r.accuracy = to_double(f[6]);
    r.live_synapses = static_cast<std::size_t>(to_u64(f[7]));
    r.storage_bytes = static_cast<std::size_t>(to_u64(f[8]));
    r.train_work = to_u64(f[9]);
    r.degenerate = f[10] == "1";
    if (wall) r.train_seconds = to_double(f[11]);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<GenerationRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace edi
