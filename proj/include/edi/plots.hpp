#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "edi/harness.hpp"

namespace edi {

/// Decade-aligned bounds of a log10 axis covering [lo, hi].
struct LogAxis {
  int low_exponent = 0;
  int high_exponent = 1;
  int decades() const { return high_exponent - low_exponent; }
};
LogAxis log_axis_for(double lo, double hi);

/// Writes, per parent count m, accuracy_m<m>.svg and storage_m<m>.svg (one
/// series per cluster factor, x = cumulative retraining work), plus
/// scatter.svg (accuracy against storage, point radius grows with m).
/// Returns the written paths.
std::vector<std::filesystem::path> emit_plots(const SweepResult& result,
                                              const std::filesystem::path& dir);

}  // namespace edi
