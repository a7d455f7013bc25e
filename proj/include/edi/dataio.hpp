#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "edi/layers.hpp"

namespace edi {

enum class Split : std::uint8_t { train, test };

/// Images stored row-major, one `shape.size()` block per item, pixels in [0,1].
struct Dataset {
  Shape shape{1, 28, 28};
  std::vector<double> images;
  std::vector<std::uint8_t> labels;
  Split split = Split::train;

  std::size_t size() const { return labels.size(); }
  const double* image(std::size_t i) const { return images.data() + i * shape.size(); }
  /// Throws std::invalid_argument unless counts agree and labels are < num_classes.
  void validate(int num_classes = 10) const;
};

/// Each IDX failure mode has its own exception type.
class IdxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class IdxMagicError : public IdxError {
 public:
  using IdxError::IdxError;
};
class IdxTruncatedError : public IdxError {
 public:
  using IdxError::IdxError;
};
class IdxCountMismatchError : public IdxError {
 public:
  using IdxError::IdxError;
};

inline constexpr std::uint32_t kIdxImagesMagic = 2051;
inline constexpr std::uint32_t kIdxLabelsMagic = 2049;

/// Parses an IDX image file (magic 2051) and label file (magic 2049).
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 Split split = Split::train);

/// Writes the raw bytes of an IDX pair. Used to build fixtures.
void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               int rows, int cols, const std::vector<std::uint8_t>& pixels,
               const std::vector<std::uint8_t>& labels);

/// The four standard MNIST files under `dir`.
struct MnistPaths {
  std::filesystem::path train_images, train_labels, test_images, test_labels;
};
MnistPaths mnist_paths(const std::filesystem::path& dir);
bool mnist_available(const std::filesystem::path& dir);

/// Per class: round(fraction * class count) items drawn without replacement.
/// Selected items keep their original relative order.
Dataset stratified_subset(const Dataset& dataset, double fraction, std::uint64_t seed);
/// The original indices stratified_subset would keep, ascending.
std::vector<std::size_t> stratified_indices(const Dataset& dataset, double fraction,
                                            std::uint64_t seed);

Dataset take_indices(const Dataset& dataset, const std::vector<std::size_t>& indices);

/// Per-class item counts (size = num_classes).
std::vector<std::size_t> class_counts(const Dataset& dataset, int num_classes = 10);

}  // namespace edi
