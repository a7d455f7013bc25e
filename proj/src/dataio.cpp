#include "edi/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "edi/rng.hpp"

namespace edi {

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError("cannot open IDX file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset,
                        const std::string& what) {
  if (buf.size() < offset + 4) throw IdxTruncatedError("truncated header: missing " + what);
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(static_cast<std::uint8_t>(v >> 24));
  buf.push_back(static_cast<std::uint8_t>(v >> 16));
  buf.push_back(static_cast<std::uint8_t>(v >> 8));
  buf.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

void Dataset::validate(int num_classes) const {
  if (images.size() != labels.size() * shape.size())
    throw std::invalid_argument("dataset: image and label counts differ");
  for (auto l : labels)
    if (l >= num_classes) throw std::invalid_argument("dataset: label out of range");
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 Split split) {
  const auto img = slurp(images_path);
  const auto lab = slurp(labels_path);

  const auto img_magic = read_be32(img, 0, "images magic");
  if (img_magic != kIdxImagesMagic)
    throw IdxMagicError("images magic: expected 2051, got " + std::to_string(img_magic) + " in " +
                        images_path.string());
  const auto lab_magic = read_be32(lab, 0, "labels magic");
  if (lab_magic != kIdxLabelsMagic)
    throw IdxMagicError("labels magic: expected 2049, got " + std::to_string(lab_magic) + " in " +
                        labels_path.string());

  const auto count = read_be32(img, 4, "image count");
  const auto rows = read_be32(img, 8, "row count");
  const auto cols = read_be32(img, 12, "column count");
  const auto label_count = read_be32(lab, 4, "label count");
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096)
    throw IdxError("images: implausible dimensions " + std::to_string(rows) + "x" +
                   std::to_string(cols));
  if (count != label_count)
    throw IdxCountMismatchError("image count " + std::to_string(count) + " != label count " +
                                std::to_string(label_count));

  const std::size_t pixels = std::size_t{rows} * cols;
  if (img.size() - 16 < std::size_t{count} * pixels)
    throw IdxTruncatedError("images payload truncated: need " +
                            std::to_string(std::size_t{count} * pixels) + " bytes, have " +
                            std::to_string(img.size() - 16));
  if (lab.size() - 8 < count)
    throw IdxTruncatedError("labels payload truncated: need " + std::to_string(count) +
                            " bytes, have " + std::to_string(lab.size() - 8));

  Dataset ds;
  ds.shape = Shape{1, static_cast<int>(rows), static_cast<int>(cols)};
  ds.split = split;
  ds.images.resize(std::size_t{count} * pixels);
  for (std::size_t i = 0; i < ds.images.size(); ++i) ds.images[i] = img[16 + i] / 255.0;
  ds.labels.assign(lab.begin() + 8, lab.begin() + 8 + count);
  for (auto l : ds.labels)
    if (l > 9) throw IdxError("label value " + std::to_string(l) + " outside [0,9]");
  return ds;
}

void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               int rows, int cols, const std::vector<std::uint8_t>& pixels,
               const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> img;
  put_be32(img, kIdxImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(labels.size()));
  put_be32(img, static_cast<std::uint32_t>(rows));
  put_be32(img, static_cast<std::uint32_t>(cols));
  img.insert(img.end(), pixels.begin(), pixels.end());
  std::vector<std::uint8_t> lab;
  put_be32(lab, kIdxLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(labels.size()));
  lab.insert(lab.end(), labels.begin(), labels.end());
  for (const auto& [path, buf] : {std::pair{images_path, &img}, std::pair{labels_path, &lab}}) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IdxError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(buf->data()), static_cast<std::streamsize>(buf->size()));
  }
}

MnistPaths mnist_paths(const std::filesystem::path& dir) {
  return {dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
          dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"};
}

bool mnist_available(const std::filesystem::path& dir) {
  const auto p = mnist_paths(dir);
  return std::filesystem::exists(p.train_images) && std::filesystem::exists(p.train_labels) &&
         std::filesystem::exists(p.test_images) && std::filesystem::exists(p.test_labels);
}

std::vector<std::size_t> class_counts(const Dataset& dataset, int num_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (auto l : dataset.labels) ++counts.at(l);
  return counts;
}

std::vector<std::size_t> stratified_indices(const Dataset& dataset, double fraction,
                                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("stratified_subset: fraction must be in (0, 1]");
  std::vector<std::vector<std::size_t>> by_class(10);
  for (std::size_t i = 0; i < dataset.size(); ++i) by_class.at(dataset.labels[i]).push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& members : by_class) {
    const auto take =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    shuffle_indices(members, rng);
    keep.insert(keep.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

Dataset take_indices(const Dataset& dataset, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.shape = dataset.shape;
  out.split = dataset.split;
  const std::size_t stride = dataset.shape.size();
  out.images.reserve(indices.size() * stride);
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    if (i >= dataset.size()) throw std::out_of_range("take_indices: index out of range");
    out.images.insert(out.images.end(), dataset.image(i), dataset.image(i) + stride);
    out.labels.push_back(dataset.labels[i]);
  }
  return out;
}

Dataset stratified_subset(const Dataset& dataset, double fraction, std::uint64_t seed) {
  return take_indices(dataset, stratified_indices(dataset, fraction, seed));
}

}  // namespace edi
