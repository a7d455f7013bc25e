#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "edi/genome.hpp"

namespace edi {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Full genome container, lossless. All integers little-endian.
//
//   "EDGN"  u32 version(=1)  u32 generation  u32 id_len  id bytes
//   u32 input channels, height, width   u32 layer_count
//   per layer: u32 kind, activation, out_channels, in_channels, kernel_h,
//              kernel_w, stride, padding, out_dim, in_dim, window
//   per weighted layer: f64 weights[n]  f64 biases[b]  u8 mask[n]
inline constexpr std::uint32_t kGenomeFormatVersion = 1;

std::vector<std::uint8_t> encode_genome(const NetworkGenome& genome);
NetworkGenome decode_genome(const std::vector<std::uint8_t>& bytes);
void save_genome(const NetworkGenome& genome, const std::filesystem::path& path);
NetworkGenome load_genome(const std::filesystem::path& path);

// Sparse export, the storage-size format. Little-endian.
//
//   "EDSP"  u16 version(=1)  u16 layer_count  u16 input c, h, w
//   per layer (12 bytes): u8 kind, u8 activation, u8 stride, u8 padding,
//                         u16 a, b, c, d
//       conv: out_channels, in_channels, kernel_h, kernel_w
//       dense: out_dim, in_dim, 0, 0     pool: window, 0, 0, 0
//   per weighted layer: u32 live_count
//                       live_count x (u32 flat_index, f32 weight)
//                       f32 biases[b]
//
// Weights are narrowed to float; lineage_id and generation are not stored.
inline constexpr std::uint16_t kSparseFormatVersion = 1;
inline constexpr std::size_t kSparseHeaderBytes = 14;
inline constexpr std::size_t kSparseLayerDescriptorBytes = 12;
inline constexpr std::size_t kSparseEntryBytes = 8;

std::vector<std::uint8_t> encode_sparse(const NetworkGenome& genome);
NetworkGenome decode_sparse(const std::vector<std::uint8_t>& bytes);
/// Size encode_sparse would produce, without building the buffer.
std::size_t sparse_encoded_size(const NetworkGenome& genome);

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

}  // namespace edi
