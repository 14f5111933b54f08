#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attnet/matrix.hpp"

namespace attnet {

// Raw images exactly as parsed from disk: unsigned bytes, no value
// transformation. Pixel layout is [count][rows][cols][channels].
struct RawImageSet {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;
  std::string source_tag;

  std::uint8_t at(std::size_t i, std::size_t r, std::size_t c, std::size_t ch = 0) const {
    return pixels[((i * rows + r) * cols + c) * channels + ch];
  }
  std::size_t image_size() const { return rows * cols * channels; }
};

enum class DistributionTag { ID, OOD };

// Normalized dataset ready for the network: one flattened image per row,
// values in [0, 1].
struct LabeledDataset {
  Matrix images;            // count × (rows·cols·channels)
  std::vector<int> labels;  // 0..9
  DistributionTag tag = DistributionTag::ID;
  std::string name;

  std::size_t count() const { return images.rows(); }
};

struct SplitConfig {
  double validation_fraction = 0.1;  // in (0,1)
  std::uint64_t seed = 0;
  std::optional<std::size_t> train_subset_size;
};

// --- IDX / CIFAR binary parsing -------------------------------------------

RawImageSet parse_idx_images(std::span<const std::uint8_t> bytes,
                             const std::string& source_tag = "idx");

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes, bool strict = true);

struct Cifar10Batch {
  std::vector<int> labels;
  RawImageSet images;  // 32×32, 3 channels (R,G,B)
};

Cifar10Batch parse_cifar10_batch(std::span<const std::uint8_t> bytes,
                                 const std::string& source_tag = "cifar10");

// Bilinear resize of channel 0 (red) from 32×32 to 28×28; other channels
// discarded. Corner-aligned sampling, rounded to nearest byte.
RawImageSet cifar_to_bw28(const RawImageSet& rgb);

// --- normalization / splitting --------------------------------------------

// Scales bytes into [0,1], flattens row-major, splits by a seeded
// permutation. Validation receives ⌈fraction·count⌉ items; the optional
// train subset is taken from the training side after the split.
std::pair<LabeledDataset, LabeledDataset> normalize_split(const RawImageSet& raw,
                                                          const std::vector<int>& labels,
                                                          const SplitConfig& cfg);

// The same seeded split applied to an already-normalized dataset (e.g. a
// cache loaded from disk). normalize_split is exactly normalize_all followed
// by this.
std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                        const SplitConfig& cfg);

// Same normalization, no split (test sets).
LabeledDataset normalize_all(const RawImageSet& raw, const std::vector<int>& labels,
                             DistributionTag tag);

// --- dataset cache (.atds) -------------------------------------------------
// Binary format: magic "ATDS", u32 LE version, u32 LE name length + UTF-8
// name, u8 distribution tag, u32 LE count, u32 LE dim, count label bytes,
// count·dim little-endian float32 images, CRC-32 of all preceding bytes.

void save_dataset(const LabeledDataset& ds, const std::string& path);
LabeledDataset load_dataset(const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace attnet
