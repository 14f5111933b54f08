#include "attnet/data_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

#include "attnet/rng.hpp"
#include "binio.hpp"

namespace attnet {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
constexpr std::size_t kCifarRecordSize = 3073;  // 1 label byte + 3·1024 plane bytes

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t off) {
  return (static_cast<std::uint32_t>(b[off]) << 24) | (static_cast<std::uint32_t>(b[off + 1]) << 16) |
         (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

}  // namespace

RawImageSet parse_idx_images(std::span<const std::uint8_t> bytes, const std::string& source_tag) {
  require(bytes.size() >= 16, Err::TruncatedFile, "IDX image header needs 16 bytes");
  const std::uint32_t magic = read_be32(bytes, 0);
  require(magic == kIdxImageMagic, Err::WrongMagic,
          "expected IDX image magic 0x00000803, got 0x" + std::to_string(magic));
  RawImageSet set;
  set.count = read_be32(bytes, 4);
  set.rows = read_be32(bytes, 8);
  set.cols = read_be32(bytes, 12);
  set.channels = 1;
  set.source_tag = source_tag;
  require(set.count > 0 && set.rows > 0 && set.cols > 0, Err::ZeroCount,
          "IDX header declares a zero dimension");
  const std::size_t need = set.count * set.rows * set.cols;
  require(bytes.size() >= 16 + need, Err::TruncatedFile,
          "IDX file declares " + std::to_string(need) + " pixels but holds " +
              std::to_string(bytes.size() - 16));
  set.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(need));
  return set;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes, bool strict) {
  require(bytes.size() >= 8, Err::TruncatedFile, "IDX label header needs 8 bytes");
  const std::uint32_t magic = read_be32(bytes, 0);
  require(magic == kIdxLabelMagic, Err::WrongMagic,
          "expected IDX label magic 0x00000801, got 0x" + std::to_string(magic));
  const std::size_t count = read_be32(bytes, 4);
  require(count > 0, Err::ZeroCount, "IDX label file declares zero labels");
  require(bytes.size() >= 8 + count, Err::TruncatedFile,
          "IDX label file declares " + std::to_string(count) + " labels but holds " +
              std::to_string(bytes.size() - 8));
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    labels[i] = bytes[8 + i];
    if (strict) {
      require(labels[i] <= 9, Err::LabelOutOfRange,
              "label " + std::to_string(labels[i]) + " at index " + std::to_string(i));
    }
  }
  return labels;
}

Cifar10Batch parse_cifar10_batch(std::span<const std::uint8_t> bytes, const std::string& source_tag) {
  require(!bytes.empty() && bytes.size() % kCifarRecordSize == 0, Err::NotMultipleOfRecordSize,
          "CIFAR-10 batch length " + std::to_string(bytes.size()) + " is not a multiple of 3073");
  const std::size_t count = bytes.size() / kCifarRecordSize;
  Cifar10Batch batch;
  batch.labels.resize(count);
  batch.images.count = count;
  batch.images.rows = 32;
  batch.images.cols = 32;
  batch.images.channels = 3;
  batch.images.source_tag = source_tag;
  batch.images.pixels.resize(count * 32 * 32 * 3);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* rec = bytes.data() + i * kCifarRecordSize;
    require(rec[0] <= 9, Err::LabelOutOfRange,
            "record " + std::to_string(i) + " has label " + std::to_string(rec[0]));
    batch.labels[i] = rec[0];
    // file stores planar R,G,B; RawImageSet is pixel-interleaved
    std::uint8_t* out = batch.images.pixels.data() + i * 32 * 32 * 3;
    for (std::size_t p = 0; p < 1024; ++p) {
      out[p * 3 + 0] = rec[1 + p];
      out[p * 3 + 1] = rec[1 + 1024 + p];
      out[p * 3 + 2] = rec[1 + 2048 + p];
    }
  }
  return batch;
}

RawImageSet cifar_to_bw28(const RawImageSet& rgb) {
  require(rgb.rows == 32 && rgb.cols == 32 && rgb.channels >= 1, Err::WrongInputShape,
          "cifar_to_bw28 expects 32×32 input with at least one channel");
  RawImageSet out;
  out.count = rgb.count;
  out.rows = 28;
  out.cols = 28;
  out.channels = 1;
  out.source_tag = rgb.source_tag + "-bw28";
  out.pixels.resize(rgb.count * 28 * 28);
  const double scale = 31.0 / 27.0;  // corner-aligned: maps 0→0 and 27→31
  for (std::size_t i = 0; i < rgb.count; ++i) {
    for (std::size_t r = 0; r < 28; ++r) {
      const double sy = r * scale;
      const std::size_t y0 = std::min<std::size_t>(static_cast<std::size_t>(sy), 31);
      const std::size_t y1 = std::min<std::size_t>(y0 + 1, 31);
      const double fy = sy - static_cast<double>(y0);
      for (std::size_t c = 0; c < 28; ++c) {
        const double sx = c * scale;
        const std::size_t x0 = std::min<std::size_t>(static_cast<std::size_t>(sx), 31);
        const std::size_t x1 = std::min<std::size_t>(x0 + 1, 31);
        const double fx = sx - static_cast<double>(x0);
        const double v = (1.0 - fy) * (1.0 - fx) * rgb.at(i, y0, x0, 0) +
                         (1.0 - fy) * fx * rgb.at(i, y0, x1, 0) +
                         fy * (1.0 - fx) * rgb.at(i, y1, x0, 0) +
                         fy * fx * rgb.at(i, y1, x1, 0);
        const long q = std::lround(v);
        out.pixels[(i * 28 + r) * 28 + c] = static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
      }
    }
  }
  return out;
}

namespace {

void fill_normalized_row(Matrix& m, std::size_t dst_row, const RawImageSet& raw, std::size_t src) {
  const std::size_t dim = raw.image_size();
  const std::uint8_t* px = raw.pixels.data() + src * dim;
  auto row = m.row(dst_row);
  for (std::size_t j = 0; j < dim; ++j) row[j] = px[j] / 255.0;
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                        const SplitConfig& cfg) {
  require(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0, Err::ConfigError,
          "validation_fraction must lie in (0,1)");
  const std::size_t n = ds.count();
  require(n > 0, Err::ZeroCount, "cannot split an empty dataset");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(cfg.seed, /*salt=*/0x53504C49u);
  std::shuffle(order.begin(), order.end(), rng);

  const auto val_count = static_cast<std::size_t>(std::ceil(cfg.validation_fraction * n));
  std::size_t train_count = n - val_count;
  if (cfg.train_subset_size) {
    require(*cfg.train_subset_size <= train_count, Err::SubsetTooLarge,
            "train_subset_size " + std::to_string(*cfg.train_subset_size) +
                " exceeds available training count " + std::to_string(train_count));
    train_count = *cfg.train_subset_size;
  }

  LabeledDataset val;
  val.images = Matrix(val_count, ds.images.cols());
  val.labels.resize(val_count);
  val.tag = ds.tag;
  val.name = ds.name + "-val";
  for (std::size_t i = 0; i < val_count; ++i) {
    val.images.set_row(i, ds.images.row(order[i]));
    val.labels[i] = ds.labels[order[i]];
  }

  LabeledDataset train;
  train.images = Matrix(train_count, ds.images.cols());
  train.labels.resize(train_count);
  train.tag = ds.tag;
  train.name = ds.name + "-train";
  for (std::size_t i = 0; i < train_count; ++i) {
    train.images.set_row(i, ds.images.row(order[val_count + i]));
    train.labels[i] = ds.labels[order[val_count + i]];
  }
  return {std::move(train), std::move(val)};
}

std::pair<LabeledDataset, LabeledDataset> normalize_split(const RawImageSet& raw,
                                                          const std::vector<int>& labels,
                                                          const SplitConfig& cfg) {
  return split_dataset(normalize_all(raw, labels, DistributionTag::ID), cfg);
}

LabeledDataset normalize_all(const RawImageSet& raw, const std::vector<int>& labels,
                             DistributionTag tag) {
  require(raw.count == labels.size(), Err::CountMismatch,
          "image count " + std::to_string(raw.count) + " != label count " +
              std::to_string(labels.size()));
  LabeledDataset ds;
  ds.images = Matrix(raw.count, raw.image_size());
  ds.labels = labels;
  ds.tag = tag;
  ds.name = raw.source_tag;
  for (std::size_t i = 0; i < raw.count; ++i) fill_normalized_row(ds.images, i, raw, i);
  return ds;
}

// --- .atds cache -------------------------------------------------------------

namespace {
constexpr char kDatasetMagic[4] = {'A', 'T', 'D', 'S'};
constexpr std::uint32_t kDatasetVersion = 1;
}  // namespace

void save_dataset(const LabeledDataset& ds, const std::string& path) {
  binio::Writer w;
  w.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kDatasetMagic), 4));
  w.u32(kDatasetVersion);
  w.str(ds.name);
  w.u8(ds.tag == DistributionTag::ID ? 0 : 1);
  w.u32(static_cast<std::uint32_t>(ds.count()));
  w.u32(static_cast<std::uint32_t>(ds.images.cols()));
  for (int label : ds.labels) w.u8(static_cast<std::uint8_t>(label));
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    w.f32(static_cast<float>(ds.images.data()[i]));
  }
  w.append_crc();
  write_file_bytes(path, w.bytes());
}

LabeledDataset load_dataset(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  binio::Reader r(bytes);
  const auto magic = r.take(4);
  require(std::equal(magic.begin(), magic.end(), kDatasetMagic), Err::BadMagic,
          path + " is not a dataset cache");
  const std::uint32_t version = r.u32();
  require(version == kDatasetVersion, Err::VersionUnsupported,
          "dataset cache version " + std::to_string(version));
  LabeledDataset ds;
  ds.name = r.str();
  ds.tag = r.u8() == 0 ? DistributionTag::ID : DistributionTag::OOD;
  const std::uint32_t count = r.u32();
  const std::uint32_t dim = r.u32();
  ds.labels.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) ds.labels[i] = r.u8();
  ds.images = Matrix(count, dim);
  for (std::size_t i = 0; i < ds.images.size(); ++i) ds.images.data()[i] = r.f32();
  binio::check_crc(r);
  return ds;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Err::IoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  require(!in.bad(), Err::IoError, "read failure on " + path);
  return bytes;
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Err::IoError, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), Err::IoError, "write failure on " + path);
}

}  // namespace attnet
