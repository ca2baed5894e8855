#pragma once

// Dataset ingestion and batching.
//
// IDX: big-endian header, magic 0x00000803 (images: N, rows, cols) or
// 0x00000804 (N, rows, cols, channels) and 0x00000801 (labels: N), then raw
// unsigned bytes. CIFAR binary: fixed-size records of label byte(s) followed
// by 1024 red, 1024 green and 1024 blue bytes of a 32x32 image.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wavenet/rng.hpp"
#include "wavenet/tensor.hpp"

namespace wavenet {

/// N images of h x w x c (interleaved) plus labels. Raw bytes until
/// normalize() fills `pixels` with values in [0, 1].
struct Dataset {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::size_t classes = 0;
  std::vector<std::uint8_t> raw;
  std::vector<double> pixels;
  std::vector<int> labels;
  bool normalized = false;

  std::size_t image_size() const noexcept { return height * width * channels; }
  std::span<const std::uint8_t> raw_image(std::size_t i) const {
    return {raw.data() + i * image_size(), image_size()};
  }
  /// Requires a normalized dataset.
  std::span<const double> image(std::size_t i) const {
    return {pixels.data() + i * image_size(), image_size()};
  }
};

/// `classes` of 0 infers max(label) + 1. Throws Error(Format) on bad magic,
/// truncation or image/label count mismatch, naming the byte offset.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t classes = 0);

/// Images only (labels empty, classes 0).
Dataset load_idx_images(const std::filesystem::path& images);

/// Writes the raw bytes of `data` as an IDX image/label pair.
void save_idx(const Dataset& data, const std::filesystem::path& images,
              const std::filesystem::path& labels);

enum class CifarVariant { Cifar10, Cifar100 };
enum class Split { Train, Test };

/// Reads the standard batch files from `dir`: data_batch_1..5.bin / test_batch.bin
/// for CIFAR-10, train.bin / test.bin for CIFAR-100 (fine labels).
Dataset load_cifar(const std::filesystem::path& dir, CifarVariant variant, Split split);
Dataset load_cifar_files(std::span<const std::filesystem::path> files, CifarVariant variant);

/// Scales raw bytes to [0, 1]. Throws Error(Data) when already normalized.
Dataset normalize(Dataset data);

/// First `n` samples (all when n is 0 or exceeds the count).
Dataset head(const Dataset& data, std::size_t n);

struct AugmentSpec {
  int max_shift = 0;              // pixels, at most 2
  double max_rotation_deg = 0.0;  // at most 15
  double invert_prob = 0.0;

  bool enabled() const noexcept {
    return max_shift != 0 || max_rotation_deg != 0.0 || invert_prob != 0.0;
  }
  void validate() const;
};

/// Moves content right by dx and down by dy; vacated pixels are zero.
std::vector<double> shift_image(std::span<const double> image, std::size_t height,
                                std::size_t width, std::size_t channels, int dx, int dy);
/// Nearest-neighbour rotation about the centre, zero fill.
std::vector<double> rotate_image(std::span<const double> image, std::size_t height,
                                 std::size_t width, std::size_t channels, double degrees);
std::vector<double> invert_image(std::span<const double> image);

/// Random rotation, then shift, then inversion, each drawn from `spec`.
std::vector<double> augment(std::span<const double> image, std::size_t height,
                            std::size_t width, std::size_t channels, const AugmentSpec& spec,
                            Rng& rng);

struct BatchPlan {
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

struct Batch {
  Matrix images;  // rows = samples
  std::vector<int> labels;
  std::vector<std::size_t> indices;
};

/// Deterministic permutation of `n` indices for (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

/// Lazily gathered batches of a normalized dataset in shuffled order; the
/// last batch may be short.
class BatchSequence {
 public:
  BatchSequence(const Dataset& data, const BatchPlan& plan);

  std::size_t size() const noexcept;
  Batch operator[](std::size_t i) const;
  const std::vector<std::size_t>& order() const noexcept { return order_; }

 private:
  const Dataset* data_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
};

BatchSequence batches(const Dataset& data, const BatchPlan& plan);

/// Gathers arbitrary samples (in the given order) into one batch.
Batch gather(const Dataset& data, std::span<const std::size_t> indices);

/// Two-class toy set: class 0 has a bright left half, class 1 a bright right
/// half, both with uniform noise. Raw bytes, alternating labels.
Dataset synthetic_halves(std::size_t count, std::size_t side, std::uint64_t seed);

}  // namespace wavenet
