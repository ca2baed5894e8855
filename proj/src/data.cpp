#include "wavenet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "wavenet/error.hpp"

namespace wavenet {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kIdxLabels = 0x00000801;
constexpr std::uint32_t kIdxImages3 = 0x00000803;
constexpr std::uint32_t kIdxImages4 = 0x00000804;
constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;

[[noreturn]] void format_error(const fs::path& file, std::size_t offset, const std::string& what) {
  throw Error(ErrorKind::Format,
              file.string() + " at byte " + std::to_string(offset) + ": " + what);
}

std::vector<std::uint8_t> read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::Data, "cannot open " + file.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const fs::path& file) {
  if (bytes.size() < offset + 4) format_error(file, offset, "truncated header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

char hex_digit(unsigned v) { return "0123456789abcdef"[v & 0xF]; }

std::string hex32(std::uint32_t v) {
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += hex_digit(v >> shift);
  return s;
}

void finish_labels(Dataset& d, std::size_t classes, const std::string& source) {
  int max_label = -1;
  for (int y : d.labels) max_label = std::max(max_label, y);
  d.classes = classes != 0 ? classes : static_cast<std::size_t>(max_label + 1);
  if (max_label >= 0 && static_cast<std::size_t>(max_label) >= d.classes) {
    throw Error(ErrorKind::Data, source + ": label " + std::to_string(max_label) +
                                     " is not below the class count " +
                                     std::to_string(d.classes));
  }
}

}  // namespace

Dataset load_idx_images(const fs::path& images) {
  const auto img = read_file(images);

  Dataset d;
  const std::uint32_t img_magic = read_be32(img, 0, images);
  std::size_t header = 0;
  if (img_magic == kIdxImages3) {
    d.count = read_be32(img, 4, images);
    d.height = read_be32(img, 8, images);
    d.width = read_be32(img, 12, images);
    d.channels = 1;
    header = 16;
  } else if (img_magic == kIdxImages4) {
    d.count = read_be32(img, 4, images);
    d.height = read_be32(img, 8, images);
    d.width = read_be32(img, 12, images);
    d.channels = read_be32(img, 16, images);
    header = 20;
  } else {
    format_error(images, 0, "wrong magic " + hex32(img_magic) + ", expected image magic " +
                                hex32(kIdxImages3) + " or " + hex32(kIdxImages4));
  }
  if (d.height == 0 || d.width == 0 || d.channels == 0) {
    format_error(images, 8, "zero image dimension");
  }

  const std::size_t payload = d.count * d.image_size();
  if (img.size() != header + payload) {
    format_error(images, std::min(img.size(), header + payload),
                 "payload is " + std::to_string(img.size() - header) + " bytes, header declares " +
                     std::to_string(payload));
  }
  d.raw.assign(img.begin() + static_cast<std::ptrdiff_t>(header), img.end());
  return d;
}

Dataset load_idx(const fs::path& images, const fs::path& labels, std::size_t classes) {
  Dataset d = load_idx_images(images);
  const auto lab = read_file(labels);

  const std::uint32_t lab_magic = read_be32(lab, 0, labels);
  if (lab_magic != kIdxLabels) {
    format_error(labels, 0, "wrong magic " + hex32(lab_magic) + ", expected label magic " +
                                hex32(kIdxLabels));
  }
  const std::size_t n_labels = read_be32(lab, 4, labels);
  if (lab.size() != 8 + n_labels) {
    format_error(labels, std::min(lab.size(), 8 + n_labels),
                 "payload is " + std::to_string(lab.size() - 8) + " bytes, header declares " +
                     std::to_string(n_labels));
  }
  if (n_labels != d.count) {
    format_error(labels, 4, "declares " + std::to_string(n_labels) + " labels but " +
                                images.string() + " declares " + std::to_string(d.count) +
                                " images");
  }

  d.labels.assign(lab.begin() + 8, lab.end());
  finish_labels(d, classes, labels.string());
  return d;
}

void save_idx(const Dataset& data, const fs::path& images, const fs::path& labels) {
  if (data.raw.size() != data.count * data.image_size() || data.labels.size() != data.count) {
    throw Error(ErrorKind::Data, "save_idx: dataset has inconsistent sizes");
  }
  {
    std::ofstream out(images, std::ios::binary);
    if (!out) throw Error(ErrorKind::Data, "cannot write " + images.string());
    const bool gray = data.channels == 1;
    put_be32(out, gray ? kIdxImages3 : kIdxImages4);
    put_be32(out, static_cast<std::uint32_t>(data.count));
    put_be32(out, static_cast<std::uint32_t>(data.height));
    put_be32(out, static_cast<std::uint32_t>(data.width));
    if (!gray) put_be32(out, static_cast<std::uint32_t>(data.channels));
    out.write(reinterpret_cast<const char*>(data.raw.data()),
              static_cast<std::streamsize>(data.raw.size()));
  }
  std::ofstream out(labels, std::ios::binary);
  if (!out) throw Error(ErrorKind::Data, "cannot write " + labels.string());
  put_be32(out, kIdxLabels);
  put_be32(out, static_cast<std::uint32_t>(data.count));
  for (int y : data.labels) out.put(static_cast<char>(y));
}

Dataset load_cifar_files(std::span<const fs::path> files, CifarVariant variant) {
  const std::size_t label_bytes = variant == CifarVariant::Cifar10 ? 1 : 2;
  const std::size_t record = label_bytes + kCifarPixels;
  const std::size_t plane = kCifarSide * kCifarSide;

  Dataset d;
  d.height = d.width = kCifarSide;
  d.channels = 3;
  for (const fs::path& file : files) {
    const auto bytes = read_file(file);
    if (bytes.size() % record != 0) {
      format_error(file, bytes.size() - bytes.size() % record,
                   "size " + std::to_string(bytes.size()) + " is not a multiple of the " +
                       std::to_string(record) + "-byte record");
    }
    for (std::size_t off = 0; off < bytes.size(); off += record) {
      d.labels.push_back(bytes[off + label_bytes - 1]);  // CIFAR-100: fine label is second
      const std::uint8_t* px = &bytes[off + label_bytes];
      for (std::size_t i = 0; i < plane; ++i) {
        for (std::size_t ch = 0; ch < 3; ++ch) d.raw.push_back(px[ch * plane + i]);
      }
    }
  }
  d.count = d.labels.size();
  finish_labels(d, variant == CifarVariant::Cifar10 ? 10 : 100, "CIFAR labels");
  return d;
}

Dataset load_cifar(const fs::path& dir, CifarVariant variant, Split split) {
  std::vector<fs::path> files;
  if (variant == CifarVariant::Cifar10) {
    if (split == Split::Train) {
      for (int i = 1; i <= 5; ++i) files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
    } else {
      files.push_back(dir / "test_batch.bin");
    }
  } else {
    files.push_back(dir / (split == Split::Train ? "train.bin" : "test.bin"));
  }
  for (const auto& f : files) {
    if (!fs::exists(f)) throw Error(ErrorKind::Data, "missing CIFAR batch file " + f.string());
  }
  return load_cifar_files(files, variant);
}

Dataset normalize(Dataset data) {
  if (data.normalized) throw Error(ErrorKind::Data, "dataset is already normalized");
  data.pixels.resize(data.raw.size());
  for (std::size_t i = 0; i < data.raw.size(); ++i) data.pixels[i] = data.raw[i] / 255.0;
  data.normalized = true;
  return data;
}

Dataset head(const Dataset& data, std::size_t n) {
  if (n == 0 || n >= data.count) return data;
  Dataset d = data;
  d.count = n;
  d.raw.resize(n * data.image_size());
  d.labels.resize(n);
  if (d.normalized) d.pixels.resize(n * data.image_size());
  return d;
}

void AugmentSpec::validate() const {
  if (max_shift < 0 || max_shift > 2) {
    throw Error(ErrorKind::Configuration, "augment_shift must be in [0, 2]");
  }
  if (!(max_rotation_deg >= 0.0 && max_rotation_deg <= 15.0)) {
    throw Error(ErrorKind::Configuration, "augment_rotation must be in [0, 15] degrees");
  }
  if (!(invert_prob >= 0.0 && invert_prob <= 1.0)) {
    throw Error(ErrorKind::Configuration, "augment_invert_prob must be in [0, 1]");
  }
}

std::vector<double> shift_image(std::span<const double> image, std::size_t height,
                                std::size_t width, std::size_t channels, int dx, int dy) {
  std::vector<double> out(image.size(), 0.0);
  const auto h = static_cast<long>(height);
  const auto w = static_cast<long>(width);
  for (long r = 0; r < h; ++r) {
    const long sr = r - dy;
    if (sr < 0 || sr >= h) continue;
    for (long c = 0; c < w; ++c) {
      const long sc = c - dx;
      if (sc < 0 || sc >= w) continue;
      for (std::size_t ch = 0; ch < channels; ++ch) {
        out[(static_cast<std::size_t>(r * w + c)) * channels + ch] =
            image[(static_cast<std::size_t>(sr * w + sc)) * channels + ch];
      }
    }
  }
  return out;
}

std::vector<double> rotate_image(std::span<const double> image, std::size_t height,
                                 std::size_t width, std::size_t channels, double degrees) {
  if (degrees == 0.0) return {image.begin(), image.end()};
  std::vector<double> out(image.size(), 0.0);
  const double theta = degrees * std::numbers::pi / 180.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      // Inverse map each destination pixel back to its source.
      const double y = static_cast<double>(r) - cy;
      const double x = static_cast<double>(c) - cx;
      const long sr = std::lround(ct * y - st * x + cy);
      const long sc = std::lround(st * y + ct * x + cx);
      if (sr < 0 || sc < 0 || sr >= static_cast<long>(height) || sc >= static_cast<long>(width)) {
        continue;
      }
      for (std::size_t ch = 0; ch < channels; ++ch) {
        out[(r * width + c) * channels + ch] =
            image[(static_cast<std::size_t>(sr) * width + static_cast<std::size_t>(sc)) * channels + ch];
      }
    }
  }
  return out;
}

std::vector<double> invert_image(std::span<const double> image) {
  std::vector<double> out(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = 1.0 - image[i];
  return out;
}

std::vector<double> augment(std::span<const double> image, std::size_t height,
                            std::size_t width, std::size_t channels, const AugmentSpec& spec,
                            Rng& rng) {
  spec.validate();
  std::vector<double> out(image.begin(), image.end());
  if (spec.max_rotation_deg > 0.0) {
    const double deg = rng.uniform(-spec.max_rotation_deg, spec.max_rotation_deg);
    out = rotate_image(out, height, width, channels, deg);
  }
  if (spec.max_shift > 0) {
    const auto span = static_cast<std::uint64_t>(2 * spec.max_shift + 1);
    const int dx = static_cast<int>(rng.below(span)) - spec.max_shift;
    const int dy = static_cast<int>(rng.below(span)) - spec.max_shift;
    out = shift_image(out, height, width, channels, dx, dy);
  }
  if (spec.invert_prob > 0.0 && rng.bernoulli(spec.invert_prob)) out = invert_image(out);
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x5348554646ULL, epoch));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

BatchSequence::BatchSequence(const Dataset& data, const BatchPlan& plan)
    : data_(&data), batch_size_(plan.batch_size) {
  if (batch_size_ < 1) throw Error(ErrorKind::Configuration, "batch_size must be >= 1");
  if (!data.normalized) throw Error(ErrorKind::Data, "batches require a normalized dataset");
  order_ = epoch_order(data.count, plan.seed, plan.epoch);
}

std::size_t BatchSequence::size() const noexcept {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

Batch BatchSequence::operator[](std::size_t i) const {
  const std::size_t begin = i * batch_size_;
  const std::size_t end = std::min(order_.size(), begin + batch_size_);
  return gather(*data_, std::span<const std::size_t>(order_).subspan(begin, end - begin));
}

BatchSequence batches(const Dataset& data, const BatchPlan& plan) { return {data, plan}; }

Batch gather(const Dataset& data, std::span<const std::size_t> indices) {
  if (!data.normalized) throw Error(ErrorKind::Data, "gather requires a normalized dataset");
  Batch b;
  b.images = Matrix(indices.size(), data.image_size());
  b.labels.reserve(indices.size());
  b.indices.assign(indices.begin(), indices.end());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t idx = indices[r];
    if (idx >= data.count) throw Error(ErrorKind::Data, "sample index out of range");
    auto src = data.image(idx);
    std::copy(src.begin(), src.end(), b.images.row(r).begin());
    b.labels.push_back(data.labels[idx]);
  }
  return b;
}

Dataset synthetic_halves(std::size_t count, std::size_t side, std::uint64_t seed) {
  Dataset d;
  d.count = count;
  d.height = d.width = side;
  d.channels = 1;
  d.classes = 2;
  d.raw.resize(count * side * side);
  d.labels.resize(count);
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % 2);
    d.labels[i] = label;
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        const bool left = c < side / 2;
        const bool bright = (label == 0) == left;
        const double base = bright ? 170.0 : 20.0;
        const double v = base + rng.uniform(0.0, 60.0);
        d.raw[(i * side + r) * side + c] = static_cast<std::uint8_t>(v);
      }
    }
  }
  return d;
}

}  // namespace wavenet
