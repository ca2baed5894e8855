#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <set>

#include "test_support.hpp"
#include "wavenet/data.hpp"
#include "wavenet/error.hpp"

using namespace wavenet;
namespace fs = std::filesystem;

namespace {

using Bytes = std::vector<std::uint8_t>;

void put_be32(Bytes& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void write_bytes(const fs::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Bytes read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

// Two 2x3 images with labels 7 and 2.
const Bytes kPixels = {0, 1, 2, 3, 4, 255, 10, 20, 30, 40, 50, 60};

Bytes idx_images(std::uint32_t magic = 0x803, std::uint32_t n = 2) {
  Bytes b;
  put_be32(b, magic);
  put_be32(b, n);
  put_be32(b, 2);
  put_be32(b, 3);
  b.insert(b.end(), kPixels.begin(), kPixels.end());
  return b;
}

Bytes idx_labels(std::uint32_t magic = 0x801, Bytes labels = {7, 2}) {
  Bytes b;
  put_be32(b, magic);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::State;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(IdxLoader, FixtureRoundTrip) {
  const fs::path dir = test::fresh_temp_dir("idx_roundtrip");
  write_bytes(dir / "img", idx_images());
  write_bytes(dir / "lbl", idx_labels());
  const Dataset d = load_idx(dir / "img", dir / "lbl");
  EXPECT_EQ(d.count, 2u);
  EXPECT_EQ(d.height, 2u);
  EXPECT_EQ(d.width, 3u);
  EXPECT_EQ(d.channels, 1u);
  EXPECT_EQ(d.classes, 8u);
  EXPECT_EQ(d.raw, kPixels);
  EXPECT_EQ(d.labels, (std::vector<int>{7, 2}));

  save_idx(d, dir / "img2", dir / "lbl2");
  EXPECT_EQ(read_bytes(dir / "img2"), idx_images());
  EXPECT_EQ(read_bytes(dir / "lbl2"), idx_labels());
}

TEST(IdxLoader, ExplicitClassCountChecksLabels) {
  const fs::path dir = test::fresh_temp_dir("idx_classes");
  write_bytes(dir / "img", idx_images());
  write_bytes(dir / "lbl", idx_labels());
  EXPECT_EQ(load_idx(dir / "img", dir / "lbl", 10).classes, 10u);
  EXPECT_THROW(load_idx(dir / "img", dir / "lbl", 5), Error);
}

TEST(IdxLoader, WrongMagicNamesOffset) {
  const fs::path dir = test::fresh_temp_dir("idx_magic");
  write_bytes(dir / "img", idx_images());
  write_bytes(dir / "lbl", idx_labels(0x803));
  const auto call = [&] { load_idx(dir / "img", dir / "lbl"); };
  EXPECT_EQ(kind_of(call), ErrorKind::Format);
  EXPECT_NE(message_of(call).find("at byte 0"), std::string::npos) << message_of(call);
}

TEST(IdxLoader, TruncatedPayload) {
  const fs::path dir = test::fresh_temp_dir("idx_trunc");
  Bytes img = idx_images();
  img.resize(img.size() - 1);
  write_bytes(dir / "img", img);
  write_bytes(dir / "lbl", idx_labels());
  const auto call = [&] { load_idx(dir / "img", dir / "lbl"); };
  EXPECT_EQ(kind_of(call), ErrorKind::Format);
  EXPECT_NE(message_of(call).find("at byte"), std::string::npos);
}

TEST(IdxLoader, CountMismatch) {
  const fs::path dir = test::fresh_temp_dir("idx_count");
  write_bytes(dir / "img", idx_images());
  write_bytes(dir / "lbl", idx_labels(0x801, {1, 2, 3}));
  EXPECT_EQ(kind_of([&] { load_idx(dir / "img", dir / "lbl"); }), ErrorKind::Format);
}

TEST(IdxLoader, MissingFileIsDataError) {
  EXPECT_EQ(kind_of([] { load_idx("/nonexistent/a", "/nonexistent/b"); }), ErrorKind::Data);
}

TEST(IdxLoader, MnistFiles) {
  const auto dir = test::mnist_dir();
  if (dir.empty()) GTEST_SKIP() << "WAVENET_MNIST_DIR not set";
  const Dataset train =
      normalize(load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte"));
  EXPECT_EQ(train.count, 60000u);
  EXPECT_EQ(train.height, 28u);
  EXPECT_EQ(train.width, 28u);
  EXPECT_EQ(train.classes, 10u);
  const double mean =
      std::accumulate(train.pixels.begin(), train.pixels.end(), 0.0) / train.pixels.size();
  EXPECT_NEAR(mean, 0.1307, 0.001);
  const Dataset test = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
  EXPECT_EQ(test.count, 10000u);
}

namespace {

// One CIFAR record: red plane holds r, green g, blue b, except pixel (0,1).
Bytes cifar_record(Bytes label_bytes, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Bytes rec = label_bytes;
  for (std::uint8_t v : {r, g, b}) rec.insert(rec.end(), 1024, v);
  const std::size_t base = label_bytes.size();
  rec[base + 1] = 200;
  rec[base + 1024 + 1] = 201;
  rec[base + 2048 + 1] = 202;
  return rec;
}

}  // namespace

TEST(CifarLoader, Cifar10SingleRecordFixture) {
  const fs::path dir = test::fresh_temp_dir("cifar10");
  write_bytes(dir / "test_batch.bin", cifar_record({6}, 9, 8, 7));
  const Dataset d = load_cifar(dir, CifarVariant::Cifar10, Split::Test);
  ASSERT_EQ(d.count, 1u);
  EXPECT_EQ(d.height, 32u);
  EXPECT_EQ(d.width, 32u);
  EXPECT_EQ(d.channels, 3u);
  EXPECT_EQ(d.classes, 10u);
  EXPECT_EQ(d.labels[0], 6);
  EXPECT_EQ(d.raw[0], 9);
  EXPECT_EQ(d.raw[1], 8);
  EXPECT_EQ(d.raw[2], 7);
  EXPECT_EQ(d.raw[3], 200);
  EXPECT_EQ(d.raw[4], 201);
  EXPECT_EQ(d.raw[5], 202);
  EXPECT_EQ(d.raw[3 * 1023 + 2], 7);
}

TEST(CifarLoader, Cifar10TrainBatches) {
  const fs::path dir = test::fresh_temp_dir("cifar10_train");
  for (int k = 1; k <= 5; ++k) {
    Bytes batch = cifar_record({static_cast<std::uint8_t>(k)}, 1, 2, 3);
    const Bytes second = cifar_record({0}, 4, 5, 6);
    batch.insert(batch.end(), second.begin(), second.end());
    write_bytes(dir / ("data_batch_" + std::to_string(k) + ".bin"), batch);
  }
  const Dataset d = load_cifar(dir, CifarVariant::Cifar10, Split::Train);
  EXPECT_EQ(d.count, 10u);
  EXPECT_EQ(d.labels, (std::vector<int>{1, 0, 2, 0, 3, 0, 4, 0, 5, 0}));
}

TEST(CifarLoader, Cifar100UsesFineLabel) {
  const fs::path dir = test::fresh_temp_dir("cifar100");
  write_bytes(dir / "train.bin", cifar_record({3, 87}, 1, 2, 3));
  const Dataset d = load_cifar(dir, CifarVariant::Cifar100, Split::Train);
  EXPECT_EQ(d.classes, 100u);
  EXPECT_EQ(d.labels[0], 87);
  EXPECT_EQ(d.raw[0], 1);
}

TEST(CifarLoader, MisalignedSizeIsFormatError) {
  const fs::path dir = test::fresh_temp_dir("cifar_bad");
  Bytes rec = cifar_record({1}, 0, 0, 0);
  rec.pop_back();
  write_bytes(dir / "test_batch.bin", rec);
  EXPECT_EQ(kind_of([&] { load_cifar(dir, CifarVariant::Cifar10, Split::Test); }), ErrorKind::Format);
}

TEST(CifarLoader, LabelOutOfRange) {
  const fs::path dir = test::fresh_temp_dir("cifar_label");
  write_bytes(dir / "test_batch.bin", cifar_record({10}, 0, 0, 0));
  EXPECT_THROW(load_cifar(dir, CifarVariant::Cifar10, Split::Test), Error);
}

TEST(Normalize, EndpointsAndDoubleCall) {
  const fs::path dir = test::fresh_temp_dir("normalize");
  write_bytes(dir / "img", idx_images());
  write_bytes(dir / "lbl", idx_labels());
  const Dataset d = normalize(load_idx(dir / "img", dir / "lbl"));
  EXPECT_TRUE(d.normalized);
  EXPECT_EQ(d.pixels[0], 0.0);
  EXPECT_EQ(d.pixels[5], 1.0);
  EXPECT_DOUBLE_EQ(d.pixels[6], 10.0 / 255.0);
  for (double v : d.pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(kind_of([&] { normalize(d); }), ErrorKind::Data);
}

TEST(Augment, DisabledSpecIsIdentity) {
  const std::vector<double> img = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  Rng rng(1);
  EXPECT_EQ(augment(img, 2, 3, 1, AugmentSpec{}, rng), img);
}

TEST(Augment, InvertTwiceIsIdentity) {
  const std::vector<double> img = {0.0, 0.25, 0.5, 1.0};
  EXPECT_EQ(invert_image(invert_image(img)), img);
  EXPECT_EQ(invert_image(img), (std::vector<double>{1.0, 0.75, 0.5, 0.0}));
}

TEST(Augment, ShiftMovesColumnsAndZeroFills) {
  // 2x3 single channel
  const std::vector<double> img = {1, 2, 3, 4, 5, 6};
  EXPECT_EQ(shift_image(img, 2, 3, 1, 1, 0), (std::vector<double>{0, 1, 2, 0, 4, 5}));
  EXPECT_EQ(shift_image(img, 2, 3, 1, 0, 1), (std::vector<double>{0, 0, 0, 1, 2, 3}));
  // interleaved channels move together
  const std::vector<double> rgb = {1, 2, 3, 4, 5, 6};
  EXPECT_EQ(shift_image(rgb, 1, 2, 3, 1, 0), (std::vector<double>{0, 0, 0, 1, 2, 3}));
}

TEST(Augment, RotationByZeroIsIdentityAndQuarterTurnMovesCorner) {
  const std::vector<double> img = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_EQ(rotate_image(img, 3, 3, 1, 0.0), img);
  const auto r = rotate_image(img, 3, 3, 1, 90.0);
  EXPECT_EQ(r[4], 5.0);
  EXPECT_EQ(std::multiset<double>(r.begin(), r.end()), std::multiset<double>(img.begin(), img.end()));
}

TEST(Augment, OutOfRangeSpecRejected) {
  EXPECT_EQ(kind_of([] { AugmentSpec{3, 0.0, 0.0}.validate(); }), ErrorKind::Configuration);
  EXPECT_EQ(kind_of([] { AugmentSpec{0, 16.0, 0.0}.validate(); }), ErrorKind::Configuration);
  EXPECT_EQ(kind_of([] { AugmentSpec{0, 0.0, 1.5}.validate(); }), ErrorKind::Configuration);
  EXPECT_NO_THROW((AugmentSpec{2, 15.0, 0.5}.validate()));
}

TEST(Batches, SizesIncludeShortFinalBatch) {
  const Dataset d = normalize(synthetic_halves(10, 4, 1));
  const BatchSequence seq = batches(d, {3, 5, 0});
  ASSERT_EQ(seq.size(), 4u);
  std::vector<std::size_t> sizes;
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Batch b = seq[i];
    sizes.push_back(b.labels.size());
    EXPECT_EQ(b.images.rows(), b.labels.size());
    for (std::size_t k = 0; k < b.indices.size(); ++k) {
      seen.insert(b.indices[k]);
      EXPECT_EQ(b.labels[k], d.labels[b.indices[k]]);
      EXPECT_EQ(b.images(k, 0), d.image(b.indices[k])[0]);
    }
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 3, 3, 1}));
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Batches, OrderDependsOnSeedAndEpoch) {
  EXPECT_EQ(epoch_order(100, 7, 3), epoch_order(100, 7, 3));
  EXPECT_NE(epoch_order(100, 7, 0), epoch_order(100, 7, 1));
  EXPECT_NE(epoch_order(100, 7, 0), epoch_order(100, 8, 0));
  auto order = epoch_order(100, 7, 0);
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(order[i], i);
}

TEST(Batches, LoaderKeepsFileOrder) {
  const Dataset d = synthetic_halves(6, 4, 3);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1, 0, 1, 0, 1}));
  EXPECT_EQ(head(d, 4).count, 4u);
  EXPECT_EQ(head(d, 0).count, 6u);
  EXPECT_EQ(head(d, 4).raw, std::vector<std::uint8_t>(d.raw.begin(), d.raw.begin() + 64));
}

TEST(SyntheticHalves, BrightSideMatchesLabel) {
  const Dataset d = synthetic_halves(20, 8, 4);
  for (std::size_t i = 0; i < d.count; ++i) {
    const auto img = d.raw_image(i);
    int left = 0, right = 0;
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t c = 0; c < 8; ++c) (c < 4 ? left : right) += img[r * 8 + c];
    EXPECT_EQ(d.labels[i] == 0, left > right);
  }
}
