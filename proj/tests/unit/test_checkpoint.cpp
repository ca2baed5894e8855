#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"
#include "wavenet/error.hpp"
#include "wavenet/trainer.hpp"

using namespace wavenet;
namespace fs = std::filesystem;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.network.paths = 2;
  c.network.input = {8, 8, 1};
  c.network.fc_widths = {6, 5};
  c.network.classes = 2;
  c.epochs = 3;
  c.batch_size = 16;
  c.seed = 41;
  return c;
}

Dataset smoke_data(std::size_t n, std::uint64_t seed) { return normalize(synthetic_halves(n, 8, seed)); }

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint trained_state() {
  const TrainConfig c = small_config();
  Checkpoint s = init_run(c, 1);
  train_epoch(s, smoke_data(40, 5), c);
  s.history.push_back({1, 1, 0.693, 0.5, 0.55, 0.01, 0.0});
  return s;
}

std::string format_message(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Format);
    return e.what();
  }
  ADD_FAILURE() << "decode succeeded";
  return {};
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitwise) {
  const Checkpoint s = trained_state();
  const fs::path dir = test::fresh_temp_dir("ckpt_roundtrip");
  save_checkpoint(s, dir / "a.ckpt");
  EXPECT_TRUE(fs::exists(dir / "a.ckpt.json"));
  const Checkpoint l = load_checkpoint(dir / "a.ckpt");
  EXPECT_EQ(l.config, s.config);
  EXPECT_EQ(l.params, s.params);
  EXPECT_EQ(l.adam.m, s.adam.m);
  EXPECT_EQ(l.adam.v, s.adam.v);
  EXPECT_EQ(l.adam.t, s.adam.t);
  EXPECT_EQ(l.run, s.run);
  EXPECT_EQ(l.seed, s.seed);
  EXPECT_EQ(l.epoch, s.epoch);
  EXPECT_EQ(l.history, s.history);

  save_checkpoint(l, dir / "b.ckpt");
  EXPECT_EQ(read_bytes(dir / "a.ckpt"), read_bytes(dir / "b.ckpt"));
}

TEST(Checkpoint, LayoutStartsWithMagicAndVersion) {
  const auto bytes = encode_checkpoint(trained_state());
  ASSERT_GT(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "WAVENETC");
  EXPECT_EQ(get_u32(bytes, 8), kCheckpointVersion);
}

TEST(Checkpoint, TruncationIsCorruptLength) {
  const auto bytes = encode_checkpoint(trained_state());
  for (std::size_t keep : {std::size_t{4}, std::size_t{11}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep));
    const std::string msg = format_message(cut);
    EXPECT_NE(msg.find("corrupt"), std::string::npos) << keep << ": " << msg;
  }
  const fs::path dir = test::fresh_temp_dir("ckpt_trunc");
  write_bytes(dir / "t.ckpt", std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 9));
  EXPECT_THROW(load_checkpoint(dir / "t.ckpt"), Error);
}

TEST(Checkpoint, VersionMismatch) {
  auto bytes = encode_checkpoint(trained_state());
  put_u32(bytes, 8, kCheckpointVersion + 1);
  EXPECT_NE(format_message(bytes).find("version"), std::string::npos);
}

TEST(Checkpoint, BadMagic) {
  auto bytes = encode_checkpoint(trained_state());
  bytes[0] = 'X';
  format_message(bytes);
}

TEST(Checkpoint, UnknownParameterName) {
  auto bytes = encode_checkpoint(trained_state());
  const std::uint32_t meta_len = get_u32(bytes, 12);
  const std::size_t first_record = 16 + meta_len + 4;
  const std::uint32_t name_len = get_u32(bytes, first_record);
  const std::string name(bytes.begin() + first_record + 4, bytes.begin() + first_record + 4 + name_len);
  ASSERT_EQ(name.rfind("param/", 0), 0u) << name;
  bytes[first_record + 4 + name_len - 1] = '~';
  EXPECT_NE(format_message(bytes).find("unknown"), std::string::npos);
}

TEST(Checkpoint, TrailingBytesRejected) {
  auto bytes = encode_checkpoint(trained_state());
  bytes.push_back(0);
  format_message(bytes);
}

TEST(Checkpoint, ResumeMatchesUninterruptedTraining) {
  const TrainConfig c = small_config();
  const Dataset data = smoke_data(50, 9);

  Checkpoint straight = init_run(c, 0);
  train_epoch(straight, data, c);
  train_epoch(straight, data, c);

  Checkpoint first = init_run(c, 0);
  train_epoch(first, data, c);
  const fs::path dir = test::fresh_temp_dir("ckpt_resume");
  save_checkpoint(first, dir / "e1.ckpt");
  Checkpoint resumed = load_checkpoint(dir / "e1.ckpt");
  train_epoch(resumed, data, c);

  EXPECT_EQ(resumed.epoch, 2u);
  EXPECT_EQ(resumed.params, straight.params);
  EXPECT_EQ(resumed.adam.m, straight.adam.m);
  EXPECT_EQ(resumed.adam.v, straight.adam.v);
  EXPECT_EQ(resumed.adam.t, straight.adam.t);
}
