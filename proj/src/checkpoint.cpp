#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "json_io.hpp"
#include "wavenet/error.hpp"
#include "wavenet/trainer.hpp"

namespace wavenet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'W', 'A', 'V', 'E', 'N', 'E', 'T', 'C'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) {
      throw Error(ErrorKind::Format, "corrupt checkpoint length: needs " + std::to_string(n) +
                                         " bytes at offset " + std::to_string(pos_) + ", " +
                                         std::to_string(b_.size() - pos_) + " remain");
    }
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

json metadata(const Checkpoint& s) {
  json history = json::array();
  for (const MetricsRow& r : s.history) {
    history.push_back({{"run", r.run},
                       {"epoch", r.epoch},
                       {"train_loss", r.train_loss},
                       {"train_acc", r.train_acc},
                       {"test_acc", r.test_acc},
                       {"lr", r.lr},
                       {"seconds", r.seconds}});
  }
  return {{"format_version", kCheckpointVersion},
          {"network", detail::network_to_json(s.config)},
          {"run", s.run},
          {"seed", s.seed},
          {"epoch", s.epoch},
          {"adam_step", s.adam.t},
          {"history", history}};
}

void write_records(Writer& w, const std::string& prefix, const ParamSet& set) {
  for (const ParamArray& a : set) {
    w.str(prefix + a.name);
    w.u32(static_cast<std::uint32_t>(a.shape.size()));
    for (std::size_t d : a.shape) w.u64(d);
    for (double v : a.values) w.f64(v);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& state) {
  check_parameters(state.config, state.params);
  if (!state.params.same_layout(state.adam.m) || !state.params.same_layout(state.adam.v)) {
    throw Error(ErrorKind::Configuration, "optimizer state does not match the parameters");
  }
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.str(metadata(state).dump());
  w.u32(static_cast<std::uint32_t>(3 * state.params.size()));
  write_records(w, "param/", state.params);
  write_records(w, "adam.m/", state.adam.m);
  write_records(w, "adam.v/", state.adam.v);
  return w.take();
}

void save_checkpoint(const Checkpoint& state, const fs::path& path) {
  const auto bytes = encode_checkpoint(state);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Data, "cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Data, "short write to checkpoint " + path.string());
  }
  std::ofstream side(path.string() + ".json", std::ios::trunc);
  side << metadata(state).dump(2) << '\n';
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.bytes(sizeof kMagic);
  if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::Format, "not a wavenet checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::Format, "checkpoint format version " + std::to_string(version) +
                                       " is not supported (expected " +
                                       std::to_string(kCheckpointVersion) + ")");
  }

  json meta;
  try {
    meta = json::parse(r.str());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("checkpoint metadata: ") + e.what());
  }

  Checkpoint s;
  try {
    s.config = detail::network_from_json(meta.at("network"));
    s.run = meta.at("run").get<std::size_t>();
    s.seed = meta.at("seed").get<std::uint64_t>();
    s.epoch = meta.at("epoch").get<std::size_t>();
    s.adam.t = meta.at("adam_step").get<std::int64_t>();
    for (const json& h : meta.at("history")) {
      s.history.push_back({h.at("run").get<std::size_t>(), h.at("epoch").get<std::size_t>(),
                           h.at("train_loss").get<double>(), h.at("train_acc").get<double>(),
                           h.at("test_acc").get<double>(), h.at("lr").get<double>(),
                           h.at("seconds").get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("checkpoint metadata: ") + e.what());
  }
  try {
    s.config.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Format, std::string("checkpoint network config: ") + e.what());
  }

  s.params = make_parameters(s.config);
  s.adam.m = s.params.zeros_like();
  s.adam.v = s.params.zeros_like();
  std::map<std::string, std::pair<ParamSet*, std::size_t>> slots;
  for (std::size_t i = 0; i < s.params.size(); ++i) {
    slots["param/" + s.params[i].name] = {&s.params, i};
    slots["adam.m/" + s.params[i].name] = {&s.adam.m, i};
    slots["adam.v/" + s.params[i].name] = {&s.adam.v, i};
  }

  const std::uint32_t records = r.u32();
  if (records != slots.size()) {
    throw Error(ErrorKind::Format, "checkpoint holds " + std::to_string(records) +
                                       " arrays, configuration needs " +
                                       std::to_string(slots.size()));
  }
  for (std::uint32_t k = 0; k < records; ++k) {
    const std::string name = r.str();
    auto it = slots.find(name);
    if (it == slots.end()) throw Error(ErrorKind::Format, "unknown checkpoint array '" + name + "'");
    auto [set, index] = it->second;
    slots.erase(it);
    ParamArray& a = (*set)[index];

    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(r.u64());
    if (shape != a.shape) throw Error(ErrorKind::Format, "checkpoint array '" + name + "' has the wrong shape");
    for (double& v : a.values) v = r.f64();
  }
  if (!r.done()) {
    throw Error(ErrorKind::Format, "corrupt checkpoint length: trailing bytes at offset " +
                                       std::to_string(r.position()));
  }
  return s;
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Format, "cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  try {
    return decode_checkpoint(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace wavenet
