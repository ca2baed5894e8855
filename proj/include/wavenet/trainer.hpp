#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wavenet/data.hpp"
#include "wavenet/network.hpp"
#include "wavenet/optim.hpp"
#include "wavenet/params.hpp"

namespace wavenet {

enum class DatasetKind { Idx, Cifar10, Cifar100 };

struct TrainConfig {
  NetworkConfig network;
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  LrSchedule schedule;
  AdamHyper adam;
  AugmentSpec augment;

  DatasetKind dataset = DatasetKind::Idx;
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  std::filesystem::path cifar_dir;
  std::size_t train_subset = 0;  // 0 = all samples
  std::size_t test_subset = 0;

  std::filesystem::path output_dir = "runs";
  std::size_t repeats = 1;
  bool log_wall_time = true;  // false writes 0 to the seconds column

  /// Config-only checks (no file access). Throws Error(Configuration).
  void validate() const;
  /// Dataset paths required by `dataset` are set.
  void validate_sources() const;
};

struct MetricsRow {
  std::size_t run = 0;
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double lr = 0.0;
  double seconds = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Everything needed to resume a run exactly.
struct Checkpoint {
  NetworkConfig config;
  ParamSet params;
  AdamState adam;
  std::size_t run = 0;
  std::uint64_t seed = 0;   // the run's seed (base seed + run)
  std::size_t epoch = 0;    // completed epochs
  std::vector<MetricsRow> history;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all integers and reals little-endian:
///   8 bytes  magic "WAVENETC"
///   u32      format version
///   u32 n, n bytes   metadata JSON (config, run, seed, epoch, adam step, history)
///   u32      record count
///   records: u32 name length, name, u32 rank, u64 dims[rank], f64 values[prod(dims)]
/// Parameter records are named "param/<array>", moments "adam.m/<array>" and
/// "adam.v/<array>". A pretty-printed copy of the metadata goes to `<path>.json`.
void save_checkpoint(const Checkpoint& state, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& state);

/// Throws Error(Format) on bad magic, version mismatch, corrupt lengths or
/// unknown/missing arrays. Never returns a partial state.
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

struct TrainData {
  Dataset train;
  Dataset test;
};

/// Loads, subsets and normalizes both splits, and checks them against the network shape.
TrainData load_train_data(const TrainConfig& config);

/// Fresh parameters and optimizer state for run `run` (seed = base + run).
Checkpoint init_run(const TrainConfig& config, std::size_t run);

/// One pass over `train` in the (seed, epoch) shuffle order. Advances state.epoch.
/// Throws Error(Divergence) on a non-finite loss.
EpochStats train_epoch(Checkpoint& state, const Dataset& train, const TrainConfig& config);

EvalResult evaluate(const NetworkConfig& config, const ParamSet& params, const Dataset& data);
/// Throws Error(Configuration) when the dataset shape or class count differs.
EvalResult evaluate(const Checkpoint& checkpoint, const Dataset& data);

struct RunResult {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  double final_test_acc = 0.0;
  double best_test_acc = 0.0;
  std::size_t best_epoch = 0;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
};

struct TrainReport {
  std::vector<RunResult> runs;
  std::vector<MetricsRow> metrics;
  double mean_final_test_acc = 0.0;
  double mean_best_test_acc = 0.0;
  std::filesystem::path metrics_csv;
  std::filesystem::path summary_json;
};

inline constexpr const char* kMetricsHeader = "run,epoch,train_loss,train_acc,test_acc,lr,seconds";

std::string format_metrics_row(const MetricsRow& row);

/// Runs `repeats` independent trainings and writes under output_dir:
///   metrics.csv, summary.json, run{r}_best.ckpt, run{r}_last.ckpt (+ .json sidecars).
/// Progress lines go to `log` when non-null.
TrainReport train(const TrainConfig& config, std::ostream* log = nullptr);
TrainReport train(const TrainConfig& config, const TrainData& data, std::ostream* log = nullptr);

}  // namespace wavenet
