// wavenet: train, evaluate and inspect learnable-wavelet networks.
//
//   wavenet train     --config run.json [--epochs N] [--seed S] [--set key=value]...
//   wavenet eval      --checkpoint run0_best.ckpt --images t10k-images --labels t10k-labels
//   wavenet filters   --alpha 1.0 --beta 2.0
//   wavenet decompose --checkpoint run0_best.ckpt --images t10k-images --index 0 --out dir
//
// Exit codes: 0 success, 1 configuration/usage error, 2 data error,
// 3 numeric divergence.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wavenet/config.hpp"
#include "wavenet/data.hpp"
#include "wavenet/error.hpp"
#include "wavenet/filters.hpp"
#include "wavenet/network.hpp"
#include "wavenet/pgm.hpp"
#include "wavenet/trainer.hpp"

namespace fs = std::filesystem;
using namespace wavenet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitDiverged = 3;

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Data:
    case ErrorKind::Format: return kExitData;
    case ErrorKind::Divergence: return kExitDiverged;
    default: return kExitConfig;
  }
}

// Checkpoint problems are reported as configuration errors regardless of kind.
Checkpoint open_checkpoint(const fs::path& path) {
  try {
    return load_checkpoint(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::Configuration, e.what());
  }
}

std::string fixed12(double v) {
  if (v == 0.0) v = 0.0;  // no "-0.000000000000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", v);
  return buf;
}

std::string join_taps(const Taps& taps) {
  std::string s;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    if (i) s += ',';
    s += fixed12(taps[i]);
  }
  return s;
}

struct TrainArgs {
  std::string config;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repeats;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> paths;
  std::optional<std::size_t> train_subset;
  std::optional<std::string> output_dir;
  std::vector<std::string> sets;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig config = load_train_config(a.config);
  if (a.epochs) config.epochs = *a.epochs;
  if (a.seed) config.seed = *a.seed;
  if (a.repeats) config.repeats = *a.repeats;
  if (a.batch_size) config.batch_size = *a.batch_size;
  if (a.paths) config.network.paths = *a.paths;
  if (a.train_subset) config.train_subset = *a.train_subset;
  if (a.output_dir) config.output_dir = *a.output_dir;
  for (const std::string& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Configuration, "--set expects key=value, got '" + kv + "'");
    }
    apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();

  const TrainData data = load_train_data(config);
  if (!a.quiet) {
    std::cout << "train " << data.train.count << " samples, test " << data.test.count
              << " samples, " << param_count(config.network) << " parameters" << std::endl;
  }
  const TrainReport report = train(config, data, a.quiet ? nullptr : &std::cout);
  if (!a.quiet) std::cout << "metrics: " << report.metrics_csv.string() << std::endl;
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& images, const std::string& labels) {
  const Checkpoint ckpt = open_checkpoint(checkpoint);
  const Dataset data = normalize(load_idx(images, labels));
  const EvalResult r = evaluate(ckpt, data);
  std::printf("accuracy=%.6f error_pct=%.2f\n", r.accuracy, 100.0 * (1.0 - r.accuracy));
  return kExitOk;
}

int cmd_filters(double alpha, double beta) {
  const FilterPair f = make_filters({alpha, beta});
  const ConditionReport r = check_qmf(f, 1e-10);
  std::cout << "h = " << join_taps(f.lowpass) << '\n';
  std::cout << "h1 = " << join_taps(f.highpass) << '\n';
  std::printf("sum_residual=%.3e norm_residual=%.3e shift2_residual=%.3e %s\n", r.sum_residual,
              r.norm_residual, r.shift2_residual, r.pass ? "pass" : "fail");
  return kExitOk;
}

int cmd_decompose(const std::string& checkpoint, const std::string& images, std::size_t index,
                  const std::string& out_dir) {
  const Checkpoint ckpt = open_checkpoint(checkpoint);
  const Dataset data = normalize(load_idx_images(images));
  const NetworkConfig& net = ckpt.config;
  if (index >= data.count) {
    throw Error(ErrorKind::Configuration, "--index " + std::to_string(index) + " out of range (" +
                                              std::to_string(data.count) + " images)");
  }
  if (data.height != net.input.height || data.width != net.input.width ||
      data.channels != net.input.channels) {
    throw Error(ErrorKind::Configuration, "image shape does not match the checkpoint network");
  }

  // All validation is done; compute everything before touching the filesystem.
  std::vector<std::vector<FeatureMap>> per_path;
  for (std::size_t p = 0; p < net.paths; ++p) {
    per_path.push_back(path_decomposition(data.image(index), net, ckpt.params, p));
  }

  fs::create_directories(out_dir);
  constexpr char kBands[4] = {'A', 'H', 'V', 'D'};
  std::size_t files = 0;
  for (std::size_t p = 0; p < per_path.size(); ++p) {
    for (std::size_t l = 0; l < per_path[p].size(); ++l) {
      const FeatureMap& fm = per_path[p][l];
      for (std::size_t k = 0; k < fm.depth(); ++k) {
        const std::string name = "path" + std::to_string(p) + "_level" + std::to_string(l + 1) +
                                 "_" + kBands[k % 4] + "_ch" + std::to_string(k / 4) + ".pgm";
        write_pgm(fs::path(out_dir) / name, fm.channels[k]);
        ++files;
      }
    }
  }
  std::cout << "wrote " << files << " files to " << out_dir << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learnable-wavelet multi-path network: training, evaluation and inspection"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train (and repeat-train) a network from a config file");
  train_cmd->add_option("--config", train_args.config, "JSON config file")->required();
  train_cmd->add_option("--epochs", train_args.epochs, "Override epochs");
  train_cmd->add_option("--seed", train_args.seed, "Override base seed");
  train_cmd->add_option("--repeats", train_args.repeats, "Override number of repeat runs");
  train_cmd->add_option("--batch-size", train_args.batch_size, "Override batch size");
  train_cmd->add_option("--paths", train_args.paths, "Override number of wavelet paths");
  train_cmd->add_option("--train-subset", train_args.train_subset, "Use the first N training samples");
  train_cmd->add_option("--output-dir", train_args.output_dir, "Override output directory");
  train_cmd->add_option("--set", train_args.sets, "Override any config key: key=value");
  train_cmd->add_flag("--quiet", train_args.quiet, "No progress output");

  std::string eval_ckpt, eval_images, eval_labels;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on an IDX dataset");
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--images", eval_images)->required();
  eval_cmd->add_option("--labels", eval_labels)->required();

  double alpha = 0.0, beta = 0.0;
  auto* filters_cmd = app.add_subcommand("filters", "Print the filter pair for (alpha, beta)");
  filters_cmd->add_option("--alpha", alpha)->required();
  filters_cmd->add_option("--beta", beta)->required();

  std::string dec_ckpt, dec_images, dec_out;
  std::size_t dec_index = 0;
  auto* dec_cmd = app.add_subcommand("decompose", "Export every subband of one image as PGM files");
  dec_cmd->add_option("--checkpoint", dec_ckpt)->required();
  dec_cmd->add_option("--images", dec_images)->required();
  dec_cmd->add_option("--index", dec_index)->required();
  dec_cmd->add_option("--out", dec_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*eval_cmd) return cmd_eval(eval_ckpt, eval_images, eval_labels);
    if (*filters_cmd) return cmd_filters(alpha, beta);
    if (*dec_cmd) return cmd_decompose(dec_ckpt, dec_images, dec_index, dec_out);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << std::endl;
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitData;
  }
  return kExitConfig;
}
