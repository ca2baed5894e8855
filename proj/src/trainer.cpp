#include "wavenet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "wavenet/error.hpp"

namespace wavenet {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kInitStream = 0x494e4954;
constexpr std::uint64_t kDropoutStream = 0x44524f50;
constexpr std::uint64_t kAugmentStream = 0x4155474d;
constexpr std::size_t kEvalBatch = 256;

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::string parameter_norms(const ParamSet& params) {
  std::ostringstream os;
  for (const ParamArray& a : params) {
    double s = 0.0;
    for (double v : a.values) s += v * v;
    os << ' ' << a.name << '=' << std::sqrt(s);
  }
  return os.str();
}

void check_data_shape(const NetworkConfig& net, const Dataset& data, const char* which) {
  if (data.height != net.input.height || data.width != net.input.width ||
      data.channels != net.input.channels) {
    throw Error(ErrorKind::Configuration,
                std::string(which) + " images are " + std::to_string(data.height) + "x" +
                    std::to_string(data.width) + "x" + std::to_string(data.channels) +
                    ", network expects " + std::to_string(net.input.height) + "x" +
                    std::to_string(net.input.width) + "x" + std::to_string(net.input.channels));
  }
  if (data.classes > net.classes) {
    throw Error(ErrorKind::Configuration, std::string(which) + " data has " +
                                              std::to_string(data.classes) +
                                              " classes, network has " +
                                              std::to_string(net.classes));
  }
}

void write_metrics(const fs::path& file, const std::vector<MetricsRow>& rows) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Data, "cannot write " + file.string());
  out << kMetricsHeader << '\n';
  for (const MetricsRow& r : rows) out << format_metrics_row(r) << '\n';
}

}  // namespace

void TrainConfig::validate() const {
  network.validate();
  schedule.validate();
  augment.validate();
  if (epochs < 1) throw Error(ErrorKind::Configuration, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::Configuration, "batch_size must be >= 1");
  if (repeats < 1) throw Error(ErrorKind::Configuration, "repeats must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 &&
        adam.epsilon > 0.0)) {
    throw Error(ErrorKind::Configuration, "adam_beta1/adam_beta2 must be in [0, 1) and adam_epsilon > 0");
  }
  if (output_dir.empty()) throw Error(ErrorKind::Configuration, "output_dir must be set");
}

void TrainConfig::validate_sources() const {
  if (dataset == DatasetKind::Idx) {
    if (train_images.empty() || train_labels.empty() || test_images.empty() || test_labels.empty()) {
      throw Error(ErrorKind::Configuration,
                  "idx datasets need train_images, train_labels, test_images and test_labels");
    }
  } else if (cifar_dir.empty()) {
    throw Error(ErrorKind::Configuration, "CIFAR datasets need cifar_dir");
  }
}

TrainData load_train_data(const TrainConfig& config) {
  config.validate();
  config.validate_sources();
  TrainData d;
  switch (config.dataset) {
    case DatasetKind::Idx:
      d.train = load_idx(config.train_images, config.train_labels, config.network.classes);
      d.test = load_idx(config.test_images, config.test_labels, config.network.classes);
      break;
    case DatasetKind::Cifar10:
    case DatasetKind::Cifar100: {
      const auto v = config.dataset == DatasetKind::Cifar10 ? CifarVariant::Cifar10
                                                            : CifarVariant::Cifar100;
      d.train = load_cifar(config.cifar_dir, v, Split::Train);
      d.test = load_cifar(config.cifar_dir, v, Split::Test);
      break;
    }
  }
  d.train = normalize(head(d.train, config.train_subset));
  d.test = normalize(head(d.test, config.test_subset));
  check_data_shape(config.network, d.train, "training");
  check_data_shape(config.network, d.test, "test");
  return d;
}

Checkpoint init_run(const TrainConfig& config, std::size_t run) {
  Checkpoint s;
  s.config = config.network;
  s.run = run;
  s.seed = config.seed + run;
  Rng rng(derive_seed(s.seed, kInitStream));
  s.params = initialize_parameters(config.network, rng);
  s.adam = make_adam_state(s.params);
  return s;
}

EpochStats train_epoch(Checkpoint& state, const Dataset& train, const TrainConfig& config) {
  const NetworkConfig& net = state.config;
  const BatchSequence seq = batches(train, {config.batch_size, state.seed, state.epoch});
  Rng dropout_rng(derive_seed(state.seed, kDropoutStream, state.epoch));
  Rng augment_rng(derive_seed(state.seed, kAugmentStream, state.epoch));
  const double lr = lr_at(config.schedule, static_cast<double>(state.epoch));
  const bool augmenting = config.augment.enabled();

  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t bi = 0; bi < seq.size(); ++bi) {
    Batch batch = seq[bi];
    if (augmenting) {
      for (std::size_t r = 0; r < batch.images.rows(); ++r) {
        auto row = batch.images.row(r);
        const auto out = augment(row, train.height, train.width, train.channels, config.augment,
                                 augment_rng);
        std::copy(out.begin(), out.end(), row.begin());
      }
    }

    ForwardTrace trace;
    const Matrix logits =
        network_forward(batch.images, net, state.params, Mode::Train, dropout_rng, &trace);
    LossResult loss = softmax_xent(logits, batch.labels);
    if (!std::isfinite(loss.loss)) {
      throw Error(ErrorKind::Divergence,
                  "non-finite loss in run " + std::to_string(state.run) + " epoch " +
                      std::to_string(state.epoch + 1) + " batch " + std::to_string(bi) +
                      "; parameter norms:" + parameter_norms(state.params));
    }
    const ParamSet grads = network_backward(loss.grad_logits, trace, net, state.params);
    adam_step(state.params, grads, state.adam, lr, config.adam);

    loss_sum += loss.loss * static_cast<double>(batch.labels.size());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      if (argmax(logits.row(r)) == static_cast<std::size_t>(batch.labels[r])) ++correct;
    }
  }
  ++state.epoch;

  const double n = static_cast<double>(std::max<std::size_t>(train.count, 1));
  return {loss_sum / n, static_cast<double>(correct) / n};
}

EvalResult evaluate(const NetworkConfig& config, const ParamSet& params, const Dataset& data) {
  if (!data.normalized) throw Error(ErrorKind::Data, "evaluate requires a normalized dataset");
  check_data_shape(config, data, "evaluation");
  check_parameters(config, params);

  EvalResult r;
  r.total = data.count;
  r.confusion.assign(config.classes, std::vector<std::size_t>(config.classes, 0));
  Rng unused(0);
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < data.count; begin += kEvalBatch) {
    const std::size_t end = std::min(data.count, begin + kEvalBatch);
    idx.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) idx[i - begin] = i;
    const Batch b = gather(data, idx);
    const Matrix logits = network_forward(b.images, config, params, Mode::Eval, unused);
    for (std::size_t row = 0; row < logits.rows(); ++row) {
      const std::size_t pred = argmax(logits.row(row));
      const auto truth = static_cast<std::size_t>(b.labels[row]);
      ++r.confusion[truth][pred];
      if (pred == truth) ++r.correct;
    }
  }
  r.accuracy = r.total == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

EvalResult evaluate(const Checkpoint& checkpoint, const Dataset& data) {
  return evaluate(checkpoint.config, checkpoint.params, data);
}

std::string format_metrics_row(const MetricsRow& row) {
  std::ostringstream os;
  os.precision(17);
  os << row.run << ',' << row.epoch << ',' << row.train_loss << ',' << row.train_acc << ','
     << row.test_acc << ',' << row.lr << ',';
  os.precision(6);
  os << std::fixed << row.seconds;
  return os.str();
}

TrainReport train(const TrainConfig& config, std::ostream* log) {
  const TrainData data = load_train_data(config);
  return train(config, data, log);
}

TrainReport train(const TrainConfig& config, const TrainData& data, std::ostream* log) {
  config.validate();
  check_data_shape(config.network, data.train, "training");
  check_data_shape(config.network, data.test, "test");
  fs::create_directories(config.output_dir);

  TrainReport report;
  report.metrics_csv = config.output_dir / "metrics.csv";
  report.summary_json = config.output_dir / "summary.json";

  for (std::size_t run = 0; run < config.repeats; ++run) {
    Checkpoint state = init_run(config, run);
    RunResult result;
    result.run = run;
    result.seed = state.seed;
    result.best_test_acc = -1.0;
    result.best_checkpoint = config.output_dir / ("run" + std::to_string(run) + "_best.ckpt");
    result.last_checkpoint = config.output_dir / ("run" + std::to_string(run) + "_last.ckpt");

    for (std::size_t e = 0; e < config.epochs; ++e) {
      const auto t0 = std::chrono::steady_clock::now();
      const double lr = lr_at(config.schedule, static_cast<double>(state.epoch));
      const EpochStats stats = train_epoch(state, data.train, config);
      const EvalResult test = evaluate(state.config, state.params, data.test);
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;

      MetricsRow row{run,           state.epoch, stats.loss, stats.accuracy, test.accuracy, lr,
                     config.log_wall_time ? dt.count() : 0.0};
      state.history.push_back(row);
      report.metrics.push_back(row);
      write_metrics(report.metrics_csv, report.metrics);

      if (log != nullptr) {
        *log << "run " << run << " epoch " << state.epoch << "/" << config.epochs
             << " loss=" << stats.loss << " train_acc=" << stats.accuracy
             << " test_acc=" << test.accuracy << " lr=" << lr << " (" << dt.count() << " s)"
             << std::endl;
      }
      if (test.accuracy > result.best_test_acc) {
        result.best_test_acc = test.accuracy;
        result.best_epoch = state.epoch;
        save_checkpoint(state, result.best_checkpoint);
      }
      result.final_test_acc = test.accuracy;
    }
    save_checkpoint(state, result.last_checkpoint);
    report.runs.push_back(result);
  }

  for (const RunResult& r : report.runs) {
    report.mean_final_test_acc += r.final_test_acc;
    report.mean_best_test_acc += r.best_test_acc;
  }
  report.mean_final_test_acc /= static_cast<double>(report.runs.size());
  report.mean_best_test_acc /= static_cast<double>(report.runs.size());

  nlohmann::json summary;
  summary["runs"] = nlohmann::json::array();
  for (const RunResult& r : report.runs) {
    summary["runs"].push_back({{"run", r.run},
                               {"seed", r.seed},
                               {"final_test_acc", r.final_test_acc},
                               {"best_test_acc", r.best_test_acc},
                               {"best_epoch", r.best_epoch}});
  }
  summary["mean_final_test_acc"] = report.mean_final_test_acc;
  summary["mean_best_test_acc"] = report.mean_best_test_acc;
  std::ofstream(report.summary_json, std::ios::trunc) << summary.dump(2) << '\n';
  if (log != nullptr) {
    *log << "mean final test_acc=" << report.mean_final_test_acc
         << " mean best test_acc=" << report.mean_best_test_acc << std::endl;
  }
  return report;
}

}  // namespace wavenet
