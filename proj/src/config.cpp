#include "wavenet/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json_io.hpp"
#include "wavenet/error.hpp"

namespace wavenet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad_value(std::string_view key, const json& v, const char* expected) {
  throw Error(ErrorKind::Configuration, "config key '" + std::string(key) + "' expects " +
                                            expected + ", got " + v.dump());
}

std::size_t as_count(std::string_view key, const json& v) {
  if (!v.is_number_integer() || v.get<long long>() < 0) bad_value(key, v, "a non-negative integer");
  return v.get<std::size_t>();
}

double as_real(std::string_view key, const json& v) {
  if (!v.is_number()) bad_value(key, v, "a number");
  return v.get<double>();
}

bool as_bool(std::string_view key, const json& v) {
  if (!v.is_boolean()) bad_value(key, v, "true or false");
  return v.get<bool>();
}

fs::path as_path(std::string_view key, const json& v, const fs::path& base) {
  if (!v.is_string()) bad_value(key, v, "a path string");
  fs::path p = v.get<std::string>();
  if (p.is_relative() && !base.empty() && !p.empty()) p = base / p;
  return p;
}

using Setter = std::function<void(TrainConfig&, std::string_view, const json&, const fs::path&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"paths", [](auto& c, auto k, auto& v, auto&) { c.network.paths = as_count(k, v); }},
      {"levels", [](auto& c, auto k, auto& v, auto&) { c.network.levels = as_count(k, v); }},
      {"fc_widths",
       [](auto& c, auto k, auto& v, auto&) {
         if (!v.is_array()) bad_value(k, v, "an array of widths");
         c.network.fc_widths.clear();
         for (const auto& w : v) c.network.fc_widths.push_back(as_count(k, w));
       }},
      {"classes", [](auto& c, auto k, auto& v, auto&) { c.network.classes = as_count(k, v); }},
      {"input_height", [](auto& c, auto k, auto& v, auto&) { c.network.input.height = as_count(k, v); }},
      {"input_width", [](auto& c, auto k, auto& v, auto&) { c.network.input.width = as_count(k, v); }},
      {"input_channels",
       [](auto& c, auto k, auto& v, auto&) { c.network.input.channels = as_count(k, v); }},
      {"dropout_keep", [](auto& c, auto k, auto& v, auto&) { c.network.dropout_keep = as_real(k, v); }},
      {"epochs", [](auto& c, auto k, auto& v, auto&) { c.epochs = as_count(k, v); }},
      {"batch_size", [](auto& c, auto k, auto& v, auto&) { c.batch_size = as_count(k, v); }},
      {"seed", [](auto& c, auto k, auto& v, auto&) {
         if (!v.is_number_unsigned()) bad_value(k, v, "a non-negative integer");
         c.seed = v.template get<std::uint64_t>();
       }},
      {"lr_initial", [](auto& c, auto k, auto& v, auto&) { c.schedule.initial = as_real(k, v); }},
      {"lr_decay", [](auto& c, auto k, auto& v, auto&) { c.schedule.decay_rate = as_real(k, v); }},
      {"lr_staircase", [](auto& c, auto k, auto& v, auto&) { c.schedule.staircase = as_bool(k, v); }},
      {"adam_beta1", [](auto& c, auto k, auto& v, auto&) { c.adam.beta1 = as_real(k, v); }},
      {"adam_beta2", [](auto& c, auto k, auto& v, auto&) { c.adam.beta2 = as_real(k, v); }},
      {"adam_epsilon", [](auto& c, auto k, auto& v, auto&) { c.adam.epsilon = as_real(k, v); }},
      {"augment_shift", [](auto& c, auto k, auto& v, auto&) {
         c.augment.max_shift = static_cast<int>(as_count(k, v));
       }},
      {"augment_rotation",
       [](auto& c, auto k, auto& v, auto&) { c.augment.max_rotation_deg = as_real(k, v); }},
      {"augment_invert_prob",
       [](auto& c, auto k, auto& v, auto&) { c.augment.invert_prob = as_real(k, v); }},
      {"dataset", [](auto& c, auto k, auto& v, auto&) {
         const std::string s = v.is_string() ? v.template get<std::string>() : "";
         if (s == "idx") c.dataset = DatasetKind::Idx;
         else if (s == "cifar10") c.dataset = DatasetKind::Cifar10;
         else if (s == "cifar100") c.dataset = DatasetKind::Cifar100;
         else bad_value(k, v, "one of \"idx\", \"cifar10\", \"cifar100\"");
       }},
      {"train_images", [](auto& c, auto k, auto& v, auto& b) { c.train_images = as_path(k, v, b); }},
      {"train_labels", [](auto& c, auto k, auto& v, auto& b) { c.train_labels = as_path(k, v, b); }},
      {"test_images", [](auto& c, auto k, auto& v, auto& b) { c.test_images = as_path(k, v, b); }},
      {"test_labels", [](auto& c, auto k, auto& v, auto& b) { c.test_labels = as_path(k, v, b); }},
      {"cifar_dir", [](auto& c, auto k, auto& v, auto& b) { c.cifar_dir = as_path(k, v, b); }},
      {"train_subset", [](auto& c, auto k, auto& v, auto&) { c.train_subset = as_count(k, v); }},
      {"test_subset", [](auto& c, auto k, auto& v, auto&) { c.test_subset = as_count(k, v); }},
      {"output_dir", [](auto& c, auto k, auto& v, auto& b) { c.output_dir = as_path(k, v, b); }},
      {"repeats", [](auto& c, auto k, auto& v, auto&) { c.repeats = as_count(k, v); }},
      {"log_wall_time", [](auto& c, auto k, auto& v, auto&) { c.log_wall_time = as_bool(k, v); }},
  };
  return table;
}

void set_key(TrainConfig& config, std::string_view key, const json& value, const fs::path& base) {
  for (const auto& [name, setter] : setters()) {
    if (name == key) {
      setter(config, key, value, base);
      return;
    }
  }
  throw Error(ErrorKind::Configuration, "unknown config key '" + std::string(key) + "'");
}

const char* dataset_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::Idx: return "idx";
    case DatasetKind::Cifar10: return "cifar10";
    case DatasetKind::Cifar100: return "cifar100";
  }
  return "idx";
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, setter] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

TrainConfig parse_train_config(std::string_view text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Configuration, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::Configuration, "config must be a JSON object");
  TrainConfig config;
  for (const auto& [key, value] : j.items()) set_key(config, key, value, base_dir);
  return config;
}

TrainConfig load_train_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Configuration, "cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_train_config(ss.str(), file.parent_path());
  } catch (const Error& e) {
    throw Error(e.kind(), file.string() + ": " + e.what());
  }
}

void apply_override(TrainConfig& config, std::string_view key, std::string_view value,
                    const fs::path& base_dir) {
  // Bare words (paths, dataset names) are taken as strings.
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded()) v = std::string(value);
  set_key(config, key, v, base_dir);
}

std::string dump_train_config(const TrainConfig& c) {
  json j;
  j["paths"] = c.network.paths;
  j["levels"] = c.network.levels;
  j["fc_widths"] = c.network.fc_widths;
  j["classes"] = c.network.classes;
  j["input_height"] = c.network.input.height;
  j["input_width"] = c.network.input.width;
  j["input_channels"] = c.network.input.channels;
  j["dropout_keep"] = c.network.dropout_keep;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["lr_initial"] = c.schedule.initial;
  j["lr_decay"] = c.schedule.decay_rate;
  j["lr_staircase"] = c.schedule.staircase;
  j["adam_beta1"] = c.adam.beta1;
  j["adam_beta2"] = c.adam.beta2;
  j["adam_epsilon"] = c.adam.epsilon;
  j["augment_shift"] = c.augment.max_shift;
  j["augment_rotation"] = c.augment.max_rotation_deg;
  j["augment_invert_prob"] = c.augment.invert_prob;
  j["dataset"] = dataset_name(c.dataset);
  j["train_images"] = c.train_images.string();
  j["train_labels"] = c.train_labels.string();
  j["test_images"] = c.test_images.string();
  j["test_labels"] = c.test_labels.string();
  j["cifar_dir"] = c.cifar_dir.string();
  j["train_subset"] = c.train_subset;
  j["test_subset"] = c.test_subset;
  j["output_dir"] = c.output_dir.string();
  j["repeats"] = c.repeats;
  j["log_wall_time"] = c.log_wall_time;
  return j.dump(2);
}

namespace detail {

json network_to_json(const NetworkConfig& c) {
  return {{"paths", c.paths},
          {"levels", c.levels},
          {"fc_widths", c.fc_widths},
          {"classes", c.classes},
          {"input_height", c.input.height},
          {"input_width", c.input.width},
          {"input_channels", c.input.channels},
          {"dropout_keep", c.dropout_keep}};
}

NetworkConfig network_from_json(const json& j) {
  try {
    NetworkConfig c;
    c.paths = j.at("paths").get<std::size_t>();
    c.levels = j.at("levels").get<std::size_t>();
    c.fc_widths = j.at("fc_widths").get<std::vector<std::size_t>>();
    c.classes = j.at("classes").get<std::size_t>();
    c.input.height = j.at("input_height").get<std::size_t>();
    c.input.width = j.at("input_width").get<std::size_t>();
    c.input.channels = j.at("input_channels").get<std::size_t>();
    c.dropout_keep = j.at("dropout_keep").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("network config metadata: ") + e.what());
  }
}

}  // namespace detail

}  // namespace wavenet
