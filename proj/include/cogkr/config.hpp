#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cogkr/dataset.hpp"
#include "cogkr/evaluator.hpp"
#include "cogkr/model.hpp"
#include "cogkr/taskgen.hpp"
#include "cogkr/trainer.hpp"

namespace cogkr {

// Flat `key = value` settings. Lines starting with '#' and blank lines are
// ignored; anything else without '=' is an error naming the line.
using Settings = std::map<std::string, std::string>;

Settings read_settings(const std::filesystem::path& path);
Settings parse_settings(std::istream& in, const std::string& origin);

// Environment variable for `key`: prefix + upper-cased key with '.' -> '_'.
// "train.batch_size" -> "COGKR_TRAIN_BATCH_SIZE".
inline constexpr const char* kEnvPrefix = "COGKR_";
std::string env_name(const std::string& key);

// Typed, self-describing key table over a struct T.
template <class T>
struct Option {
  std::string key;
  std::string help;
  std::function<std::string(const T&)> get;
  std::function<void(T&, const std::string&)> set;
};

// Everything a train / evaluate / explain / pretrain run needs.
struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string dataset;      // manifest path
  std::string pretrained;   // embedding snapshot from `pretrain`, optional
  DatasetOptions data;
  ModelDims model;
  TrainConfig train;
  DistMultConfig distmult;
  EvalConfig eval;  // reasoner/seed/threads are taken from the fields above
  std::size_t scalar_bits = sizeof(Scalar) * 8;

  // Copies the shared reasoner / seed / thread settings into the nested
  // configs.
  void sync();
};

const std::vector<Option<RunConfig>>& run_options();
const std::vector<Option<SynthSpec>>& synth_options();

// Applies `settings` in order; unknown keys and bad values raise ConfigError.
template <class T>
void apply_settings(T& target, const std::vector<Option<T>>& options, const Settings& settings);

// Layers: defaults < file < environment < explicit overrides.
RunConfig resolve_run_config(const std::filesystem::path* file, const Settings& overrides);
SynthSpec resolve_synth_spec(const std::filesystem::path* file, const Settings& overrides);

template <class T>
void write_settings(std::ostream& out, const T& value, const std::vector<Option<T>>& options);
template <class T>
void write_settings(const std::filesystem::path& path, const T& value, const std::vector<Option<T>>& options);

}  // namespace cogkr
