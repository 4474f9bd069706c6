#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "seed/runner.hpp"

namespace seed {

struct IdxSource {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  int max_train_per_class = 0;  ///< 0 keeps everything
  int max_test_per_class = 0;
};

struct ScenarioConfig {
  enum class Source { Blobs, Idx };
  Source source = Source::Blobs;
  BlobSpec blobs;  ///< seed is derived from the global seed
  IdxSource idx;
  TaskSplitSpec split;  ///< order_seed is derived from the global seed
};

struct OutputConfig {
  std::string out_dir = "seed_out";
  bool trace = false;
};

struct RunConfig {
  std::uint64_t seed = 0;
  ScenarioConfig scenario;
  NetConfig model;  ///< input_dim is filled in from the data
  int experts = 5;
  TrainConfig training;
  bool joint_reference = false;
  OutputConfig output;
};

/// Strict parse: unknown keys and wrong types raise InvalidConfig.
RunConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

/// `--set` style override: dotted path into the config tree, value parsed as
/// JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& tree, const std::string& dotted_key, const std::string& value);

/// Builds the task stream (train and test splits) described by the config
/// and fills cfg.model.input_dim.
TaskStream build_stream(RunConfig& cfg);

}  // namespace seed
