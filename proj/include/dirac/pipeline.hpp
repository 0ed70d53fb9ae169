#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dirac/catalog.hpp"
#include "dirac/zsl.hpp"

namespace dirac::pipeline {

using ConfigMap = std::map<std::string, std::string>;

/// Every recognised configuration key with its default value.
const ConfigMap& default_config();

/// Reads a `key = value` file. Unknown keys are a config error.
ConfigMap load_config_file(const std::filesystem::path& path);

/// DIRAC_<KEY> environment variables for every known key.
ConfigMap environment_overrides();

/// Later maps win.
ConfigMap merge(std::initializer_list<const ConfigMap*> layers);

struct PipelineConfig {
  std::filesystem::path attributes;
  std::filesystem::path features;
  std::filesystem::path catalog;
  double attribute_scale = 1.0;

  bool synthetic = false;
  catalog::SyntheticParams synthetic_params;

  std::size_t n_s = 0;
  std::uint64_t seed = 0;
  std::size_t repeats = 3;
  std::size_t cluster_lower_bound = 5;

  std::size_t q = 2;
  std::size_t t = 0;  // 0: derive from the average image count
  double lr = 0.01;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double momentum = 0.9;
  double distance_blend = 0.5;

  zsl::EszslHyper eszsl;
  double rare_threshold = 0.05;
  double common_threshold = 0.50;

  std::filesystem::path predictions_es;
  std::filesystem::path predictions_ps;

  std::filesystem::path out_dir = "out";
  std::filesystem::path trace_dir;  // defaults to out_dir

  /// SHA-256 over the canonical key = value listing, output locations excluded.
  std::string digest;
};

PipelineConfig parse_config(const ConfigMap& values);

struct Dataset {
  catalog::ClassCatalog catalog;
  catalog::FeatureStore features;
};

Dataset load_dataset(const PipelineConfig& config);

/// Artifact names shared by the stage subcommands and the full run.
std::filesystem::path split_path(const PipelineConfig& config, std::size_t repeat);
std::filesystem::path seedset_path(const PipelineConfig& config, std::size_t repeat);
std::filesystem::path trace_path(const PipelineConfig& config, std::size_t repeat);
std::filesystem::path report_path(const PipelineConfig& config, std::size_t repeat, zsl::SplitTag tag,
                                  const char* extension);
std::filesystem::path rarity_path(const PipelineConfig& config, std::size_t repeat);

// Individual stages. Each reads the artifacts of the previous one from out_dir.
nlohmann::json ingest(const PipelineConfig& config, const Dataset& data);
catalog::SplitDefinition split_stage(const PipelineConfig& config, const Dataset& data, std::size_t repeat);
void seed_stage(const PipelineConfig& config, const Dataset& data, std::size_t repeat);
void mine_stage(const PipelineConfig& config, const Dataset& data, std::size_t repeat);
zsl::EvalReport eval_stage(const PipelineConfig& config, const Dataset& data, std::size_t repeat, zsl::SplitTag which);
void rarity_stage(const PipelineConfig& config, const Dataset& data, std::size_t repeat);

/// Full run: for every repeat, split, build the seed set, mine, evaluate
/// both splits on the shared U_com and write the rarity summaries.
void run_pipeline(const PipelineConfig& config);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace dirac::pipeline
