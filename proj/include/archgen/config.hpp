#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "archgen/fsap.hpp"
#include "archgen/genclient.hpp"
#include "archgen/pipeline.hpp"
#include "archgen/stats.hpp"

namespace archgen {

/// Where completions come from: a fixture-driven mock, a live endpoint, or the
/// built-in synthetic generator (offline demos).
enum class LlmMode { Mock, Http, Synthetic };
enum class TrainerMode { Mock, Worker };

struct LlmSettings {
  LlmMode mode = LlmMode::Synthetic;
  gen::GenerationParams params;
  std::optional<std::filesystem::path> mock_fixture;
  std::optional<std::filesystem::path> replay_log;
};

struct TrainerSettings {
  TrainerMode mode = TrainerMode::Mock;
  std::string url = "http://127.0.0.1:8765";
  int timeout_s = 600;
};

struct StatsSettings {
  std::size_t min_samples = stats::kDefaultMinSamples;
  double alpha = stats::kAlpha;
  stats::TTest test = stats::TTest::Welch;
};

/// Run configuration. Every key is optional; unknown keys are rejected so
/// typos fail loudly. Relative paths resolve against the config file.
struct Config {
  std::filesystem::path store_dir = "archgen-store";
  std::filesystem::path output_dir = "archgen-out";
  LlmSettings llm;
  pipeline::PipelineConfig pipeline;
  std::optional<std::filesystem::path> template_path;
  TrainerSettings trainer;
  StatsSettings stats;
  std::vector<fsap::DatasetSpec> datasets = fsap::default_catalog();

  /// Throws ArgumentError naming the offending key.
  static Config from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  /// Throws ParseError for malformed JSON, ArgumentError for bad values.
  static Config load(const std::filesystem::path& file);

  nlohmann::ordered_json to_json() const;
};

}  // namespace archgen
