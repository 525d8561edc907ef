#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "archgen/fsap.hpp"
#include "archgen/genclient.hpp"
#include "archgen/latency.hpp"
#include "archgen/registry.hpp"
#include "archgen/trainer.hpp"

namespace archgen::pipeline {

struct PipelineConfig {
  std::size_t pool_size = Registry::kDefaultPoolSize;
  double hours_per_training = 2.5;
  std::size_t concurrency = 4;  // slots in flight per wave
  int slot_attempts = 1;        // generations a slot may consume before giving up
  bool strict_prompt = false;   // literal "32x32 RGB images" line
  int epochs = 1;
  int batch_size = 64;
  int subset_size = 5000;
  std::string device = "auto";
  std::optional<std::filesystem::path> run_log;
  /// Source of created_at; defaults to the system clock.
  std::function<std::int64_t()> clock;

  void validate() const;
};

/// Slot accounting for one campaign. Every generation attempt counts once in
/// requested and ends in exactly one outcome counter.
struct PipelineReport {
  std::string dataset;
  int n = 0;
  std::uint64_t seed = 0;
  std::size_t slots = 0;

  std::size_t requested = 0;
  std::size_t generated_ok = 0;
  std::size_t generation_failures = 0;  // retries exhausted at the endpoint
  std::size_t extraction_failures = 0;
  std::size_t validation_failures = 0;
  std::size_t duplicates_rejected = 0;
  std::size_t trained = 0;
  std::size_t training_failures = 0;
  std::size_t stored_untrained = 0;  // accepted while the trainer was unreachable

  double hours_per_training = 2.5;
  double gpu_hours_saved = 0.0;
  double wall_time_s = 0.0;

  /// "prompt", "generate", "validate", "dedup", "train"
  std::map<std::string, LatencySummary> stage_latency;
  std::vector<NnId> accepted;  // insertion order

  bool identities_hold() const;
  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;
  std::string to_text() const;
};

class Pipeline {
 public:
  Pipeline(Registry& store, const gen::GenClient& client, train::Trainer& trainer,
           std::vector<fsap::DatasetSpec> catalog, PipelineConfig config,
           const fsap::PromptTemplate& tmpl = fsap::PromptTemplate::builtin());

  /// Runs count slots of prompt, generate, extract, validate, dedup, train.
  /// Throws EmptyPoolError when the dataset has no trained records,
  /// ArgumentError for bad n or unknown dataset, ConfigurationError when the
  /// endpoint rejects the request.
  PipelineReport run_campaign(std::string_view dataset, int n, std::size_t count, std::uint64_t seed);

  /// X-Request-Id sent for a slot attempt; mock fixtures key completions by it.
  static std::string request_id(std::string_view dataset, int n, std::uint64_t seed, std::size_t slot,
                                int attempt);

 private:
  Registry& store_;
  const gen::GenClient& client_;
  train::Trainer& trainer_;
  std::vector<fsap::DatasetSpec> catalog_;
  PipelineConfig config_;
  const fsap::PromptTemplate& tmpl_;
};

/// Inserts seed architectures from a line-delimited fixture, one object per
/// line with dataset, code, accuracy and optional variant and created_at.
/// Duplicates collapse. Returns the number newly stored. Throws ParseError.
std::size_t seed_registry(Registry& store, const std::filesystem::path& fixture);
std::size_t seed_registry_text(Registry& store, std::string_view text, const std::string& source = "<seed>");

/// Offline stand-in for the LLM: answers with a fresh synthetic architecture,
/// and every fifth request with a whitespace rewrite of the prompt's main
/// model, the way a weak generator reproduces its input.
gen::MockTransport::Responder synthetic_responder(std::size_t target_bytes = 3000);

}  // namespace archgen::pipeline
