#pragma once

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "archgen/digest.hpp"

namespace archgen::train {

struct TrainRequest {
  NnId nn_id;
  std::string code;
  std::string dataset;
  int epochs = 1;
  int batch_size = 64;
  std::string device = "auto";
  int subset_size = 5000;

  /// Throws ArgumentError unless epochs >= 1 and subset_size >= batch_size >= 1.
  void validate() const;
};

enum class TrainStatus { Ok, LoadError, RuntimeError, Timeout };

const char* to_string(TrainStatus s) noexcept;
std::optional<TrainStatus> parse_status(std::string_view s) noexcept;

struct TrainResult {
  NnId nn_id;
  TrainStatus status;
  std::optional<double> accuracy;  // present iff status == Ok
  double wall_time_s = 0.0;
  std::string error;
};

nlohmann::json to_json(const TrainRequest& r);
nlohmann::json to_json(const TrainResult& r);
/// Throws ArgumentError when the document violates the result contract.
TrainResult result_from_json(const nlohmann::json& j);
TrainRequest request_from_json(const nlohmann::json& j);

class Trainer {
 public:
  virtual ~Trainer() = default;
  /// Throws TrainerUnavailable when the backend cannot be reached.
  virtual TrainResult train(const TrainRequest& request) = 0;
};

/// Deterministic stand-in: accuracy is a function of nn_id alone. Code
/// containing the marker "# archgen: mock-train-fail" reports a runtime error.
class MockTrainer final : public Trainer {
 public:
  static constexpr std::string_view kFailMarker = "# archgen: mock-train-fail";

  TrainResult train(const TrainRequest& request) override;

  /// The accuracy train() reports for id, in [0.10, 0.90].
  static double accuracy_for(const NnId& id);

  std::vector<NnId> dispatched() const;

 private:
  mutable std::mutex mu_;
  std::vector<NnId> dispatched_;
};

/// Client for the training worker: POST {base}/train, GET {base}/health.
class WorkerTrainer final : public Trainer {
 public:
  explicit WorkerTrainer(std::string base_url, std::chrono::seconds timeout = std::chrono::minutes(10));

  TrainResult train(const TrainRequest& request) override;
  bool healthy() const;

 private:
  std::string base_url_;
  std::chrono::seconds timeout_;
};

}  // namespace archgen::train
