#include "archgen/trainer.hpp"

#include <httplib.h>

#include "archgen/error.hpp"

namespace archgen::train {

using nlohmann::json;

void TrainRequest::validate() const {
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (subset_size < batch_size) throw ArgumentError("subset_size must be >= batch_size");
}

const char* to_string(TrainStatus s) noexcept {
  switch (s) {
    case TrainStatus::Ok: return "ok";
    case TrainStatus::LoadError: return "load-error";
    case TrainStatus::RuntimeError: return "runtime-error";
    case TrainStatus::Timeout: return "timeout";
  }
  return "?";
}

std::optional<TrainStatus> parse_status(std::string_view s) noexcept {
  for (auto st : {TrainStatus::Ok, TrainStatus::LoadError, TrainStatus::RuntimeError, TrainStatus::Timeout})
    if (s == to_string(st)) return st;
  return std::nullopt;
}

json to_json(const TrainRequest& r) {
  return {{"nn_id", r.nn_id.str()}, {"code", r.code},           {"dataset", r.dataset},
          {"epochs", r.epochs},     {"batch_size", r.batch_size}, {"device", r.device},
          {"subset_size", r.subset_size}};
}

TrainRequest request_from_json(const json& j) try {
  TrainRequest r{NnId(j.at("nn_id").get<std::string>()), j.at("code").get<std::string>(),
                 j.at("dataset").get<std::string>()};
  r.epochs = j.value("epochs", 1);
  r.batch_size = j.value("batch_size", 64);
  r.device = j.value("device", std::string("auto"));
  r.subset_size = j.value("subset_size", 5000);
  r.validate();
  return r;
} catch (const json::exception& e) {
  throw ArgumentError(std::string("malformed train request: ") + e.what());
}

json to_json(const TrainResult& r) {
  json j{{"nn_id", r.nn_id.str()}, {"status", to_string(r.status)}, {"wall_time", r.wall_time_s}};
  j["accuracy"] = r.accuracy ? json(*r.accuracy) : json(nullptr);
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

TrainResult result_from_json(const json& j) {
  try {
    const auto status = parse_status(j.at("status").get<std::string>());
    if (!status) throw ArgumentError("unknown train status " + j.at("status").dump());
    TrainResult r{NnId(j.at("nn_id").get<std::string>()), *status, std::nullopt,
                  j.value("wall_time", 0.0), j.value("error", std::string{})};
    if (const auto& a = j.value("accuracy", json(nullptr)); !a.is_null()) r.accuracy = a.get<double>();
    if (r.accuracy.has_value() != (r.status == TrainStatus::Ok))
      throw ArgumentError("accuracy must be present iff status is ok");
    if (r.accuracy && !(*r.accuracy >= 0.0 && *r.accuracy <= 1.0))
      throw ArgumentError("accuracy outside [0,1]");
    return r;
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("malformed train result: ") + e.what());
  }
}

double MockTrainer::accuracy_for(const NnId& id) {
  const auto bits = std::stoul(id.str().substr(0, 8), nullptr, 16);
  return 0.10 + 0.80 * (static_cast<double>(bits) / 4294967295.0);
}

TrainResult MockTrainer::train(const TrainRequest& request) {
  request.validate();
  {
    std::lock_guard lock(mu_);
    dispatched_.push_back(request.nn_id);
  }
  if (request.code.find(kFailMarker) != std::string::npos)
    return {request.nn_id, TrainStatus::RuntimeError, std::nullopt, 0.0, "mock trainer: scripted failure"};
  return {request.nn_id, TrainStatus::Ok, accuracy_for(request.nn_id), 0.0, {}};
}

std::vector<NnId> MockTrainer::dispatched() const {
  std::lock_guard lock(mu_);
  return dispatched_;
}

WorkerTrainer::WorkerTrainer(std::string base_url, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

namespace {
httplib::Client make_client(const std::string& base, std::chrono::seconds timeout) {
  httplib::Client cli(base);
  cli.set_connection_timeout(std::chrono::seconds(5));
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  return cli;
}
}  // namespace

bool WorkerTrainer::healthy() const {
  auto cli = make_client(base_url_, std::chrono::seconds(5));
  auto res = cli.Get("/health");
  if (!res || res->status != 200) return false;
  try {
    return json::parse(res->body).value("status", std::string{}) == "ready";
  } catch (const json::exception&) {
    return false;
  }
}

TrainResult WorkerTrainer::train(const TrainRequest& request) {
  request.validate();
  auto cli = make_client(base_url_, timeout_);
  auto res = cli.Post("/train", to_json(request).dump(), "application/json");
  if (!res) throw TrainerUnavailable("training worker at " + base_url_ + ": " + httplib::to_string(res.error()));
  if (res->status >= 500)
    throw TrainerUnavailable("training worker returned HTTP " + std::to_string(res->status));
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::exception& e) {
    throw TrainerUnavailable(std::string("training worker sent malformed JSON: ") + e.what());
  }
  if (res->status != 200)
    throw ArgumentError("training worker rejected request (HTTP " + std::to_string(res->status) +
                        "): " + body.value("error", res->body));
  TrainResult result = result_from_json(body);
  if (result.nn_id != request.nn_id)
    throw TrainerUnavailable("training worker answered for " + result.nn_id.str() + ", expected " + request.nn_id.str());
  return result;
}

}  // namespace archgen::train
