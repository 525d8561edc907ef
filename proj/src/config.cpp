#include "archgen/config.hpp"

#include <algorithm>
#include <set>

#include "archgen/error.hpp"
#include "archgen/fileio.hpp"

namespace archgen {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

void allow_only(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ArgumentError(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : obj.items())
    if (!allowed.count(k)) throw ArgumentError("unknown config key '" + where + "." + k + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ArgumentError("config key '" + where + "." + key + "' has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

void read_path(const json& obj, const char* key, fs::path& out, const fs::path& base, const std::string& where) {
  std::string s;
  read(obj, key, s, where);
  if (!s.empty()) out = resolve(base, s);
}

void read_path(const json& obj, const char* key, std::optional<fs::path>& out, const fs::path& base,
               const std::string& where) {
  std::string s;
  read(obj, key, s, where);
  if (!s.empty()) out = resolve(base, s);
}

}  // namespace

Config Config::from_json(const json& j, const fs::path& base) {
  Config c;
  allow_only(j, "config", {"store_dir", "output_dir", "llm", "pipeline", "trainer", "stats", "datasets"});
  read_path(j, "store_dir", c.store_dir, base, "config");
  read_path(j, "output_dir", c.output_dir, base, "config");

  if (j.contains("llm")) {
    const json& l = j["llm"];
    allow_only(l, "llm", {"mode", "model_name", "endpoint_url", "temperature", "top_k", "top_p", "max_tokens",
                          "timeout_s", "max_retries", "backoff_initial_s", "backoff_factor", "send_top_k",
                          "api_key_env", "max_in_flight", "mock_fixture", "replay_log"});
    std::string mode = "synthetic";
    read(l, "mode", mode, "llm");
    if (mode == "mock") c.llm.mode = LlmMode::Mock;
    else if (mode == "http") c.llm.mode = LlmMode::Http;
    else if (mode == "synthetic") c.llm.mode = LlmMode::Synthetic;
    else throw ArgumentError("llm.mode must be mock, http or synthetic");
    auto& p = c.llm.params;
    read(l, "model_name", p.model_name, "llm");
    read(l, "endpoint_url", p.endpoint_url, "llm");
    read(l, "temperature", p.temperature, "llm");
    read(l, "top_k", p.top_k, "llm");
    read(l, "top_p", p.top_p, "llm");
    read(l, "max_tokens", p.max_tokens, "llm");
    int timeout = static_cast<int>(p.timeout.count());
    read(l, "timeout_s", timeout, "llm");
    p.timeout = std::chrono::seconds(timeout);
    read(l, "max_retries", p.max_retries, "llm");
    read(l, "backoff_initial_s", p.backoff_initial_s, "llm");
    read(l, "backoff_factor", p.backoff_factor, "llm");
    read(l, "send_top_k", p.send_top_k, "llm");
    read(l, "api_key_env", p.api_key_env, "llm");
    read(l, "max_in_flight", p.max_in_flight, "llm");
    read_path(l, "mock_fixture", c.llm.mock_fixture, base, "llm");
    read_path(l, "replay_log", c.llm.replay_log, base, "llm");
    p.validate();
    if (c.llm.mode == LlmMode::Mock && !c.llm.mock_fixture)
      throw ArgumentError("llm.mode mock needs llm.mock_fixture");
  }

  if (j.contains("pipeline")) {
    const json& pj = j["pipeline"];
    allow_only(pj, "pipeline", {"pool_size", "hours_per_training", "concurrency", "slot_attempts", "strict_prompt",
                                "epochs", "batch_size", "subset_size", "device", "template_path"});
    auto& p = c.pipeline;
    read(pj, "pool_size", p.pool_size, "pipeline");
    read(pj, "hours_per_training", p.hours_per_training, "pipeline");
    read(pj, "concurrency", p.concurrency, "pipeline");
    read(pj, "slot_attempts", p.slot_attempts, "pipeline");
    read(pj, "strict_prompt", p.strict_prompt, "pipeline");
    read(pj, "epochs", p.epochs, "pipeline");
    read(pj, "batch_size", p.batch_size, "pipeline");
    read(pj, "subset_size", p.subset_size, "pipeline");
    read(pj, "device", p.device, "pipeline");
    read_path(pj, "template_path", c.template_path, base, "pipeline");
    p.validate();
  }

  if (j.contains("trainer")) {
    const json& t = j["trainer"];
    allow_only(t, "trainer", {"mode", "url", "timeout_s"});
    std::string mode = "mock";
    read(t, "mode", mode, "trainer");
    if (mode == "mock") c.trainer.mode = TrainerMode::Mock;
    else if (mode == "worker") c.trainer.mode = TrainerMode::Worker;
    else throw ArgumentError("trainer.mode must be mock or worker");
    read(t, "url", c.trainer.url, "trainer");
    read(t, "timeout_s", c.trainer.timeout_s, "trainer");
    if (c.trainer.timeout_s < 1) throw ArgumentError("trainer.timeout_s must be >= 1");
  }

  if (j.contains("stats")) {
    const json& s = j["stats"];
    allow_only(s, "stats", {"min_samples", "alpha", "test"});
    read(s, "min_samples", c.stats.min_samples, "stats");
    read(s, "alpha", c.stats.alpha, "stats");
    std::string test = "welch";
    read(s, "test", test, "stats");
    if (test == "welch") c.stats.test = stats::TTest::Welch;
    else if (test == "student") c.stats.test = stats::TTest::Student;
    else throw ArgumentError("stats.test must be welch or student");
    if (c.stats.min_samples < 2) throw ArgumentError("stats.min_samples must be >= 2");
    if (!(c.stats.alpha > 0.0 && c.stats.alpha < 1.0)) throw ArgumentError("stats.alpha must lie in (0,1)");
  }

  if (j.contains("datasets")) {
    if (!j["datasets"].is_array()) throw ArgumentError("datasets must be an array");
    c.datasets.clear();
    for (const json& d : j["datasets"]) {
      allow_only(d, "datasets[]", {"name", "num_classes", "channels", "height", "width", "description"});
      fsap::DatasetSpec spec;
      read(d, "name", spec.name, "datasets[]");
      read(d, "num_classes", spec.num_classes, "datasets[]");
      read(d, "channels", spec.channels, "datasets[]");
      read(d, "height", spec.height, "datasets[]");
      read(d, "width", spec.width, "datasets[]");
      read(d, "description", spec.description, "datasets[]");
      if (spec.name.empty()) throw ArgumentError("datasets[] entry without a name");
      spec.validate();
      c.datasets.push_back(std::move(spec));
    }
  }
  return c;
}

Config Config::load(const fs::path& file) {
  const std::string text = read_file(file);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset to line number.
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ParseError(file.string(), line, "malformed JSON");
  }
  return from_json(j, file.parent_path());
}

ordered_json Config::to_json() const {
  auto mode_name = [](LlmMode m) { return m == LlmMode::Mock ? "mock" : m == LlmMode::Http ? "http" : "synthetic"; };
  const auto& p = llm.params;
  ordered_json j;
  j["store_dir"] = store_dir.string();
  j["output_dir"] = output_dir.string();
  ordered_json l;
  l["mode"] = mode_name(llm.mode);
  l["model_name"] = p.model_name;
  l["endpoint_url"] = p.endpoint_url;
  l["temperature"] = p.temperature;
  l["top_k"] = p.top_k;
  l["top_p"] = p.top_p;
  l["max_tokens"] = p.max_tokens;
  l["timeout_s"] = p.timeout.count();
  l["max_retries"] = p.max_retries;
  l["backoff_initial_s"] = p.backoff_initial_s;
  l["backoff_factor"] = p.backoff_factor;
  l["send_top_k"] = p.send_top_k;
  l["api_key_env"] = p.api_key_env;
  l["max_in_flight"] = p.max_in_flight;
  if (llm.mock_fixture) l["mock_fixture"] = llm.mock_fixture->string();
  if (llm.replay_log) l["replay_log"] = llm.replay_log->string();
  j["llm"] = std::move(l);
  ordered_json pj;
  pj["pool_size"] = pipeline.pool_size;
  pj["hours_per_training"] = pipeline.hours_per_training;
  pj["concurrency"] = pipeline.concurrency;
  pj["slot_attempts"] = pipeline.slot_attempts;
  pj["strict_prompt"] = pipeline.strict_prompt;
  pj["epochs"] = pipeline.epochs;
  pj["batch_size"] = pipeline.batch_size;
  pj["subset_size"] = pipeline.subset_size;
  pj["device"] = pipeline.device;
  if (template_path) pj["template_path"] = template_path->string();
  j["pipeline"] = std::move(pj);
  j["trainer"] = {{"mode", trainer.mode == TrainerMode::Mock ? "mock" : "worker"},
                  {"url", trainer.url},
                  {"timeout_s", trainer.timeout_s}};
  j["stats"] = {{"min_samples", stats.min_samples},
                {"alpha", stats.alpha},
                {"test", stats.test == stats::TTest::Welch ? "welch" : "student"}};
  ordered_json ds = ordered_json::array();
  for (const auto& d : datasets)
    ds.push_back({{"name", d.name},
                  {"num_classes", d.num_classes},
                  {"channels", d.channels},
                  {"height", d.height},
                  {"width", d.width},
                  {"description", d.description}});
  j["datasets"] = std::move(ds);
  return j;
}

}  // namespace archgen
