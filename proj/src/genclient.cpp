#include "archgen/genclient.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "archgen/error.hpp"
#include "archgen/fileio.hpp"
#include "archgen/log.hpp"
#include "archgen/md5.hpp"

namespace archgen::gen {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

void GenerationParams::validate() const {
  if (!(temperature >= 0.0)) throw ArgumentError("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ArgumentError("top_p must lie in (0, 1]");
  if (top_k < 1) throw ArgumentError("top_k must be >= 1");
  if (max_tokens < 1) throw ArgumentError("max_tokens must be >= 1");
  if (max_retries < 0) throw ArgumentError("max_retries must be >= 0");
  if (max_in_flight < 1) throw ArgumentError("max_in_flight must be >= 1");
}

std::string HttpRequest::header(std::string_view name) const {
  for (const auto& [k, v] : headers)
    if (k == name) return v;
  return {};
}

// ---------------------------------------------------------------------------

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigurationError("endpoint URL lacks a scheme: " + url);
  const std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

HttpResponse HttpTransport::post(const HttpRequest& request) {
  const Url u = split_url(request.url);
  httplib::Client cli(u.origin);
  if (!cli.is_valid()) return {0, {}, "invalid endpoint " + u.origin};
  cli.set_connection_timeout(std::chrono::seconds(10));
  cli.set_read_timeout(request.timeout);
  cli.set_write_timeout(request.timeout);

  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);
  auto res = cli.Post(u.path, headers, request.body, "application/json");
  if (!res) return {0, {}, httplib::to_string(res.error())};
  return {res->status, res->body, {}};
}

// ---------------------------------------------------------------------------

void MockTransport::add_by_prompt_digest(std::string digest, std::string completion) {
  std::lock_guard lock(mu_);
  by_digest_[std::move(digest)] = std::move(completion);
}

void MockTransport::add_by_request_id(std::string id, std::string completion) {
  std::lock_guard lock(mu_);
  by_id_[std::move(id)] = std::move(completion);
}

void MockTransport::push_completion(std::string completion) {
  std::lock_guard lock(mu_);
  sequence_.push_back(std::move(completion));
}

void MockTransport::push_failure(int status, std::string body) {
  std::lock_guard lock(mu_);
  failures_.emplace_back(status, std::move(body));
}

void MockTransport::set_fallback(Responder r) {
  std::lock_guard lock(mu_);
  fallback_ = std::move(r);
}

void MockTransport::load_fixture(const std::filesystem::path& file) {
  std::istringstream in(read_file(file));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.contains("status")) {
        push_failure(j.at("status").get<int>(), j.value("body", std::string{}));
      } else if (j.contains("request_id")) {
        add_by_request_id(j.at("request_id").get<std::string>(), j.at("completion").get<std::string>());
      } else if (j.contains("prompt_md5")) {
        add_by_prompt_digest(j.at("prompt_md5").get<std::string>(), j.at("completion").get<std::string>());
      } else {
        push_completion(j.at("completion").get<std::string>());
      }
    } catch (const json::exception& e) {
      throw ParseError(file.string(), line_no, e.what());
    }
  }
}

std::string MockTransport::completion_body(std::string_view content) {
  json j;
  j["id"] = "mock-completion";
  j["object"] = "chat.completion";
  j["choices"] = json::array({{{"index", 0},
                               {"message", {{"role", "assistant"}, {"content", content}}},
                               {"finish_reason", "stop"}}});
  return j.dump();
}

HttpResponse MockTransport::post(const HttpRequest& request) {
  std::string prompt;
  try {
    const json body = json::parse(request.body);
    prompt = body.at("messages").back().at("content").get<std::string>();
  } catch (const json::exception& e) {
    return {400, json{{"error", {{"message", e.what()}}}}.dump(), {}};
  }
  const std::string request_id = request.header("X-Request-Id");

  Responder fallback;
  {
    std::lock_guard lock(mu_);
    seen_.push_back(request);
    if (!failures_.empty()) {
      auto [status, body] = std::move(failures_.front());
      failures_.pop_front();
      if (status == 0) return {0, {}, body.empty() ? "connection refused" : body};
      return {status, body.empty() ? json{{"error", {{"message", "scripted failure"}}}}.dump() : body, {}};
    }
    if (auto it = by_id_.find(request_id); !request_id.empty() && it != by_id_.end())
      return {200, completion_body(it->second), {}};
    if (auto it = by_digest_.find(md5_hex(prompt)); it != by_digest_.end())
      return {200, completion_body(it->second), {}};
    if (!sequence_.empty()) {
      std::string c = std::move(sequence_.front());
      sequence_.pop_front();
      return {200, completion_body(c), {}};
    }
    fallback = fallback_;
  }
  if (fallback) return {200, completion_body(fallback(prompt, request_id)), {}};
  return {404, json{{"error", {{"message", "no mock completion for prompt " + md5_hex(prompt)}}}}.dump(), {}};
}

std::size_t MockTransport::calls() const {
  std::lock_guard lock(mu_);
  return seen_.size();
}

std::vector<HttpRequest> MockTransport::requests() const {
  std::lock_guard lock(mu_);
  return seen_;
}

// ---------------------------------------------------------------------------

GenClient::GenClient(std::shared_ptr<Transport> transport, GenerationParams params, Sleeper sleeper,
                     std::optional<std::filesystem::path> replay_log)
    : transport_(std::move(transport)),
      params_(std::move(params)),
      sleep_(std::move(sleeper)),
      replay_log_(std::move(replay_log)) {
  params_.validate();
  if (!transport_) throw ArgumentError("GenClient needs a transport");
  if (!sleep_) sleep_ = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
  in_flight_ = std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(params_.max_in_flight));
  drop_top_k_ = !params_.send_top_k;
  if (!params_.send_top_k) log::warn("genclient", "top_k disabled for this endpoint; not sent");
}

std::string GenClient::request_body(std::string_view prompt, bool with_top_k) const {
  json j;
  j["model"] = params_.model_name;
  j["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  j["temperature"] = params_.temperature;
  j["top_p"] = params_.top_p;
  if (with_top_k) j["top_k"] = params_.top_k;
  j["max_tokens"] = params_.max_tokens;
  j["stream"] = false;
  return j.dump();
}

void GenClient::log_exchange(std::string_view request_id, std::string_view prompt, const std::string& body,
                             const HttpResponse& resp, double latency_ms) const {
  if (!replay_log_) return;
  json j;
  j["request_id"] = request_id;
  j["prompt_md5"] = md5_hex(prompt);
  j["request"] = json::parse(body);
  j["status"] = resp.status;
  j["response"] = resp.body;
  if (!resp.error.empty()) j["error"] = resp.error;
  j["latency_ms"] = latency_ms;
  std::lock_guard lock(log_mu_);
  std::ofstream out(*replay_log_, std::ios::app);
  out << j.dump() << '\n';
}

GenerationResult GenClient::generate(std::string_view prompt, std::string_view request_id) const {
  std::vector<std::pair<std::string, std::string>> headers{{"Content-Type", "application/json"}};
  if (const char* key = std::getenv(params_.api_key_env.c_str()); key && *key)
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  if (!request_id.empty()) headers.emplace_back("X-Request-Id", std::string(request_id));

  in_flight_->acquire();
  struct Release {
    std::counting_semaphore<>* s;
    ~Release() { s->release(); }
  } release{in_flight_.get()};

  GenerationResult result;
  int retries_used = 0;
  bool top_k_fallback_used = false;
  while (true) {
    const bool with_top_k = !drop_top_k_.load();
    const HttpRequest req{params_.endpoint_url, headers, request_body(prompt, with_top_k), params_.timeout};

    const auto t0 = Clock::now();
    const HttpResponse resp = transport_->post(req);
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    result.attempts.push_back({resp.status, ms, resp.error});
    log_exchange(request_id, prompt, req.body, resp, ms);
    log::info("genclient", "request " + std::string(request_id.empty() ? "-" : request_id) + " attempt " +
                               std::to_string(result.attempts.size()) + " status " + std::to_string(resp.status) +
                               " latency " + std::to_string(ms) + "ms");

    if (resp.status == 200) {
      try {
        const json j = json::parse(resp.body);
        result.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        return result;
      } catch (const json::exception& e) {
        result.attempts.back().error = std::string("malformed completion: ") + e.what();
      }
    } else if (resp.status == 400 && with_top_k && !top_k_fallback_used &&
               resp.body.find("top_k") != std::string::npos) {
      // Server rejects the top_k sampling field; resend without it.
      log::warn("genclient", "endpoint rejected top_k; dropping it");
      drop_top_k_ = true;
      top_k_fallback_used = true;
      continue;
    } else if (resp.status >= 400 && resp.status < 500 && resp.status != 408 && resp.status != 429) {
      throw ConfigurationError("endpoint returned HTTP " + std::to_string(resp.status) + ": " +
                               resp.body.substr(0, 300));
    }

    if (retries_used >= params_.max_retries)
      throw GenerationUnavailable("generation failed after " + std::to_string(result.attempts.size()) +
                                  " attempts (last status " + std::to_string(resp.status) + ")");
    const double delay = params_.backoff_initial_s * std::pow(params_.backoff_factor, retries_used);
    ++retries_used;
    sleep_(std::chrono::duration<double>(delay));
  }
}

// ---------------------------------------------------------------------------

namespace {

bool fence_line(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && i < 3 && line[i] == ' ') ++i;
  return line.substr(i).starts_with("```");
}

}  // namespace

std::optional<std::string> try_extract_code(std::string_view response) {
  // Walk lines looking for an opening fence.
  std::size_t pos = 0;
  while (pos <= response.size()) {
    const std::size_t nl = response.find('\n', pos);
    const std::string_view line = response.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (fence_line(line)) {
      if (nl == std::string_view::npos) return std::nullopt;
      const std::size_t body = nl + 1;
      std::size_t scan = body;
      while (scan <= response.size()) {
        const std::size_t end = response.find('\n', scan);
        const std::string_view l = response.substr(scan, end == std::string_view::npos ? std::string_view::npos : end - scan);
        if (fence_line(l)) {
          const std::size_t stop = scan > body ? scan - 1 : body;  // drop the newline before the fence
          std::string code(response.substr(body, stop - body));
          if (code.empty()) return std::nullopt;
          return code;
        }
        if (end == std::string_view::npos) break;
        scan = end + 1;
      }
      std::string code(response.substr(body));  // unterminated fence: take the rest
      if (code.empty()) return std::nullopt;
      return code;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }

  pos = 0;
  while (pos < response.size()) {
    const std::string_view rest = response.substr(pos);
    if (rest.starts_with("class ") || rest.starts_with("import ")) return std::string(rest);
    const std::size_t nl = response.find('\n', pos);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return std::nullopt;
}

std::string extract_code(std::string_view response) {
  auto code = try_extract_code(response);
  if (!code) throw ExtractionError("no code block or class/import line in response");
  return std::move(*code);
}

std::string fence(std::string_view code) { return "```python\n" + std::string(code) + "\n```"; }

}  // namespace archgen::gen
