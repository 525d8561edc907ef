#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace archgen::gen {

/// Sampling and transport settings. Defaults are the published generation
/// parameters (temperature 0.6, top-k 50, top-p 0.95, 65,536 max tokens).
struct GenerationParams {
  double temperature = 0.6;
  int top_k = 50;
  double top_p = 0.95;
  int max_tokens = 65536;
  std::string model_name = "deepseek-coder-7b-instruct";
  std::string endpoint_url = "http://127.0.0.1:8000/v1/chat/completions";
  std::chrono::seconds timeout{300};
  int max_retries = 3;
  double backoff_initial_s = 1.0;
  double backoff_factor = 2.0;
  bool send_top_k = true;
  std::string api_key_env = "ARCHGEN_API_KEY";
  std::size_t max_in_flight = 4;

  /// Throws ArgumentError on out-of-range values.
  void validate() const;
};

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::chrono::seconds timeout{300};

  std::string header(std::string_view name) const;
};

struct HttpResponse {
  int status = 0;  // 0: transport failure, see error
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// Real HTTP(S) transport.
class HttpTransport final : public Transport {
 public:
  HttpResponse post(const HttpRequest& request) override;
};

/// Offline transport answering chat-completion requests from fixtures.
///
/// Resolution order per request: pending scripted failure statuses, then the
/// completion keyed by X-Request-Id, then by MD5 of the prompt, then the next
/// queued sequential completion, then the fallback responder. Unmatched
/// requests get HTTP 404.
class MockTransport final : public Transport {
 public:
  using Responder = std::function<std::string(std::string_view prompt, std::string_view request_id)>;

  void add_by_prompt_digest(std::string digest, std::string completion);
  void add_by_request_id(std::string id, std::string completion);
  void push_completion(std::string completion);
  void push_failure(int status, std::string body = {});
  void set_fallback(Responder r);

  /// Loads a line-delimited fixture. Each line is an object with
  /// "completion" plus optional "prompt_md5" or "request_id", or a
  /// {"status": code} failure entry. Throws ParseError.
  void load_fixture(const std::filesystem::path& file);

  HttpResponse post(const HttpRequest& request) override;

  std::size_t calls() const;
  std::vector<HttpRequest> requests() const;

  /// Chat-completions response body wrapping content.
  static std::string completion_body(std::string_view content);

 private:
  mutable std::mutex mu_;
  std::deque<std::pair<int, std::string>> failures_;
  std::map<std::string, std::string> by_id_;
  std::map<std::string, std::string> by_digest_;
  std::deque<std::string> sequence_;
  Responder fallback_;
  std::vector<HttpRequest> seen_;
};

struct Attempt {
  int status;
  double latency_ms;
  std::string error;
};

struct GenerationResult {
  std::string text;
  std::vector<Attempt> attempts;
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;

/// Chat-completion client with retry, backoff and an optional replay log.
class GenClient {
 public:
  GenClient(std::shared_ptr<Transport> transport, GenerationParams params,
            Sleeper sleeper = {}, std::optional<std::filesystem::path> replay_log = std::nullopt);

  /// Returns the completion text. Retries 408, 429, 5xx and transport
  /// failures with exponential backoff; throws GenerationUnavailable once
  /// retries are exhausted and ConfigurationError on other 4xx.
  GenerationResult generate(std::string_view prompt, std::string_view request_id = {}) const;

  const GenerationParams& params() const noexcept { return params_; }

  /// Request body as sent on the wire.
  std::string request_body(std::string_view prompt, bool with_top_k) const;

 private:
  void log_exchange(std::string_view request_id, std::string_view prompt, const std::string& body,
                    const HttpResponse& resp, double latency_ms) const;

  std::shared_ptr<Transport> transport_;
  GenerationParams params_;
  Sleeper sleep_;
  std::optional<std::filesystem::path> replay_log_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
  mutable std::mutex log_mu_;
  mutable std::atomic<bool> drop_top_k_{false};
};

/// Contents of the first fenced block; otherwise everything from the first
/// line starting with "class " or "import ". Empty when neither exists.
std::optional<std::string> try_extract_code(std::string_view response);

/// As try_extract_code but throws ExtractionError.
std::string extract_code(std::string_view response);

/// Wraps code in a python fence, the inverse of extract_code for fence-free text.
std::string fence(std::string_view code);

}  // namespace archgen::gen
