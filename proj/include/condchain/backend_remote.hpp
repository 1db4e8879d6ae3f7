#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

#include "backend.hpp"

namespace condchain {

struct BackendConfig {
  std::string base_url;                             // e.g. http://host:port
  std::string chat_path = "/v1/chat/completions";
  std::string model_name;
  std::string api_key_env = "CONDCHAIN_API_KEY";
  int timeout_seconds = 60;
  int max_retries = 3;
  double backoff_base_seconds = 1.0;  // exponential with jitter
  int max_parallel_requests = 4;
  bool inline_images_base64 = false;  // otherwise pass refs as URLs
  std::string log_dir;                // request/response logging when set

  void validate() const {
    if (base_url.empty()) throw std::invalid_argument("backend base_url is required");
    if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
    if (max_parallel_requests < 1)
      throw std::invalid_argument("max_parallel_requests must be >= 1");
  }
};

class Timeout : public BackendError {
 public:
  explicit Timeout(const std::string& msg) : BackendError("timeout: " + msg) {}
};

class TransportError : public BackendError {
 public:
  explicit TransportError(const std::string& msg) : BackendError("transport error: " + msg) {}
};

class RateLimited : public BackendError {
 public:
  RateLimited() : BackendError("rate limited after retries") {}
};

namespace detail {

inline const char* role_system_prompt(AgentRole role) {
  switch (role) {
    case AgentRole::PlannerPolicy:
      return "You control a layered reasoning-chain builder. Decide the next step. "
             "Respond with JSON: {\"action\": \"EXTEND\"|\"FINISH\"|\"ROLLBACK\", "
             "\"strategy\": \"Deepening\"|\"Transition\"}.";
    case AgentRole::FactExtractor:
      return "Select a uniquely localizable subject in the input and extract its visual "
             "facts as flat JSON values. Respond with JSON: {\"subject\": string, "
             "\"facts\": object}.";
    case AgentRole::VpirGenerator:
      return "Write an executable predicate over the given fact variables that is true on "
             "the facts, and a minimally perturbed counterfactual that is false. Use only "
             "comparisons, and/or/not, arithmetic, and the builtins len/set/any/all/min/"
             "max/sum/abs/round/sorted. Respond with JSON: {\"p\": string, \"p_tilde\": string}.";
    case AgentRole::Renderer:
      return "Render the verified predicates into fluent conditions naming the subject, "
             "without any code artifacts. Respond with JSON: {\"c\": string, \"c_tilde\": string}.";
    case AgentRole::VerifierSemantic:
      return "Check the candidate bundle for the requested stage. Respond with JSON: "
             "{\"passed\": bool, \"reasons\": [{\"code\": string, \"message\": string}]}.";
    case AgentRole::Deleaker:
      return "Rewrite the subject so it stays uniquely referential but reveals none of the "
             "forbidden tokens. Respond with JSON: {\"safe_subject\": string}.";
    case AgentRole::QuestionWriter:
      return "Write a multiple-choice question with one correct answer. Respond with JSON: "
             "{\"prompt\": string, \"options\": [{\"label\": \"A\", \"text\": string}, ...], "
             "\"answer_label\": letter}.";
  }
  return "";
}

// Models often wrap JSON in markdown fences; strip them before parsing.
inline std::string strip_fences(const std::string& text) {
  std::size_t begin = text.find("```");
  if (begin == std::string::npos) return text;
  begin = text.find('\n', begin);
  if (begin == std::string::npos) return text;
  std::size_t end = text.rfind("```");
  if (end <= begin) return text;
  return text.substr(begin + 1, end - begin - 1);
}

}  // namespace detail

// Chat-completions client over HTTP with bounded parallelism, exponential
// jittered backoff, and per-role response validation. The API key comes from
// the configured environment variable and never reaches logs.
class RemoteBackend : public AgentBackend {
 public:
  explicit RemoteBackend(BackendConfig config)
      : config_(std::move(config)),
        slots_(std::max(1, config_.max_parallel_requests)),
        jitter_rng_(std::random_device{}()) {
    config_.validate();
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }

  bool supports_semantic_verification() const override { return true; }

  nlohmann::ordered_json call(const AgentRequest& request) override {
    nlohmann::ordered_json body = build_body(request);
    std::string body_text = body.dump();

    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) sleep_backoff(attempt);
      std::string failure;
      try {
        nlohmann::ordered_json content = post_once(body_text, request.role);
        log_exchange(request.role, body, content);
        return content;
      } catch (const RateLimited&) {
        failure = "rate limited";
      } catch (const Timeout& e) {
        failure = e.what();
      } catch (const TransportError& e) {
        failure = e.what();
      } catch (const SchemaViolation& e) {
        failure = e.what();  // invalid responses are retryable
      }
      last_failure_ = failure + " (attempt " + std::to_string(attempt + 1) + ")";
    }
    throw SchemaViolation(request.role, "no valid response after " +
                                            std::to_string(config_.max_retries + 1) +
                                            " attempts; last: " + last_failure_);
  }

 private:
  BackendConfig config_;
  std::string api_key_;
  std::counting_semaphore<64> slots_;
  std::mutex rng_mutex_;
  std::mt19937_64 jitter_rng_;
  std::string last_failure_;

  nlohmann::ordered_json build_body(const AgentRequest& request) const {
    nlohmann::ordered_json body;
    body["model"] = config_.model_name;
    nlohmann::ordered_json messages = nlohmann::ordered_json::array();
    messages.push_back({{"role", "system"},
                        {"content", detail::role_system_prompt(request.role)}});
    nlohmann::ordered_json parts = nlohmann::ordered_json::array();
    parts.push_back({{"type", "text"}, {"text", request.payload.dump(2)}});
    for (const auto& media : request.input_media) {
      std::string url = media;
      if (config_.inline_images_base64 && media.rfind("data:", 0) != 0)
        url = "data:image/png;base64," + media;
      parts.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
    }
    messages.push_back({{"role", "user"}, {"content", parts}});
    body["messages"] = messages;
    return body;
  }

  nlohmann::ordered_json post_once(const std::string& body_text, AgentRole role) {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<64>* s;
      ~Release() { s->release(); }
    } release{&slots_};

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto result = client.Post(config_.chat_path, headers, body_text, "application/json");
    if (!result) {
      auto err = result.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
        throw Timeout(httplib::to_string(err));
      throw TransportError(httplib::to_string(err));
    }
    if (result->status == 429) throw RateLimited();
    if (result->status >= 500) throw TransportError("server status " + std::to_string(result->status));
    if (result->status != 200)
      throw SchemaViolation(role, "unexpected status " + std::to_string(result->status));

    nlohmann::ordered_json envelope =
        nlohmann::ordered_json::parse(result->body, nullptr, false);
    if (envelope.is_discarded()) throw SchemaViolation(role, "response body is not JSON");
    if (!envelope.contains("choices") || envelope["choices"].empty())
      throw SchemaViolation(role, "response carries no choices");
    const auto& message = envelope["choices"][0].value("message", nlohmann::ordered_json::object());
    if (!message.contains("content") || !message["content"].is_string())
      throw SchemaViolation(role, "choice carries no text content");

    std::string content_text = detail::strip_fences(message["content"].get<std::string>());
    nlohmann::ordered_json content = nlohmann::ordered_json::parse(content_text, nullptr, false);
    if (content.is_discarded())
      throw SchemaViolation(role, "model content is not JSON");
    return content;
  }

  void sleep_backoff(int attempt) {
    double factor;
    {
      std::lock_guard<std::mutex> lock(rng_mutex_);
      factor = 0.5 + static_cast<double>(jitter_rng_() % 1000) / 1000.0;  // [0.5, 1.5)
    }
    double seconds = config_.backoff_base_seconds * static_cast<double>(1 << (attempt - 1)) * factor;
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }

  void log_exchange(AgentRole role, const nlohmann::ordered_json& request_body,
                    const nlohmann::ordered_json& response) {
    if (config_.log_dir.empty()) return;
    static std::mutex log_mutex;
    std::lock_guard<std::mutex> lock(log_mutex);
    std::ofstream out(config_.log_dir + "/remote_backend.jsonl", std::ios::app);
    nlohmann::ordered_json line;
    line["role"] = std::string(to_string(role));
    line["request"] = request_body;  // headers (and the key) are never logged
    line["response"] = response;
    out << line.dump() << "\n";
  }
};

}  // namespace condchain
