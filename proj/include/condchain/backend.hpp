#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace condchain {

// The seven generative/semantic duties the pipeline delegates to an agent.
enum class AgentRole {
  PlannerPolicy,
  FactExtractor,
  VpirGenerator,
  Renderer,
  VerifierSemantic,
  Deleaker,
  QuestionWriter,
};

inline std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::PlannerPolicy: return "planner_policy";
    case AgentRole::FactExtractor: return "fact_extractor";
    case AgentRole::VpirGenerator: return "vpir_generator";
    case AgentRole::Renderer: return "renderer";
    case AgentRole::VerifierSemantic: return "verifier_semantic";
    case AgentRole::Deleaker: return "deleaker";
    case AgentRole::QuestionWriter: return "question_writer";
  }
  return "unknown";
}

inline AgentRole agent_role_from_string(std::string_view s) {
  if (s == "planner_policy") return AgentRole::PlannerPolicy;
  if (s == "fact_extractor") return AgentRole::FactExtractor;
  if (s == "vpir_generator") return AgentRole::VpirGenerator;
  if (s == "renderer") return AgentRole::Renderer;
  if (s == "verifier_semantic") return AgentRole::VerifierSemantic;
  if (s == "deleaker") return AgentRole::Deleaker;
  if (s == "question_writer") return AgentRole::QuestionWriter;
  throw std::invalid_argument("unknown agent role: " + std::string(s));
}

// One request across the agent boundary. The payload is role-specific
// structured JSON; media are image references the backend may attach.
struct AgentRequest {
  AgentRole role = AgentRole::PlannerPolicy;
  nlohmann::ordered_json payload;
  std::vector<std::string> input_media;
};

class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& msg) : std::runtime_error(msg) {}
};

// The backend returned something that does not fit the role's response
// schema. In generation loops this counts as a retryable failure.
class SchemaViolation : public BackendError {
 public:
  SchemaViolation(AgentRole role, const std::string& detail)
      : BackendError("schema violation for role " + std::string(to_string(role)) + ": " + detail) {}
};

// Agent boundary. Implementations declare their own thread-safety; the
// scripted and procedural backends expect one instance per chain build.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual nlohmann::ordered_json call(const AgentRequest& request) = 0;

  // Whether verifier_semantic calls are meaningful for this backend. When
  // false the verifier records delegated checks as skipped.
  virtual bool supports_semantic_verification() const { return false; }
};

namespace detail {

inline const nlohmann::ordered_json& require_field(const nlohmann::ordered_json& j,
                                                   const char* field, AgentRole role) {
  if (!j.is_object() || !j.contains(field))
    throw SchemaViolation(role, std::string("missing field \"") + field + "\"");
  return j.at(field);
}

inline std::string require_string(const nlohmann::ordered_json& j, const char* field,
                                  AgentRole role) {
  const auto& v = require_field(j, field, role);
  if (!v.is_string())
    throw SchemaViolation(role, std::string("field \"") + field + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace detail

}  // namespace condchain
