#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "backend.hpp"

namespace condchain {

class FixtureExhausted : public BackendError {
 public:
  explicit FixtureExhausted(AgentRole role)
      : BackendError("fixture exhausted for role " + std::string(to_string(role))) {}
};

class KeyMissing : public BackendError {
 public:
  explicit KeyMissing(AgentRole role)
      : BackendError("fixture has no entries for role " + std::string(to_string(role))) {}
};

// Replays a recorded transcript keyed by (role, sequence index). Fixture
// format: JSON Lines of {"role": ..., "index": ..., "response": ...}.
// Deterministic by construction; one instance per chain build.
class ScriptedBackend : public AgentBackend {
 public:
  explicit ScriptedBackend(const nlohmann::ordered_json& fixture_entries,
                           bool semantic_verification = false)
      : semantic_(semantic_verification) {
    for (const auto& entry : fixture_entries) {
      AgentRole role = agent_role_from_string(entry.at("role").get<std::string>());
      std::size_t index = entry.at("index").get<std::size_t>();
      auto& queue = queues_[role];
      if (queue.size() <= index) queue.resize(index + 1);
      queue[index] = entry.at("response");
    }
  }

  static ScriptedBackend from_jsonl(const std::string& text, bool semantic_verification = false) {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      entries.push_back(nlohmann::ordered_json::parse(line));
    }
    return ScriptedBackend(entries, semantic_verification);
  }

  nlohmann::ordered_json call(const AgentRequest& request) override {
    auto it = queues_.find(request.role);
    if (it == queues_.end()) throw KeyMissing(request.role);
    std::size_t& cursor = cursors_[request.role];
    if (cursor >= it->second.size()) throw FixtureExhausted(request.role);
    return it->second[cursor++];
  }

  bool supports_semantic_verification() const override { return semantic_; }

  // True when every recorded response has been consumed.
  bool exhausted() const {
    for (const auto& [role, queue] : queues_) {
      auto it = cursors_.find(role);
      std::size_t used = it == cursors_.end() ? 0 : it->second;
      if (used < queue.size()) return false;
    }
    return true;
  }

 private:
  std::map<AgentRole, std::vector<nlohmann::ordered_json>> queues_;
  std::map<AgentRole, std::size_t> cursors_;
  bool semantic_ = false;
};

}  // namespace condchain
