#pragma once

#include <stdexcept>
#include <string>

namespace condchain {

class EngineError : public std::runtime_error {
 public:
  explicit EngineError(const std::string& msg) : std::runtime_error(msg) {}
};

// The planner backend returned a malformed or context-invalid decision.
class InvalidDecision : public EngineError {
 public:
  explicit InvalidDecision(const std::string& msg)
      : EngineError("invalid planner decision: " + msg) {}
};

class AttemptsExhausted : public EngineError {
 public:
  explicit AttemptsExhausted(int budget)
      : EngineError("chain construction exhausted its attempt budget of " +
                    std::to_string(budget)) {}
};

class SeedFailure : public EngineError {
 public:
  explicit SeedFailure(const std::string& msg)
      : EngineError("seed layer could not be synthesized: " + msg) {}
};

class RetriesExhaustedError : public EngineError {
 public:
  explicit RetriesExhaustedError(const std::string& what)
      : EngineError("retries exhausted for " + what) {}
};

}  // namespace condchain
