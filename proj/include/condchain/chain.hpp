#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "analyze.hpp"
#include "domain.hpp"
#include "parser.hpp"
#include "question.hpp"
#include "value.hpp"
#include "version.hpp"

namespace condchain {

// Inter-layer relation governing subject transition. Seed opens a chain;
// Deepening stays on the current subject; Transition moves to a related
// entity. Custom names are passed through for experiment-specific taxonomies.
struct RelationalStrategy {
  enum class Kind { Seed, Deepening, Transition, Custom };
  Kind kind = Kind::Deepening;
  std::string custom_name;

  static RelationalStrategy seed() { return {Kind::Seed, {}}; }
  static RelationalStrategy deepening() { return {Kind::Deepening, {}}; }
  static RelationalStrategy transition() { return {Kind::Transition, {}}; }
  static RelationalStrategy custom(std::string name) {
    return {Kind::Custom, std::move(name)};
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::Seed: return "Seed";
      case Kind::Deepening: return "Deepening";
      case Kind::Transition: return "Transition";
      case Kind::Custom: return "Custom:" + custom_name;
    }
    return "?";
  }

  static RelationalStrategy from_string(const std::string& s) {
    if (s == "Seed") return seed();
    if (s == "Deepening") return deepening();
    if (s == "Transition") return transition();
    if (s.rfind("Custom:", 0) == 0) return custom(s.substr(7));
    throw std::invalid_argument("unknown relational strategy: " + s);
  }

  friend bool operator==(const RelationalStrategy& a, const RelationalStrategy& b) {
    return a.kind == b.kind && a.custom_name == b.custom_name;
  }
};

// A verified true-logic/counterfactual source pair with parsed forms.
struct PredicatePair {
  std::string p_source;
  std::string p_tilde_source;
  vpir::AstNode p_ast;
  vpir::AstNode p_tilde_ast;

  static PredicatePair parse(std::string p_src, std::string p_tilde_src) {
    PredicatePair pair;
    pair.p_ast = vpir::parse(p_src);
    pair.p_tilde_ast = vpir::parse(p_tilde_src);
    pair.p_source = std::move(p_src);
    pair.p_tilde_source = std::move(p_tilde_src);
    return pair;
  }
};

// One verified step of a conditional chain.
struct Layer {
  int index = 1;  // 1-based position
  RelationalStrategy strategy;
  std::string subject;
  std::optional<std::string> safe_subject;  // filled by the composer
  FactMap facts;
  PredicatePair pair;
  std::string condition_true;
  std::string condition_false;
  MultipleChoiceQuestion aux_question;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["index"] = index;
    j["strategy"] = strategy.to_string();
    j["subject"] = subject;
    j["safe_subject"] = safe_subject ? nlohmann::ordered_json(*safe_subject)
                                     : nlohmann::ordered_json(nullptr);
    j["facts"] = facts.as_json();
    j["p"] = pair.p_source;
    j["p_tilde"] = pair.p_tilde_source;
    j["c"] = condition_true;
    j["c_tilde"] = condition_false;
    j["aux_question"] = aux_question.to_json();
    return j;
  }

  static Layer from_json(const nlohmann::ordered_json& j) {
    Layer l;
    l.index = j.at("index").get<int>();
    l.strategy = RelationalStrategy::from_string(j.at("strategy").get<std::string>());
    l.subject = j.at("subject").get<std::string>();
    if (j.contains("safe_subject") && !j.at("safe_subject").is_null())
      l.safe_subject = j.at("safe_subject").get<std::string>();
    l.facts = FactMap::from_json(j.at("facts"));
    l.pair = PredicatePair::parse(j.at("p").get<std::string>(),
                                  j.at("p_tilde").get<std::string>());
    l.condition_true = j.at("c").get<std::string>();
    l.condition_false = j.at("c_tilde").get<std::string>();
    l.aux_question = MultipleChoiceQuestion::from_json(j.at("aux_question"));
    return l;
  }
};

// Execution-ordered verified prefix of a chain under construction.
struct ChainHistory {
  std::vector<Layer> layers;
  int depth() const { return static_cast<int>(layers.size()); }
};

struct PlannerDecision {
  enum class Action { Extend, Finish, Rollback };
  enum class Source { Rule, Policy };
  Action action = Action::Extend;
  std::optional<RelationalStrategy> strategy;  // present iff action == Extend
  Source source = Source::Rule;

  static std::string_view action_name(Action a) {
    switch (a) {
      case Action::Extend: return "EXTEND";
      case Action::Finish: return "FINISH";
      case Action::Rollback: return "ROLLBACK";
    }
    return "?";
  }
};

struct EngineConfig {
  int d_min = 2;
  int d_max = 4;
  int max_layer_retries = 3;
  int max_total_attempts = 20;
  int perturbation_max = 3;
  vpir::ComplexityProfile complexity_profile;  // default: unconstrained
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (d_min < 1 || d_min > d_max)
      throw std::invalid_argument("depth bounds must satisfy 1 <= d_min <= d_max");
    if (max_layer_retries < 1) throw std::invalid_argument("max_layer_retries must be >= 1");
    if (max_total_attempts < 1) throw std::invalid_argument("max_total_attempts must be >= 1");
    if (perturbation_max < 1) throw std::invalid_argument("perturbation_max must be >= 1");
  }

  nlohmann::ordered_json echo_json() const {
    nlohmann::ordered_json j;
    j["d_min"] = d_min;
    j["d_max"] = d_max;
    j["max_layer_retries"] = max_layer_retries;
    j["max_total_attempts"] = max_total_attempts;
    j["perturbation_max"] = perturbation_max;
    j["complexity_profile"] = complexity_profile.name;
    j["rng_seed"] = rng_seed;
    return j;
  }
};

// A finished chain: verified layers plus the terminal question.
struct ChainSkeleton {
  std::string id;
  InputRef input_ref;
  nlohmann::ordered_json config_echo;
  std::string complexity_profile_name;
  std::vector<Layer> layers;
  MultipleChoiceQuestion final_question;

  int depth() const { return static_cast<int>(layers.size()); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kChainSchemaVersion;
    j["id"] = id;
    j["input_ref"] = input_ref.to_json();
    j["config_echo"] = config_echo;
    j["complexity_profile"] = complexity_profile_name;
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& l : layers) j["layers"].push_back(l.to_json());
    j["final_question"] = final_question.to_json();
    return j;
  }

  std::string dump() const { return to_json().dump(); }

  static ChainSkeleton from_json(const nlohmann::ordered_json& j) {
    if (j.value("schema_version", "") != kChainSchemaVersion)
      throw std::invalid_argument("unsupported chain schema version");
    ChainSkeleton s;
    s.id = j.at("id").get<std::string>();
    s.input_ref = InputRef::from_json(j.at("input_ref"));
    if (j.contains("config_echo")) s.config_echo = j.at("config_echo");
    s.complexity_profile_name = j.value("complexity_profile", "");
    for (const auto& lj : j.at("layers")) s.layers.push_back(Layer::from_json(lj));
    s.final_question = MultipleChoiceQuestion::from_json(j.at("final_question"));
    return s;
  }
};

}  // namespace condchain
