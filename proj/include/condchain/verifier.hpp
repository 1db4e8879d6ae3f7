#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "backend.hpp"
#include "chain.hpp"
#include "textdiff.hpp"
#include "value.hpp"

namespace condchain {

// Stage I covers facts and subjects, Stage II language realization; the
// predicate-pair execution gate sits between them and routes regeneration
// on its own.
enum class VerifyStage { StageI, Gate, StageII };

inline std::string_view to_string(VerifyStage s) {
  switch (s) {
    case VerifyStage::StageI: return "I";
    case VerifyStage::Gate: return "gate";
    case VerifyStage::StageII: return "II";
  }
  return "?";
}

struct VerdictReason {
  std::string code;
  std::string message;
  VerifyStage stage = VerifyStage::StageI;
};

struct Verdict {
  bool passed = true;
  std::vector<VerdictReason> reasons;
  std::optional<std::string> fix_hint;
  std::vector<std::string> skipped;  // delegated checks that could not run

  void add(VerifyStage stage, std::string code, std::string message) {
    passed = false;
    reasons.push_back({std::move(code), std::move(message), stage});
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["passed"] = passed;
    j["reasons"] = nlohmann::ordered_json::array();
    for (const auto& r : reasons)
      j["reasons"].push_back({{"code", r.code},
                              {"message", r.message},
                              {"stage", std::string(to_string(r.stage))}});
    j["fix_hint"] = fix_hint ? nlohmann::ordered_json(*fix_hint) : nlohmann::ordered_json(nullptr);
    if (!skipped.empty()) j["skipped"] = skipped;
    return j;
  }
};

// The tuple under review for one layer.
struct CandidateBundle {
  std::string subject;
  FactMap facts;
  std::optional<PredicatePair> pair;
  std::string condition_true;
  std::string condition_false;
};

enum class ValueKind { String, Integer, Float, Boolean, Null, List, Map };

inline bool matches_kind(const FactValue& v, ValueKind k) {
  switch (k) {
    case ValueKind::String: return v.is_string();
    case ValueKind::Integer: return v.is_number_integer();
    case ValueKind::Float: return v.is_number_float() || v.is_number_integer();
    case ValueKind::Boolean: return v.is_boolean();
    case ValueKind::Null: return v.is_null();
    case ValueKind::List: return v.is_array();
    case ValueKind::Map: return v.is_object();
  }
  return false;
}

// Per-domain constraints on extracted facts. An empty schema accepts any
// identifier-keyed FactMap.
struct FactSchema {
  std::optional<std::set<std::string>> allowed_keys;
  struct Constraint {
    std::optional<ValueKind> kind;
    std::vector<FactValue> allowed_values;  // empty = unconstrained
  };
  std::map<std::string, Constraint> key_constraints;
};

namespace detail {

inline std::string normalize_subject(const std::string& s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

inline std::string hint_for(const std::string& code) {
  if (code == "schema") return "re-extract facts that conform to the domain schema";
  if (code == "non-repetition-subject")
    return "choose a subject not already used in the chain history";
  if (code == "non-repetition-pair")
    return "extract a different fact set for this subject";
  if (code == "empty-subject") return "provide a non-empty subject description";
  if (code == "code-artifact")
    return "re-render the condition in plain language without code fragments";
  if (code == "counterfactual-identical")
    return "render the counterfactual so it differs from the true condition";
  if (code == "counterfactual-divergent")
    return "keep the counterfactual wording closer to the true condition";
  if (code == "empty-rendering") return "provide non-empty condition texts";
  return "address: " + code;
}

inline void finalize(Verdict& v) {
  if (!v.passed && !v.fix_hint) v.fix_hint = hint_for(v.reasons.front().code);
}

// Word-bounded, case-insensitive search for `token` inside `text`.
// Boundaries are any characters that cannot extend an identifier-like word.
inline bool contains_word(const std::string& text, const std::string& token) {
  if (token.empty()) return false;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  std::string hay = lower(text), needle = lower(token);
  auto wordish = [](char c) {
    return c == '_' || std::isalnum(static_cast<unsigned char>(c));
  };
  std::size_t pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !wordish(hay[pos - 1]);
    std::size_t end = pos + needle.size();
    bool right_ok = end >= hay.size() || !wordish(hay[end]);
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

inline bool is_machine_name(const std::string& key) {
  return key.find('_') != std::string::npos;
}

}  // namespace detail

// Stage I: fact and subject verification. Mechanical checks run first;
// delegated checks (visual grounding, relational compliance) go through the
// backend when it supports them, otherwise they are recorded as skipped.
inline Verdict verify_stage1(const CandidateBundle& bundle, const ChainHistory& history,
                             const RelationalStrategy& strategy, const FactSchema& schema,
                             AgentBackend* backend) {
  Verdict v;

  if (bundle.subject.empty()) v.add(VerifyStage::StageI, "empty-subject", "subject is empty");

  for (const auto& key : bundle.facts.keys()) {
    if (schema.allowed_keys && !schema.allowed_keys->count(key))
      v.add(VerifyStage::StageI, "schema", "fact key not in domain schema: \"" + key + "\"");
    auto it = schema.key_constraints.find(key);
    if (it == schema.key_constraints.end()) continue;
    const FactValue& value = bundle.facts.at(key);
    if (it->second.kind && !matches_kind(value, *it->second.kind))
      v.add(VerifyStage::StageI, "schema", "fact value has wrong type for \"" + key + "\"");
    if (!it->second.allowed_values.empty()) {
      bool hit = false;
      for (const auto& allowed : it->second.allowed_values)
        if (allowed == value) {
          hit = true;
          break;
        }
      if (!hit)
        v.add(VerifyStage::StageI, "schema",
              "fact value " + value.dump() + " not allowed for \"" + key + "\"");
    }
  }

  std::string norm = detail::normalize_subject(bundle.subject);
  std::vector<std::string> bundle_keys = bundle.facts.keys();
  std::set<std::string> key_set(bundle_keys.begin(), bundle_keys.end());
  for (const auto& prior : history.layers) {
    if (detail::normalize_subject(prior.subject) == norm) {
      v.add(VerifyStage::StageI, "non-repetition-subject",
            "subject duplicates layer " + std::to_string(prior.index) + ": \"" + prior.subject +
                "\"");
      break;
    }
  }
  for (const auto& prior : history.layers) {
    std::vector<std::string> prior_keys = prior.facts.keys();
    std::set<std::string> prior_set(prior_keys.begin(), prior_keys.end());
    if (prior.subject == bundle.subject && prior_set == key_set) {
      v.add(VerifyStage::StageI, "non-repetition-pair",
            "(subject, fact keys) duplicates layer " + std::to_string(prior.index));
      break;
    }
  }

  if (backend && backend->supports_semantic_verification()) {
    AgentRequest req;
    req.role = AgentRole::VerifierSemantic;
    req.payload["stage"] = "I";
    req.payload["subject"] = bundle.subject;
    req.payload["facts"] = bundle.facts.as_json();
    req.payload["strategy"] = strategy.to_string();
    nlohmann::ordered_json prior = nlohmann::ordered_json::array();
    for (const auto& l : history.layers)
      prior.push_back({{"index", l.index}, {"subject", l.subject}});
    req.payload["history"] = prior;
    nlohmann::ordered_json resp = backend->call(req);
    if (!resp.value("passed", true)) {
      for (const auto& r : resp.value("reasons", nlohmann::ordered_json::array()))
        v.add(VerifyStage::StageI, r.value("code", "delegated"),
              r.value("message", "delegated check failed"));
      if (v.reasons.empty())
        v.add(VerifyStage::StageI, "delegated", "backend verifier rejected the bundle");
    }
  } else {
    v.skipped = {"visual-grounding", "relational-compliance", "fact-consistency"};
  }

  detail::finalize(v);
  return v;
}

struct Stage2Options {
  double max_word_diff_fraction = 0.35;
};

// Stage II: language realization verification over the rendered condition
// pair. Assumes the predicate pair already passed the execution gate.
inline Verdict verify_stage2(const CandidateBundle& bundle, AgentBackend* backend,
                             const Stage2Options& options = {}) {
  Verdict v;

  static const char* kCodeFragments[] = {"==", "!=", "and(", "`", "len("};
  for (const std::string& text : {bundle.condition_true, bundle.condition_false}) {
    if (text.empty()) {
      v.add(VerifyStage::StageII, "empty-rendering", "condition text is empty");
      continue;
    }
    for (const char* frag : kCodeFragments)
      if (text.find(frag) != std::string::npos) {
        v.add(VerifyStage::StageII, "code-artifact",
              "condition contains code fragment \"" + std::string(frag) + "\"");
        break;
      }
    for (const auto& key : bundle.facts.keys())
      if (detail::is_machine_name(key) && detail::contains_word(text, key)) {
        v.add(VerifyStage::StageII, "code-artifact",
              "condition contains machine fact key \"" + key + "\"");
        break;
      }
  }

  if (!bundle.condition_true.empty() && bundle.condition_true == bundle.condition_false)
    v.add(VerifyStage::StageII, "counterfactual-identical",
          "true and counterfactual conditions are identical");

  std::vector<std::string> wt = normalized_words(bundle.condition_true);
  std::vector<std::string> wf = normalized_words(bundle.condition_false);
  std::size_t longer = std::max(wt.size(), wf.size());
  if (longer > 0) {
    std::size_t diff = aligned_diff_count(wt, wf);
    if (static_cast<double>(diff) > options.max_word_diff_fraction * static_cast<double>(longer))
      v.add(VerifyStage::StageII, "counterfactual-divergent",
            "counterfactual wording differs in " + std::to_string(diff) + " of " +
                std::to_string(longer) + " words");
  }

  if (backend && backend->supports_semantic_verification()) {
    AgentRequest req;
    req.role = AgentRole::VerifierSemantic;
    req.payload["stage"] = "II";
    req.payload["subject"] = bundle.subject;
    req.payload["c"] = bundle.condition_true;
    req.payload["c_tilde"] = bundle.condition_false;
    if (bundle.pair) {
      req.payload["p"] = bundle.pair->p_source;
      req.payload["p_tilde"] = bundle.pair->p_tilde_source;
    }
    nlohmann::ordered_json resp = backend->call(req);
    if (!resp.value("passed", true)) {
      for (const auto& r : resp.value("reasons", nlohmann::ordered_json::array()))
        v.add(VerifyStage::StageII, r.value("code", "delegated"),
              r.value("message", "delegated check failed"));
      if (v.reasons.empty())
        v.add(VerifyStage::StageII, "delegated", "backend verifier rejected the rendering");
    }
  } else {
    v.skipped = {"semantic-fidelity", "unambiguous-reference"};
  }

  detail::finalize(v);
  return v;
}

enum class RegenTarget { FactsAndSubject, VpirPair, Rendering };

inline std::string_view to_string(RegenTarget t) {
  switch (t) {
    case RegenTarget::FactsAndSubject: return "facts_and_subject";
    case RegenTarget::VpirPair: return "vpir_pair";
    case RegenTarget::Rendering: return "rendering";
  }
  return "?";
}

// Stage-aware regeneration routing: the earliest failing stage wins.
inline RegenTarget route_regeneration(const Verdict& verdict) {
  if (verdict.passed)
    throw std::logic_error("route_regeneration requires a failed verdict");
  bool gate = false, stage2 = false;
  for (const auto& r : verdict.reasons) {
    if (r.stage == VerifyStage::StageI) return RegenTarget::FactsAndSubject;
    if (r.stage == VerifyStage::Gate) gate = true;
    if (r.stage == VerifyStage::StageII) stage2 = true;
  }
  if (gate) return RegenTarget::VpirPair;
  if (stage2) return RegenTarget::Rendering;
  throw std::logic_error("verdict carries no staged reasons");
}

}  // namespace condchain
