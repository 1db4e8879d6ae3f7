#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "backend.hpp"
#include "chain.hpp"
#include "errors.hpp"
#include "eval.hpp"
#include "verifier.hpp"
#include "version.hpp"

namespace condchain {

class ComposerError : public std::runtime_error {
 public:
  explicit ComposerError(const std::string& msg) : std::runtime_error(msg) {}
};

class MissingQuestion : public ComposerError {
 public:
  explicit MissingQuestion(const std::string& msg) : ComposerError(msg) {}
};

enum class PathKind { TruePath, FalsePath };

inline std::string_view to_string(PathKind k) {
  return k == PathKind::TruePath ? "true_path" : "false_path";
}

struct BenchmarkInstance {
  std::string instance_id;
  Domain domain = Domain::Natural;
  PathKind path_kind = PathKind::TruePath;
  std::optional<int> divergence_layer;  // present iff false_path
  std::string instruction_text;
  MultipleChoiceQuestion question;
  std::string chain_ref;
  int depth = 0;
  std::string complexity_profile_name;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kInstanceSchemaVersion;
    j["instance_id"] = instance_id;
    j["domain"] = std::string(to_string(domain));
    j["path_kind"] = std::string(to_string(path_kind));
    j["divergence_layer"] = divergence_layer ? nlohmann::ordered_json(*divergence_layer)
                                             : nlohmann::ordered_json(nullptr);
    j["chain_ref"] = chain_ref;
    j["depth"] = depth;
    j["complexity_profile"] = complexity_profile_name;
    j["instruction_text"] = instruction_text;
    j["question"] = question.to_json();
    return j;
  }

  static BenchmarkInstance from_json(const nlohmann::ordered_json& j) {
    if (j.value("schema_version", "") != kInstanceSchemaVersion)
      throw std::invalid_argument("unsupported instance schema version");
    BenchmarkInstance b;
    b.instance_id = j.at("instance_id").get<std::string>();
    b.domain = domain_from_string(j.at("domain").get<std::string>());
    b.path_kind = j.at("path_kind").get<std::string>() == "true_path" ? PathKind::TruePath
                                                                      : PathKind::FalsePath;
    if (!j.at("divergence_layer").is_null())
      b.divergence_layer = j.at("divergence_layer").get<int>();
    b.chain_ref = j.at("chain_ref").get<std::string>();
    b.depth = j.at("depth").get<int>();
    b.complexity_profile_name = j.value("complexity_profile", "");
    b.instruction_text = j.at("instruction_text").get<std::string>();
    b.question = MultipleChoiceQuestion::from_json(j.at("question"));
    return b;
  }
};

namespace detail {

inline void collect_string_literals(const vpir::AstNode& n, std::vector<std::string>& out) {
  if (n.kind == vpir::NodeKind::Literal) {
    if (n.literal.is_string()) out.push_back(n.literal.get<std::string>());
    if (n.literal.is_array())
      for (const auto& e : n.literal)
        if (e.is_string()) out.push_back(e.get<std::string>());
  }
  for (const auto& c : n.children) collect_string_literals(c, out);
}

inline void collect_value_tokens(const FactValue& v, std::vector<std::string>& out) {
  if (v.is_string()) out.push_back(v.get<std::string>());
  else if (v.is_number_integer()) out.push_back(std::to_string(v.get<std::int64_t>()));
  else if (v.is_number_float()) out.push_back(vpir::detail::render_float(v.get<double>()));
  else if (v.is_boolean()) out.push_back(v.get<bool>() ? "true" : "false");
  else if (v.is_array())
    for (const auto& e : v) collect_value_tokens(e, out);
  else if (v.is_object())
    for (const auto& [k, e] : v.items()) {
      (void)k;
      collect_value_tokens(e, out);
    }
}

}  // namespace detail

// Tokens a safe subject must not mention: every string literal in the
// predicate pair plus the fact values of every key the true logic reads.
inline std::vector<std::string> leak_tokens(const Layer& layer) {
  std::vector<std::string> tokens;
  detail::collect_string_literals(layer.pair.p_ast, tokens);
  detail::collect_string_literals(layer.pair.p_tilde_ast, tokens);
  for (const auto& key : vpir::free_variables(layer.pair.p_ast))
    if (layer.facts.contains(key)) detail::collect_value_tokens(layer.facts.at(key), tokens);
  return tokens;
}

inline std::optional<std::string> find_leak(const std::string& subject_text, const Layer& layer) {
  for (const auto& token : leak_tokens(layer))
    if (detail::contains_word(subject_text, token)) return token;
  return std::nullopt;
}

// Asks the backend for a condition-free rewording of the layer's subject and
// enforces the mechanical leak check, regenerating on failure.
inline std::string deleak_subject(const Layer& layer, AgentBackend& backend, int max_retries = 3) {
  std::optional<std::string> hint;
  std::string last_leak;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    AgentRequest req;
    req.role = AgentRole::Deleaker;
    req.payload["subject"] = layer.subject;
    req.payload["layer_index"] = layer.index;
    req.payload["forbidden_tokens"] = leak_tokens(layer);
    if (hint) req.payload["fix_hint"] = *hint;
    std::string proposal;
    try {
      proposal = detail::require_string(backend.call(req), "safe_subject", AgentRole::Deleaker);
    } catch (const SchemaViolation&) {
      hint = "respond with {\"safe_subject\": ...}";
      continue;
    }
    if (proposal.empty()) {
      hint = "safe subject must be non-empty";
      continue;
    }
    std::optional<std::string> leak = find_leak(proposal, layer);
    if (!leak) return proposal;
    last_leak = *leak;
    hint = "the description leaks the tested token \"" + *leak + "\"; use a neutral descriptor";
  }
  throw RetriesExhaustedError("subject de-leakage at layer " + std::to_string(layer.index) +
                              (last_leak.empty() ? "" : " (leaked \"" + last_leak + "\")"));
}

// Deterministic nested instruction template. Clause t opens an if-level for
// its safe subject and condition; the innermost continuation answers the
// attached question and every level carries its early-exit pointer.
inline std::string render_instruction(
    const std::vector<std::pair<std::string, std::string>>& clauses,
    const MultipleChoiceQuestion& question) {
  if (clauses.empty()) throw ComposerError("render_instruction requires at least one clause");
  std::string out;
  const std::size_t n = clauses.size();
  for (std::size_t t = 0; t < n; ++t) {
    out += std::string(2 * t, ' ');
    out += "If, regarding " + clauses[t].first + ", " + clauses[t].second + ", then\n";
  }
  out += std::string(2 * n, ' ') + "answer the following question;\n";
  for (std::size_t t = n; t-- > 0;) {
    out += std::string(2 * t, ' ');
    out += "otherwise, answer question Q" + std::to_string(t + 1) + ".\n";
  }
  out += "\nQuestion: " + question.prompt + "\n";
  for (const auto& o : question.options)
    out += std::string(1, o.label) + ". " + o.text + "\n";
  return out;
}

struct ComposeOptions {
  int deleak_retries = 3;
};

// Compiles one verified skeleton into its paired True-path and False-path
// instances, filling each layer's safe subject along the way. The divergence
// layer is drawn uniformly from {1..T-1} with a seeded generator; a
// single-layer chain diverges at its only layer.
inline std::pair<BenchmarkInstance, BenchmarkInstance> compile_pair(
    ChainSkeleton& skeleton, std::uint64_t rng_seed, AgentBackend& backend,
    const ComposeOptions& options = {}) {
  const int T = skeleton.depth();
  if (T < 1) throw ComposerError("skeleton has no layers");

  for (const auto& layer : skeleton.layers) {
    if (!layer.aux_question.valid())
      throw MissingQuestion("layer " + std::to_string(layer.index) +
                            " lacks a valid auxiliary question");
    // answer-key soundness: early termination must be mechanically entailed
    vpir::PairVerdict gate =
        vpir::verify_pair(layer.pair.p_ast, layer.pair.p_tilde_ast, layer.facts);
    if (!gate.accepted)
      throw ComposerError("layer " + std::to_string(layer.index) +
                          " fails the execution gate at compile time: " + gate.reason_code());
  }
  if (!skeleton.final_question.valid())
    throw MissingQuestion("skeleton lacks a valid final question");

  std::vector<std::string> safe_subjects;
  for (auto& layer : skeleton.layers) {
    layer.safe_subject = deleak_subject(layer, backend, options.deleak_retries);
    safe_subjects.push_back(*layer.safe_subject);
  }

  int j = 1;
  if (T >= 2) {
    std::mt19937_64 gen(rng_seed);
    j = 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(T - 1));
  }

  std::vector<std::pair<std::string, std::string>> true_clauses, false_clauses;
  for (int t = 0; t < T; ++t) {
    const Layer& layer = skeleton.layers[t];
    true_clauses.emplace_back(safe_subjects[t], layer.condition_true);
    false_clauses.emplace_back(safe_subjects[t], t + 1 == j ? layer.condition_false
                                                            : layer.condition_true);
  }

  BenchmarkInstance t_inst;
  t_inst.instance_id = skeleton.id + "#t";
  t_inst.domain = skeleton.input_ref.domain;
  t_inst.path_kind = PathKind::TruePath;
  t_inst.chain_ref = skeleton.id;
  t_inst.depth = T;
  t_inst.complexity_profile_name = skeleton.complexity_profile_name;
  t_inst.question = skeleton.final_question;
  t_inst.instruction_text = render_instruction(true_clauses, t_inst.question);

  BenchmarkInstance f_inst = t_inst;
  f_inst.instance_id = skeleton.id + "#f";
  f_inst.path_kind = PathKind::FalsePath;
  f_inst.divergence_layer = j;
  f_inst.question = skeleton.layers[j - 1].aux_question;
  f_inst.instruction_text = render_instruction(false_clauses, f_inst.question);

  return {std::move(t_inst), std::move(f_inst)};
}

struct IsomorphismCheck {
  bool passed = true;
  std::string diff_summary;
};

// The paired texts must differ only inside the divergence layer's clause
// line and the trailing question block.
inline IsomorphismCheck near_isomorphism_check(const BenchmarkInstance& true_instance,
                                               const BenchmarkInstance& false_instance) {
  auto fail = [](std::string why) { return IsomorphismCheck{false, std::move(why)}; };
  if (true_instance.chain_ref != false_instance.chain_ref)
    return fail("instances come from different skeletons");
  if (true_instance.path_kind != PathKind::TruePath ||
      false_instance.path_kind != PathKind::FalsePath)
    return fail("expected a (true_path, false_path) pair");
  if (!false_instance.divergence_layer) return fail("false instance lacks a divergence layer");

  const int T = true_instance.depth;
  const int j = *false_instance.divergence_layer;

  auto lines = [](const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
      if (c == '\n') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  };
  std::vector<std::string> a = lines(true_instance.instruction_text);
  std::vector<std::string> b = lines(false_instance.instruction_text);

  // template prefix: T clause lines, the terminal line, T early-exit lines
  const std::size_t prefix = 2 * static_cast<std::size_t>(T) + 1;
  if (a.size() < prefix || b.size() < prefix) return fail("instruction texts are truncated");
  for (std::size_t i = 0; i < prefix; ++i) {
    bool is_divergence_clause = i == static_cast<std::size_t>(j - 1);
    if (is_divergence_clause) continue;  // the swapped clause may differ
    if (a[i] != b[i])
      return fail("texts differ outside the divergence clause at line " + std::to_string(i + 1) +
                  ": \"" + a[i] + "\" vs \"" + b[i] + "\"");
  }
  return {};
}

// Post-hoc re-check used by audits: no safe subject filled in during
// composition may contain a tested literal or fact-value token.
inline bool leak_free(const ChainSkeleton& skeleton) {
  for (const auto& layer : skeleton.layers)
    if (layer.safe_subject && find_leak(*layer.safe_subject, layer)) return false;
  return true;
}

}  // namespace condchain
