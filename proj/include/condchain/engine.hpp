#pragma once

#include <optional>
#include <string>
#include <vector>

#include "backend.hpp"
#include "chain.hpp"
#include "domain.hpp"
#include "errors.hpp"
#include "verifier.hpp"

namespace condchain {

namespace detail {

inline nlohmann::ordered_json history_summary(const ChainHistory& history) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& l : history.layers) {
    nlohmann::ordered_json ij;
    ij["index"] = l.index;
    ij["strategy"] = l.strategy.to_string();
    ij["subject"] = l.subject;
    ij["fact_keys"] = l.facts.keys();
    out.push_back(std::move(ij));
  }
  return out;
}

struct PlannerResponse {
  PlannerDecision::Action action;
  RelationalStrategy strategy;
};

inline PlannerResponse call_planner(AgentBackend& backend, const ChainHistory& history,
                                    const EngineConfig& config) {
  AgentRequest req;
  req.role = AgentRole::PlannerPolicy;
  req.payload["depth"] = history.depth();
  req.payload["d_min"] = config.d_min;
  req.payload["d_max"] = config.d_max;
  req.payload["history"] = history_summary(history);

  nlohmann::ordered_json resp = backend.call(req);
  std::string action_text, strategy_text;
  try {
    action_text = require_string(resp, "action", AgentRole::PlannerPolicy);
    strategy_text = require_string(resp, "strategy", AgentRole::PlannerPolicy);
  } catch (const SchemaViolation& e) {
    throw InvalidDecision(e.what());
  }
  PlannerResponse out;
  if (action_text == "EXTEND") out.action = PlannerDecision::Action::Extend;
  else if (action_text == "FINISH") out.action = PlannerDecision::Action::Finish;
  else if (action_text == "ROLLBACK") out.action = PlannerDecision::Action::Rollback;
  else throw InvalidDecision("unknown action \"" + action_text + "\"");
  try {
    out.strategy = RelationalStrategy::from_string(strategy_text);
  } catch (const std::invalid_argument& e) {
    throw InvalidDecision(e.what());
  }
  return out;
}

}  // namespace detail

// Hybrid depth control: hard rules outside [d_min, d_max), the backend
// policy inside. A rule-forced EXTEND still consults the policy for its
// relational strategy (Seed is implied at depth 0).
inline PlannerDecision plan_step(const ChainHistory& history, const EngineConfig& config,
                                 AgentBackend& backend) {
  int depth = history.depth();
  if (depth >= config.d_max)
    return {PlannerDecision::Action::Finish, std::nullopt, PlannerDecision::Source::Rule};
  if (depth < config.d_min) {
    if (depth == 0)
      return {PlannerDecision::Action::Extend, RelationalStrategy::seed(),
              PlannerDecision::Source::Rule};
    detail::PlannerResponse resp = detail::call_planner(backend, history, config);
    if (resp.strategy.kind == RelationalStrategy::Kind::Seed)
      throw InvalidDecision("Seed strategy is only valid at depth 0");
    return {PlannerDecision::Action::Extend, resp.strategy, PlannerDecision::Source::Rule};
  }

  detail::PlannerResponse resp = detail::call_planner(backend, history, config);
  PlannerDecision out;
  out.action = resp.action;
  out.source = PlannerDecision::Source::Policy;
  if (resp.action == PlannerDecision::Action::Extend) {
    if (resp.strategy.kind == RelationalStrategy::Kind::Seed)
      throw InvalidDecision("Seed strategy is only valid at depth 0");
    out.strategy = resp.strategy;
  } else if (resp.action == PlannerDecision::Action::Rollback && history.depth() < 2) {
    throw InvalidDecision("ROLLBACK requires a non-seed layer (depth >= 2)");
  }
  return out;
}

struct SynthesisResult {
  std::optional<Layer> layer;
  RegenTarget failed_stage = RegenTarget::FactsAndSubject;
  std::vector<Verdict> verdicts;  // every failing verdict, in order
  bool ok() const { return layer.has_value(); }
};

// Runs the four-step layer workflow (facts, predicate pair, rendering, exit
// question) with stage-aware regeneration: a failed stage is retried up to
// max_layer_retries times while verified upstream artifacts are kept.
inline SynthesisResult synthesize_layer(const ChainHistory& history,
                                        const RelationalStrategy& strategy,
                                        const EngineConfig& config, AgentBackend& backend,
                                        const InputRef& input, const FactSchema& schema = {}) {
  int depth = history.depth();
  if ((depth == 0) != (strategy.kind == RelationalStrategy::Kind::Seed))
    throw InvalidDecision("Seed strategy is required exactly at depth 0, got " +
                          strategy.to_string() + " at depth " + std::to_string(depth));

  SynthesisResult result;
  auto fail = [&](RegenTarget stage) {
    result.failed_stage = stage;
    return result;
  };

  // facts and subject
  std::string subject;
  FactMap facts;
  std::optional<std::string> hint;
  bool ok = false;
  for (int attempt = 0; attempt < config.max_layer_retries && !ok; ++attempt) {
    AgentRequest req;
    req.role = AgentRole::FactExtractor;
    req.payload["input_ref"] = input.to_json();
    req.payload["strategy"] = strategy.to_string();
    req.payload["history"] = detail::history_summary(history);
    if (hint) req.payload["fix_hint"] = *hint;
    try {
      nlohmann::ordered_json resp = backend.call(req);
      subject = detail::require_string(resp, "subject", AgentRole::FactExtractor);
      facts = FactMap::from_json(detail::require_field(resp, "facts", AgentRole::FactExtractor));
    } catch (const SchemaViolation& e) {
      Verdict v;
      v.add(VerifyStage::StageI, "schema", e.what());
      result.verdicts.push_back(v);
      continue;
    } catch (const FactMapError& e) {
      Verdict v;
      v.add(VerifyStage::StageI, "schema", e.what());
      result.verdicts.push_back(v);
      continue;
    }
    CandidateBundle bundle{subject, facts, std::nullopt, {}, {}};
    Verdict v = verify_stage1(bundle, history, strategy, schema, &backend);
    if (v.passed) {
      ok = true;
    } else {
      hint = v.fix_hint;
      result.verdicts.push_back(std::move(v));
    }
  }
  if (!ok) return fail(RegenTarget::FactsAndSubject);

  // predicate pair
  PredicatePair pair;
  hint.reset();
  ok = false;
  for (int attempt = 0; attempt < config.max_layer_retries && !ok; ++attempt) {
    AgentRequest req;
    req.role = AgentRole::VpirGenerator;
    req.payload["subject"] = subject;
    req.payload["facts"] = facts.as_json();
    req.payload["profile"] = config.complexity_profile.to_json();
    req.payload["perturbation_max"] = config.perturbation_max;
    if (hint) req.payload["fix_hint"] = *hint;
    Verdict v;
    try {
      nlohmann::ordered_json resp = backend.call(req);
      std::string p_src = detail::require_string(resp, "p", AgentRole::VpirGenerator);
      std::string pt_src = detail::require_string(resp, "p_tilde", AgentRole::VpirGenerator);
      PredicatePair candidate = PredicatePair::parse(p_src, pt_src);

      std::vector<std::string> unbound;
      for (const auto& name : vpir::free_variables(candidate.p_ast))
        if (!facts.contains(name)) unbound.push_back(name);
      for (const auto& name : vpir::free_variables(candidate.p_tilde_ast))
        if (!facts.contains(name)) unbound.push_back(name);
      if (!unbound.empty()) {
        v.add(VerifyStage::Gate, "unbound-variable",
              "predicate references names outside the fact map: " + unbound.front());
      } else {
        vpir::PairVerdict gate = vpir::verify_pair(candidate.p_ast, candidate.p_tilde_ast, facts);
        if (!gate.accepted) {
          v.add(VerifyStage::Gate, gate.reason_code(), gate.detail);
        } else {
          vpir::ProfileCheck pc =
              vpir::check_profile(vpir::complexity(candidate.p_ast), config.complexity_profile);
          if (!pc.passed) {
            std::string msg = "complexity profile violated:";
            for (const auto& viol : pc.violations) msg += " " + viol + ";";
            v.add(VerifyStage::Gate, "complexity-profile", msg);
          } else {
            int dist = vpir::perturbation_distance(candidate.p_ast, candidate.p_tilde_ast);
            if (dist > config.perturbation_max)
              v.add(VerifyStage::Gate, "perturbation",
                    "counterfactual differs in " + std::to_string(dist) +
                        " tokens (max " + std::to_string(config.perturbation_max) + ")");
          }
        }
      }
      if (v.passed) {
        pair = std::move(candidate);
        ok = true;
      }
    } catch (const SchemaViolation& e) {
      v.add(VerifyStage::Gate, "schema-violation", e.what());
    } catch (const vpir::ParseError& e) {
      v.add(VerifyStage::Gate, "parse-error", e.what());
    } catch (const vpir::LexError& e) {
      v.add(VerifyStage::Gate, "parse-error", e.what());
    }
    if (!ok) {
      if (!v.fix_hint) v.fix_hint = "regenerate the predicate pair: " +
                                    (v.reasons.empty() ? std::string("unknown") : v.reasons.front().code);
      hint = v.fix_hint;
      result.verdicts.push_back(std::move(v));
    }
  }
  if (!ok) return fail(RegenTarget::VpirPair);

  // rendering
  std::string condition_true, condition_false;
  hint.reset();
  ok = false;
  for (int attempt = 0; attempt < config.max_layer_retries && !ok; ++attempt) {
    AgentRequest req;
    req.role = AgentRole::Renderer;
    req.payload["subject"] = subject;
    req.payload["facts"] = facts.as_json();
    req.payload["p"] = pair.p_source;
    req.payload["p_tilde"] = pair.p_tilde_source;
    if (hint) req.payload["fix_hint"] = *hint;
    try {
      nlohmann::ordered_json resp = backend.call(req);
      condition_true = detail::require_string(resp, "c", AgentRole::Renderer);
      condition_false = detail::require_string(resp, "c_tilde", AgentRole::Renderer);
    } catch (const SchemaViolation& e) {
      Verdict v;
      v.add(VerifyStage::StageII, "schema-violation", e.what());
      result.verdicts.push_back(v);
      continue;
    }
    CandidateBundle bundle{subject, facts, pair, condition_true, condition_false};
    Verdict v = verify_stage2(bundle, &backend);
    if (v.passed) {
      ok = true;
    } else {
      hint = v.fix_hint;
      result.verdicts.push_back(std::move(v));
    }
  }
  if (!ok) return fail(RegenTarget::Rendering);

  // auxiliary exit question
  std::optional<MultipleChoiceQuestion> aux;
  hint.reset();
  for (int attempt = 0; attempt < config.max_layer_retries && !aux; ++attempt) {
    AgentRequest req;
    req.role = AgentRole::QuestionWriter;
    req.payload["kind"] = "aux";
    req.payload["layer_index"] = depth + 1;
    req.payload["subject"] = subject;
    req.payload["facts"] = facts.as_json();
    if (hint) req.payload["fix_hint"] = *hint;
    try {
      MultipleChoiceQuestion q = MultipleChoiceQuestion::from_json(backend.call(req));
      std::vector<std::string> errs = q.validation_errors();
      if (errs.empty()) {
        aux = std::move(q);
      } else {
        Verdict v;
        for (auto& e : errs) v.add(VerifyStage::StageII, "question-invalid", e);
        hint = "write a well-formed multiple-choice question";
        result.verdicts.push_back(std::move(v));
      }
    } catch (const std::exception& e) {  // schema violations and JSON shape errors
      Verdict v;
      v.add(VerifyStage::StageII, "question-invalid", e.what());
      result.verdicts.push_back(v);
    }
  }
  if (!aux) return fail(RegenTarget::Rendering);

  Layer layer;
  layer.index = depth + 1;
  layer.strategy = strategy;
  layer.subject = std::move(subject);
  layer.facts = std::move(facts);
  layer.pair = std::move(pair);
  layer.condition_true = std::move(condition_true);
  layer.condition_false = std::move(condition_false);
  layer.aux_question = std::move(*aux);
  result.layer = std::move(layer);
  return result;
}

namespace detail {

inline MultipleChoiceQuestion request_final_question(const ChainHistory& history,
                                                     const EngineConfig& config,
                                                     AgentBackend& backend) {
  std::optional<std::string> hint;
  for (int attempt = 0; attempt < config.max_layer_retries; ++attempt) {
    AgentRequest req;
    req.role = AgentRole::QuestionWriter;
    req.payload["kind"] = "final";
    req.payload["history"] = history_summary(history);
    if (hint) req.payload["fix_hint"] = *hint;
    try {
      MultipleChoiceQuestion q = MultipleChoiceQuestion::from_json(backend.call(req));
      if (q.valid()) return q;
      hint = "write a well-formed multiple-choice question";
    } catch (const SchemaViolation&) {
      hint = "respond with a multiple-choice question object";
    } catch (const nlohmann::ordered_json::exception&) {
      hint = "respond with a multiple-choice question object";
    } catch (const std::invalid_argument&) {
      hint = "respond with a multiple-choice question object";
    }
  }
  throw RetriesExhaustedError("final question");
}

}  // namespace detail

// Builds a verified chain: plan, synthesize, verify, and either extend,
// finish, or roll back. Rollback fires on the policy's request or after
// max_layer_retries consecutive failures at the current frontier; the seed
// layer is never rolled back.
inline ChainSkeleton build_chain(const InputRef& input, const EngineConfig& config,
                                 AgentBackend& backend, const FactSchema& schema = {}) {
  config.validate();
  ChainHistory history;
  int attempts = 0;
  int consecutive_failures = 0;

  while (true) {
    PlannerDecision decision = plan_step(history, config, backend);
    switch (decision.action) {
      case PlannerDecision::Action::Finish: {
        ChainSkeleton skeleton;
        skeleton.id = input.id + "#s" + std::to_string(config.rng_seed);
        skeleton.input_ref = input;
        skeleton.config_echo = config.echo_json();
        skeleton.complexity_profile_name = config.complexity_profile.name;
        skeleton.layers = history.layers;
        skeleton.final_question = detail::request_final_question(history, config, backend);
        return skeleton;
      }
      case PlannerDecision::Action::Rollback: {
        history.layers.pop_back();  // depth >= 2 guaranteed by plan_step
        consecutive_failures = 0;
        continue;
      }
      case PlannerDecision::Action::Extend: {
        if (++attempts > config.max_total_attempts)
          throw AttemptsExhausted(config.max_total_attempts);
        SynthesisResult res =
            synthesize_layer(history, *decision.strategy, config, backend, input, schema);
        if (res.ok()) {
          history.layers.push_back(std::move(*res.layer));
          consecutive_failures = 0;
          continue;
        }
        ++consecutive_failures;
        if (consecutive_failures >= config.max_layer_retries) {
          if (history.depth() == 0) {
            std::string why = res.verdicts.empty() ? "no verdicts"
                                                   : res.verdicts.back().reasons.front().message;
            throw SeedFailure(why);
          }
          if (history.depth() >= 2) {
            history.layers.pop_back();  // discard the most recent non-seed layer
            consecutive_failures = 0;
          }
          // at depth 1 there is no rollback target; keep retrying within the
          // attempt budget
        }
        continue;
      }
    }
  }
}

}  // namespace condchain
