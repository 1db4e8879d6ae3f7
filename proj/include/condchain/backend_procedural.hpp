#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "backend.hpp"
#include "parser.hpp"
#include "unparse.hpp"
#include "value.hpp"
#include "verifier.hpp"

namespace condchain {

class WorldTooSmall : public std::invalid_argument {
 public:
  explicit WorldTooSmall(const std::string& msg) : std::invalid_argument(msg) {}
};

// Closed-world description the procedural backend draws from. Each attribute
// carries a pool of plausible values; the first-listed values are not
// special, any pool member may be observed.
struct WorldAttribute {
  std::string key;
  std::vector<FactValue> pool;
};

struct WorldSubject {
  std::string noun;
  std::vector<WorldAttribute> attributes;
};

struct WorldSpec {
  std::vector<WorldSubject> subjects;

  static WorldSpec default_world() {
    WorldSpec w;
    std::vector<WorldAttribute> base = {
        {"color", {"red", "blue", "green", "yellow", "black"}},
        {"position", {"left", "right", "center"}},
        {"size", {"small", "medium", "large"}},
        {"material", {"metal", "wood", "plastic", "glass"}},
        {"count", {2, 3, 5, 8}},
    };
    for (const char* noun : {"car", "truck", "bicycle", "building", "sign", "lamp"})
      w.subjects.push_back({noun, base});
    return w;
  }

  void validate() const {
    if (subjects.size() < 2)
      throw WorldTooSmall("world needs at least 2 subjects, has " +
                          std::to_string(subjects.size()));
    for (const auto& s : subjects)
      if (s.attributes.size() < 2)
        throw WorldTooSmall("subject \"" + s.noun + "\" needs at least 2 attributes");
  }
};

// Fully deterministic agent: synthesizes facts from the closed world, builds
// the true logic as a conjunction of observed atoms and the counterfactual
// by flipping one literal, so the execution gate holds by construction.
// Small failure rates are injected on the generative roles to exercise the
// engine's regeneration paths.
class ProceduralBackend : public AgentBackend {
 public:
  explicit ProceduralBackend(std::uint64_t seed, WorldSpec world = WorldSpec::default_world())
      : world_(std::move(world)), rng_(seed) {
    world_.validate();
  }

  bool supports_semantic_verification() const override { return true; }

  nlohmann::ordered_json call(const AgentRequest& request) override {
    switch (request.role) {
      case AgentRole::PlannerPolicy: return planner(request.payload);
      case AgentRole::FactExtractor: return extract_facts(request.payload);
      case AgentRole::VpirGenerator: return generate_pair(request.payload);
      case AgentRole::Renderer: return render(request.payload);
      case AgentRole::VerifierSemantic: return {{"passed", true}, {"reasons", nlohmann::ordered_json::array()}};
      case AgentRole::Deleaker: return deleak(request.payload);
      case AgentRole::QuestionWriter: return write_question(request.payload);
    }
    throw BackendError("unhandled role");
  }

 private:
  WorldSpec world_;
  std::mt19937_64 rng_;

  std::uint64_t draw() { return rng_(); }
  int below(int n) { return static_cast<int>(draw() % static_cast<std::uint64_t>(n)); }
  bool chance(int percent) { return below(100) < percent; }

  nlohmann::ordered_json planner(const nlohmann::ordered_json& payload) {
    int depth = payload.value("depth", 0);
    const char* strategy = chance(50) ? "Deepening" : "Transition";
    std::string action = "EXTEND";
    if (depth >= 2 && chance(5)) action = "ROLLBACK";
    else if (chance(50)) action = "FINISH";
    return {{"action", action}, {"strategy", strategy}};
  }

  nlohmann::ordered_json extract_facts(const nlohmann::ordered_json& payload) {
    const WorldSubject& ws = world_.subjects[below(static_cast<int>(world_.subjects.size()))];

    int want = 4 + below(2);  // enough keys for any predicate profile
    if (want > static_cast<int>(ws.attributes.size()))
      want = static_cast<int>(ws.attributes.size());
    std::vector<int> order(ws.attributes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[below(static_cast<int>(i))]);

    nlohmann::ordered_json facts = nlohmann::ordered_json::object();
    std::string color_word;
    for (int i = 0; i < want; ++i) {
      const WorldAttribute& attr = ws.attributes[order[i]];
      const FactValue& value = attr.pool[below(static_cast<int>(attr.pool.size()))];
      facts[attr.key] = value;
      if (attr.key == "color") color_word = value.get<std::string>();
    }

    // Half the subjects mention an observed attribute so the de-leakage
    // rewriter has real work to do.
    std::string subject = "the ";
    if (!color_word.empty() && chance(50)) subject += color_word + " ";
    subject += ws.noun;

    static const char* kQualifiers[] = {"near the curb",    "by the entrance",
                                        "under the light",  "at the corner",
                                        "beside the fence", "next to the wall"};
    std::set<std::string> used;
    for (const auto& h : payload.value("history", nlohmann::ordered_json::array()))
      used.insert(detail::normalize_subject(h.value("subject", "")));
    std::string candidate = subject;
    int salt = 0;
    while (used.count(detail::normalize_subject(candidate))) {
      candidate = subject + " " + kQualifiers[below(6)];
      if (++salt > 6) candidate = subject + " (sighting " + std::to_string(below(10000)) + ")";
    }

    return {{"subject", candidate}, {"facts", facts}};
  }

  // One `key == literal` atom per fact, true by construction.
  static std::string atom(const std::string& key, const FactValue& value) {
    return key + " == " + vpir::detail::render_json_literal(value);
  }

  FactValue flipped(const std::string& key, const FactValue& value) {
    for (const auto& subject : world_.subjects)
      for (const auto& attr : subject.attributes)
        if (attr.key == key)
          for (const auto& alt : attr.pool)
            if (!(alt == value)) return alt;
    if (value.is_number_integer()) return value.get<std::int64_t>() + 1;
    if (value.is_boolean()) return !value.get<bool>();
    if (value.is_string()) return value.get<std::string>() + " variant";
    return nullptr;
  }

  nlohmann::ordered_json generate_pair(const nlohmann::ordered_json& payload) {
    const auto& facts = payload.at("facts");
    std::vector<std::pair<std::string, FactValue>> entries;
    for (const auto& [k, v] : facts.items()) entries.emplace_back(k, v);

    std::string profile = payload.contains("profile")
                              ? payload.at("profile").value("name", "Custom")
                              : "Custom";

    if (chance(10)) {
      // deliberately broken counterfactual; the execution gate rejects it
      std::string p = atom(entries[0].first, entries[0].second);
      return {{"p", p}, {"p_tilde", p}};
    }

    if (profile == "Complex" && entries.size() >= 4) {
      const auto& [k0, v0] = entries[0];
      FactValue f0 = flipped(k0, v0);
      std::string p = "(" + atom(k0, v0) + " and " + atom(entries[1].first, entries[1].second) +
                      ") or (" + atom(entries[2].first, entries[2].second) + " and " +
                      atom(entries[3].first, entries[3].second) + " and " + atom(k0, v0) + ")";
      std::string pt = "(" + atom(k0, f0) + " and " + atom(entries[1].first, entries[1].second) +
                       ") or (" + atom(entries[2].first, entries[2].second) + " and " +
                       atom(entries[3].first, entries[3].second) + " and " + atom(k0, f0) + ")";
      return {{"p", p}, {"p_tilde", pt}};
    }

    int atoms = std::min<int>(2 + below(2), static_cast<int>(entries.size()));
    int flip_at = below(atoms);
    std::string p, pt;
    for (int i = 0; i < atoms; ++i) {
      if (i) {
        p += " and ";
        pt += " and ";
      }
      p += atom(entries[i].first, entries[i].second);
      pt += i == flip_at ? atom(entries[i].first, flipped(entries[i].first, entries[i].second))
                         : atom(entries[i].first, entries[i].second);
    }
    return {{"p", p}, {"p_tilde", pt}};
  }

  static std::string humanize(const std::string& key) {
    std::string out;
    for (char c : key) out += c == '_' ? ' ' : c;
    return out;
  }

  static std::string value_words(const FactValue& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_boolean()) return v.get<bool>() ? "enabled" : "disabled";
    if (v.is_number_float()) {
      std::string s = std::to_string(v.get<double>());
      while (s.size() > 1 && s.back() == '0') s.pop_back();
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    }
    return v.dump();
  }

  // Verbalizes the and/or trees of `key == literal` atoms this backend emits.
  std::string verbalize(const vpir::AstNode& n) {
    using vpir::NodeKind;
    if (n.kind == NodeKind::BoolOp) {
      std::string joiner = n.bool_op == vpir::BoolKind::Or ? ", or " : " and ";
      std::string out = n.bool_op == vpir::BoolKind::Or ? "either " : "";
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += joiner;
        out += verbalize(n.children[i]);
      }
      return out;
    }
    if (n.kind == NodeKind::Compare && n.cmp_ops.size() == 1 &&
        n.cmp_ops[0] == vpir::CmpOp::Eq && n.children[0].kind == NodeKind::Identifier &&
        n.children[1].kind == NodeKind::Literal) {
      return "its " + humanize(n.children[0].name) + " is " + value_words(n.children[1].literal);
    }
    throw BackendError("procedural renderer met an unexpected predicate shape");
  }

  nlohmann::ordered_json render(const nlohmann::ordered_json& payload) {
    std::string p = payload.at("p").get<std::string>();
    std::string pt = payload.at("p_tilde").get<std::string>();
    std::string c = verbalize(vpir::parse(p));
    std::string ct = verbalize(vpir::parse(pt));
    if (chance(10)) ct = c;  // broken rendering; Stage II rejects it
    return {{"c", c}, {"c_tilde", ct}};
  }

  nlohmann::ordered_json deleak(const nlohmann::ordered_json& payload) {
    std::string original = payload.value("subject", "");
    int index = payload.value("layer_index", 1);
    // A first proposal may echo the original (and leak); once a fix hint
    // arrives the rewrite is always neutral.
    if (!payload.contains("fix_hint") && chance(25)) return {{"safe_subject", original}};
    static const char* kOrdinals[] = {"first",   "second", "third", "fourth", "fifth",
                                      "sixth",   "seventh", "eighth", "ninth", "tenth"};
    std::string ordinal = index >= 1 && index <= 10 ? kOrdinals[index - 1]
                                                    : "number-" + std::to_string(index);
    return {{"safe_subject", "the " + ordinal + " highlighted object"}};
  }

  nlohmann::ordered_json write_question(const nlohmann::ordered_json& payload) {
    std::string kind = payload.value("kind", "final");
    std::string tag = kind == "aux"
                          ? "step " + std::to_string(payload.value("layer_index", 1))
                          : "the full procedure";
    nlohmann::ordered_json options = nlohmann::ordered_json::array();
    bool broken = chance(5);
    for (int i = 0; i < 4; ++i) {
      std::string label(1, static_cast<char>('A' + i));
      std::string text = "Marker " + label + " for " + tag;
      if (broken && i == 1) text = "Marker A for " + tag;  // duplicate; rejected
      options.push_back({{"label", label}, {"text", text}});
    }
    std::string answer(1, static_cast<char>('A' + below(4)));
    return {{"prompt", "Which marker corresponds to " + tag + "?"},
            {"options", options},
            {"answer_label", answer}};
  }
};

}  // namespace condchain
