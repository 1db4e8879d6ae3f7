#pragma once

// Canned scripted-backend transcripts used across the engine, composer, and
// acceptance suites. The "tiny example" drives a single-layer chain about a
// red car parked left of a blue truck.

#include <string>

#include "condchain/backend_scripted.hpp"
#include "condchain/chain.hpp"
#include "condchain/domain.hpp"

namespace fixtures {

using json = nlohmann::ordered_json;

inline json mcq(const std::string& prompt, const std::string& a, const std::string& b,
                const std::string& c, const std::string& d, const std::string& answer) {
  return {{"prompt", prompt},
          {"options",
           json::array({{{"label", "A"}, {"text", a}},
                        {{"label", "B"}, {"text", b}},
                        {{"label", "C"}, {"text", c}},
                        {{"label", "D"}, {"text", d}}})},
          {"answer_label", answer}};
}

inline json entry(const std::string& role, std::size_t index, json response) {
  return {{"role", role}, {"index", index}, {"response", std::move(response)}};
}

// Builds transcripts with per-role sequential indices.
struct FixtureBuilder {
  json entries = json::array();
  std::map<std::string, std::size_t> counters;

  void add(const std::string& role, json response) {
    entries.push_back(entry(role, counters[role]++, std::move(response)));
  }

  // One complete good layer: extraction, a gating pair over a single
  // attribute, rendering, and the auxiliary exit question.
  void add_layer(const std::string& subject, const std::string& key, const std::string& val,
                 const std::string& alt) {
    add("fact_extractor", {{"subject", subject}, {"facts", {{key, val}}}});
    add("vpir_generator",
        {{"p", key + " == \"" + val + "\""}, {"p_tilde", key + " == \"" + alt + "\""}});
    add("renderer", {{"c", subject + " has " + val + " " + key},
                     {"c_tilde", subject + " has " + alt + " " + key}});
    add("question_writer", mcq("Exit question for " + subject + "?", "w", "x", "y", "z", "A"));
  }

  condchain::ScriptedBackend backend(bool semantic = false) const {
    return condchain::ScriptedBackend(entries, semantic);
  }
};

// Transcript for a one-layer chain (d_min = d_max = 1): facts, predicate
// pair, rendering, aux question, final question, and the de-leakage rewrite
// used at composition time.
inline json tiny_example_fixture() {
  json entries = json::array();
  entries.push_back(entry("fact_extractor", 0,
                          {{"subject", "the car"},
                           {"facts", {{"color", "red"}, {"position", "left"}}}}));
  entries.push_back(entry("vpir_generator", 0,
                          {{"p", "color == \"red\" and position == \"left\""},
                           {"p_tilde", "color == \"blue\" and position == \"left\""}}));
  entries.push_back(entry("renderer", 0,
                          {{"c", "the car is red and on the left"},
                           {"c_tilde", "the car is blue and on the left"}}));
  entries.push_back(entry("question_writer", 0,
                          mcq("What is parked left of the blue truck?", "a car", "a bus",
                              "a bicycle", "a van", "A")));
  entries.push_back(entry("question_writer", 1,
                          mcq("What color is the truck parked beside the car?", "red", "blue",
                              "green", "white", "B")));
  entries.push_back(entry("deleaker", 0, {{"safe_subject", "the vehicle beside the truck"}}));
  return entries;
}

inline condchain::ScriptedBackend tiny_example_backend() {
  return condchain::ScriptedBackend(tiny_example_fixture());
}

inline condchain::EngineConfig tiny_example_config() {
  condchain::EngineConfig config;
  config.d_min = 1;
  config.d_max = 1;
  config.rng_seed = 7;
  config.complexity_profile = condchain::vpir::ComplexityProfile::simple();
  return config;
}

inline condchain::InputRef tiny_example_input() {
  condchain::InputRef input;
  input.domain = condchain::Domain::Natural;
  input.id = "tiny-example";
  return input;
}

}  // namespace fixtures
