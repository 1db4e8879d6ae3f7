#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace condchain {

enum class Domain { Natural, Chart, Gui };

inline std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::Natural: return "natural";
    case Domain::Chart: return "chart";
    case Domain::Gui: return "gui";
  }
  return "unknown";
}

inline Domain domain_from_string(std::string_view s) {
  if (s == "natural") return Domain::Natural;
  if (s == "chart") return Domain::Chart;
  if (s == "gui") return Domain::Gui;
  throw std::invalid_argument("unknown domain: " + std::string(s));
}

// Normalized descriptor of one preprocessed input sample, as handed to the
// chain engine. `payload` carries the adapter output (chart metadata, parsed
// trajectory, or nothing for natural images).
struct InputRef {
  Domain domain = Domain::Natural;
  std::string id;
  nlohmann::ordered_json payload = nlohmann::ordered_json::object();

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["domain"] = std::string(to_string(domain));
    j["id"] = id;
    j["payload"] = payload;
    return j;
  }

  static InputRef from_json(const nlohmann::ordered_json& j) {
    InputRef r;
    r.domain = domain_from_string(j.at("domain").get<std::string>());
    r.id = j.at("id").get<std::string>();
    if (j.contains("payload")) r.payload = j.at("payload");
    return r;
  }
};

}  // namespace condchain
