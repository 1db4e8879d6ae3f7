#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace condchain {

// Fact values live in the value space of a JSON document: string, integer,
// float, boolean, null, list, map. Insertion order of object keys is
// preserved so serialization is byte-stable.
using FactValue = nlohmann::ordered_json;

inline constexpr int kMaxFactNestingDepth = 8;

class FactMapError : public std::runtime_error {
 public:
  explicit FactMapError(const std::string& msg) : std::runtime_error(msg) {}
};

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = [](char c) { return c == '_' || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9'); };
  if (!head(s[0])) return false;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!tail(s[i])) return false;
  return true;
}

inline bool is_reserved_word(std::string_view s) {
  return s == "and" || s == "or" || s == "not" || s == "in" || s == "for" ||
         s == "if" || s == "True" || s == "False" || s == "None";
}

namespace detail {

inline int value_depth(const FactValue& v) {
  if (v.is_array()) {
    int d = 0;
    for (const auto& e : v) d = std::max(d, value_depth(e));
    return d + 1;
  }
  if (v.is_object()) {
    int d = 0;
    for (const auto& [k, e] : v.items()) {
      (void)k;
      d = std::max(d, value_depth(e));
    }
    return d + 1;
  }
  return 0;
}

// Large unsigned integers are folded into int64 where they fit; anything
// wider is outside the supported value space.
inline void normalize_numbers(FactValue& v) {
  if (v.is_number_unsigned()) {
    auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(INT64_MAX))
      throw FactMapError("integer value out of supported range: " + v.dump());
    v = static_cast<std::int64_t>(u);
  } else if (v.is_array()) {
    for (auto& e : v) normalize_numbers(e);
  } else if (v.is_object()) {
    for (auto& [k, e] : v.items()) {
      (void)k;
      normalize_numbers(e);
    }
  } else if (v.is_binary() || v.is_discarded()) {
    throw FactMapError("value is not JSON-representable");
  }
}

}  // namespace detail

// Typed key -> value mapping of visually grounded facts. Keys are unique,
// identifier-shaped, and form the variable namespace available to
// predicates. Round-trips losslessly through a plain JSON object.
class FactMap {
 public:
  FactMap() : object_(FactValue::object()) {}

  static FactMap from_json(FactValue j) {
    if (!j.is_object()) throw FactMapError("fact map must be a JSON object");
    detail::normalize_numbers(j);
    for (const auto& [key, value] : j.items()) {
      if (!is_identifier(key))
        throw FactMapError("fact key is not identifier-shaped: \"" + key + "\"");
      if (is_reserved_word(key))
        throw FactMapError("fact key is a reserved word: \"" + key + "\"");
      if (detail::value_depth(value) > kMaxFactNestingDepth)
        throw FactMapError("fact value exceeds nesting depth " +
                           std::to_string(kMaxFactNestingDepth) + ": \"" + key + "\"");
    }
    FactMap m;
    m.object_ = std::move(j);
    return m;
  }

  static FactMap parse(std::string_view text) {
    FactValue j = FactValue::parse(text, nullptr, false);
    if (j.is_discarded()) throw FactMapError("fact map is not valid JSON");
    return from_json(std::move(j));
  }

  bool contains(const std::string& key) const { return object_.contains(key); }
  const FactValue& at(const std::string& key) const { return object_.at(key); }
  std::size_t size() const { return object_.size(); }
  bool empty() const { return object_.empty(); }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    out.reserve(object_.size());
    for (const auto& [k, v] : object_.items()) {
      (void)v;
      out.push_back(k);
    }
    return out;
  }

  const FactValue& as_json() const { return object_; }
  std::string dump() const { return object_.dump(); }

  friend bool operator==(const FactMap& a, const FactMap& b) { return a.object_ == b.object_; }

 private:
  FactValue object_;
};

}  // namespace condchain
