#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace condchain {

struct McqOption {
  char label = 'A';
  std::string text;
};

// A multiple-choice question with a deterministic answer key. Options are
// labeled A, B, C, ... in order; between 2 and 6 of them.
struct MultipleChoiceQuestion {
  std::string prompt;
  std::vector<McqOption> options;
  char answer_label = 'A';

  std::vector<std::string> validation_errors() const {
    std::vector<std::string> errs;
    if (prompt.empty()) errs.push_back("prompt is empty");
    if (options.size() < 2 || options.size() > 6)
      errs.push_back("option count " + std::to_string(options.size()) + " outside [2, 6]");
    bool answer_found = false;
    for (std::size_t i = 0; i < options.size(); ++i) {
      char expect = static_cast<char>('A' + i);
      if (options[i].label != expect)
        errs.push_back(std::string("option label '") + options[i].label + "' at position " +
                       std::to_string(i) + " should be '" + expect + "'");
      if (options[i].text.empty()) errs.push_back("option text is empty");
      if (options[i].label == answer_label) answer_found = true;
      for (std::size_t j = i + 1; j < options.size(); ++j)
        if (options[i].text == options[j].text)
          errs.push_back("duplicate option text: \"" + options[i].text + "\"");
    }
    if (!answer_found) errs.push_back(std::string("answer label '") + answer_label +
                                      "' does not name an option");
    return errs;
  }

  bool valid() const { return validation_errors().empty(); }

  std::set<char> valid_labels() const {
    std::set<char> out;
    for (const auto& o : options) out.insert(o.label);
    return out;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["prompt"] = prompt;
    j["options"] = nlohmann::ordered_json::array();
    for (const auto& o : options)
      j["options"].push_back({{"label", std::string(1, o.label)}, {"text", o.text}});
    j["answer_label"] = std::string(1, answer_label);
    return j;
  }

  static MultipleChoiceQuestion from_json(const nlohmann::ordered_json& j) {
    MultipleChoiceQuestion q;
    q.prompt = j.at("prompt").get<std::string>();
    for (const auto& o : j.at("options")) {
      std::string label = o.at("label").get<std::string>();
      if (label.size() != 1) throw std::invalid_argument("option label must be one letter");
      q.options.push_back({label[0], o.at("text").get<std::string>()});
    }
    std::string ans = j.at("answer_label").get<std::string>();
    if (ans.size() != 1) throw std::invalid_argument("answer label must be one letter");
    q.answer_label = ans[0];
    return q;
  }

  friend bool operator==(const MultipleChoiceQuestion& a, const MultipleChoiceQuestion& b) {
    if (a.prompt != b.prompt || a.answer_label != b.answer_label ||
        a.options.size() != b.options.size())
      return false;
    for (std::size_t i = 0; i < a.options.size(); ++i)
      if (a.options[i].label != b.options[i].label || a.options[i].text != b.options[i].text)
        return false;
    return true;
  }
};

}  // namespace condchain
