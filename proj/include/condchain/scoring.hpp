#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "composer.hpp"

namespace condchain {

class ScoringError : public std::runtime_error {
 public:
  explicit ScoringError(const std::string& msg) : std::runtime_error(msg) {}
};

class UnknownInstance : public ScoringError {
 public:
  explicit UnknownInstance(const std::string& id) : ScoringError("unknown instance: " + id) {}
};

class DuplicateOutput : public ScoringError {
 public:
  explicit DuplicateOutput(const std::string& id)
      : ScoringError("more than one output for instance: " + id) {}
};

class EmptyRecords : public ScoringError {
 public:
  EmptyRecords() : ScoringError("no score records to aggregate") {}
};

struct ModelOutput {
  std::string instance_id;
  std::string raw_text;
  std::string model_name;
  std::optional<double> latency_seconds;

  static ModelOutput from_json(const nlohmann::ordered_json& j) {
    ModelOutput o;
    o.instance_id = j.at("instance_id").get<std::string>();
    o.raw_text = j.at("raw_text").get<std::string>();
    o.model_name = j.value("model_name", "");
    if (j.contains("latency") && !j.at("latency").is_null())
      o.latency_seconds = j.at("latency").get<double>();
    return o;
  }
};

enum class ExtractionMethod { Boxed, Fallback, None };

inline std::string_view to_string(ExtractionMethod m) {
  switch (m) {
    case ExtractionMethod::Boxed: return "boxed";
    case ExtractionMethod::Fallback: return "fallback";
    case ExtractionMethod::None: return "none";
  }
  return "?";
}

struct ExtractResult {
  std::optional<char> label;
  ExtractionMethod method = ExtractionMethod::None;
};

namespace detail {

// Strips whitespace, surrounding parentheses, and trailing punctuation, then
// accepts a single letter (case-folded) from the valid set.
inline std::optional<char> parse_label_token(std::string s, const std::set<char>& valid) {
  auto strip = [&](auto pred) {
    while (!s.empty() && pred(s.front())) s.erase(s.begin());
    while (!s.empty() && pred(s.back())) s.pop_back();
  };
  strip([](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; });
  while (!s.empty() && s.front() == '(') s.erase(s.begin());
  while (!s.empty() && (s.back() == ')' || s.back() == '.' || s.back() == ',' ||
                        s.back() == ';' || s.back() == ':' || s.back() == '!' || s.back() == '?' ||
                        s.back() == '*'))
    s.pop_back();
  strip([](char c) { return c == ' ' || c == '\t'; });
  if (s.size() != 1) return std::nullopt;
  char up = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  if (!valid.count(up)) return std::nullopt;
  return up;
}

inline std::vector<std::string> split_lines(const std::string& text) {
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
  out.push_back(cur);
  return out;
}

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Last "answer is X" / "answer: X" phrase in the line, if any.
inline std::optional<char> phrase_label(const std::string& line, const std::set<char>& valid) {
  std::string low = lowercase(line);
  std::optional<char> found;
  std::size_t pos = 0;
  while ((pos = low.find("answer", pos)) != std::string::npos) {
    std::size_t after = pos + 6;
    while (after < low.size() && low[after] == ' ') ++after;
    if (after + 1 < low.size() && low.compare(after, 2, "is") == 0) after += 2;
    else if (after < low.size() && low[after] == ':') after += 1;
    else {
      pos += 6;
      continue;
    }
    // take through the end of a short trailing token
    std::size_t end = after;
    while (end < line.size() && line[end] == ' ') ++end;
    std::size_t stop = end;
    while (stop < line.size() && line[stop] != ' ' && stop - end < 4) ++stop;
    if (auto label = parse_label_token(line.substr(end, stop - end), valid)) found = label;
    pos += 6;
  }
  return found;
}

}  // namespace detail

// Deterministic answer extraction: the LAST \boxed{...} span wins when its
// content is a valid option letter; otherwise the lines are scanned from the
// end for a standalone letter or an "answer is"/"answer:" phrase.
inline ExtractResult extract_answer(const std::string& raw_text, const std::set<char>& valid_labels) {
  static const std::string kBoxed = "\\boxed{";
  std::optional<std::string> last_boxed;
  std::size_t pos = 0;
  while ((pos = raw_text.find(kBoxed, pos)) != std::string::npos) {
    std::size_t start = pos + kBoxed.size();
    std::size_t close = raw_text.find('}', start);
    if (close == std::string::npos) break;
    last_boxed = raw_text.substr(start, close - start);
    pos = close + 1;
  }
  if (last_boxed) {
    if (auto label = detail::parse_label_token(*last_boxed, valid_labels))
      return {label, ExtractionMethod::Boxed};
  }

  std::vector<std::string> lines = detail::split_lines(raw_text);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (auto label = detail::parse_label_token(*it, valid_labels))
      return {label, ExtractionMethod::Fallback};
    if (auto label = detail::phrase_label(*it, valid_labels))
      return {label, ExtractionMethod::Fallback};
  }
  return {std::nullopt, ExtractionMethod::None};
}

struct ScoreRecord {
  std::string instance_id;
  std::optional<char> extracted_label;
  bool correct = false;
  ExtractionMethod method = ExtractionMethod::None;
};

using InstanceIndex = std::map<std::string, BenchmarkInstance>;

inline InstanceIndex index_instances(const std::vector<BenchmarkInstance>& instances) {
  InstanceIndex index;
  for (const auto& inst : instances) index[inst.instance_id] = inst;
  return index;
}

// Scores each output against its instance's answer key. Unparseable outputs
// are marked incorrect, never skipped.
inline std::vector<ScoreRecord> score(const std::vector<ModelOutput>& outputs,
                                      const InstanceIndex& instances) {
  std::set<std::string> seen;
  std::vector<ScoreRecord> records;
  records.reserve(outputs.size());
  for (const auto& out : outputs) {
    auto it = instances.find(out.instance_id);
    if (it == instances.end()) throw UnknownInstance(out.instance_id);
    if (!seen.insert(out.instance_id).second) throw DuplicateOutput(out.instance_id);
    ExtractResult r = extract_answer(out.raw_text, it->second.question.valid_labels());
    ScoreRecord rec;
    rec.instance_id = out.instance_id;
    rec.extracted_label = r.label;
    rec.method = r.method;
    rec.correct = r.label && *r.label == it->second.question.answer_label;
    records.push_back(std::move(rec));
  }
  return records;
}

// Harmonic mean of the two path accuracies; zero when both sides are zero.
inline double path_f1(double true_acc, double false_acc) {
  double s = true_acc + false_acc;
  if (s == 0.0) return 0.0;
  return 2.0 * true_acc * false_acc / s;
}

// Presentation-only half-up rounding to 2 decimals.
inline double round2_half_up(double x) {
  return static_cast<double>(std::llround(x * 100.0)) / 100.0;
}

inline std::string format2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", round2_half_up(x));
  return buf;
}

struct MetricsCell {
  int true_total = 0;
  int true_correct = 0;
  int false_total = 0;
  int false_correct = 0;

  std::optional<double> true_acc() const {
    if (true_total == 0) return std::nullopt;
    return 100.0 * true_correct / true_total;
  }
  std::optional<double> false_acc() const {
    if (false_total == 0) return std::nullopt;
    return 100.0 * false_correct / false_total;
  }
  // defined only when both path sides are represented
  std::optional<double> f1() const {
    auto a = true_acc(), b = false_acc();
    if (!a || !b) return std::nullopt;
    return path_f1(*a, *b);
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    auto opt = [](std::optional<double> v) {
      return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    j["true_total"] = true_total;
    j["true_correct"] = true_correct;
    j["false_total"] = false_total;
    j["false_correct"] = false_correct;
    j["true_acc"] = opt(true_acc());
    j["false_acc"] = opt(false_acc());
    j["path_f1"] = opt(f1());
    return j;
  }
};

struct MetricsReport {
  std::map<std::string, MetricsCell> per_domain;
  std::map<std::string, MetricsCell> per_depth;        // key: "D=<depth>"
  std::map<std::string, MetricsCell> per_profile;      // key: profile name
  std::optional<double> avg_f1;                        // mean of defined domain F1s

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    auto block = [](const std::map<std::string, MetricsCell>& cells) {
      nlohmann::ordered_json out;
      for (const auto& [key, cell] : cells) out[key] = cell.to_json();
      return out;
    };
    j["domains"] = block(per_domain);
    j["depth_slices"] = block(per_depth);
    j["profile_slices"] = block(per_profile);
    j["avg_f1"] = avg_f1 ? nlohmann::ordered_json(*avg_f1) : nlohmann::ordered_json(nullptr);
    return j;
  }

  std::string to_csv() const {
    std::string out = "slice,key,true_acc,false_acc,path_f1\n";
    auto fmt = [](std::optional<double> v) { return v ? format2(*v) : std::string(); };
    auto rows = [&](const char* slice, const std::map<std::string, MetricsCell>& cells) {
      for (const auto& [key, cell] : cells)
        out += std::string(slice) + "," + key + "," + fmt(cell.true_acc()) + "," +
               fmt(cell.false_acc()) + "," + fmt(cell.f1()) + "\n";
    };
    rows("domain", per_domain);
    rows("depth", per_depth);
    rows("profile", per_profile);
    if (avg_f1) out += "overall,avg_f1,,," + format2(*avg_f1) + "\n";
    return out;
  }

  std::string to_text() const {
    auto fmt = [](std::optional<double> v) { return v ? format2(*v) : std::string("-"); };
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s\n", "Domain", "True", "False", "F1");
    out += line;
    for (const auto& [key, cell] : per_domain) {
      std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s\n", key.c_str(),
                    fmt(cell.true_acc()).c_str(), fmt(cell.false_acc()).c_str(),
                    fmt(cell.f1()).c_str());
      out += line;
    }
    std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s\n", "Avg(F1)", "", "",
                  fmt(avg_f1).c_str());
    out += line;
    auto slice = [&](const char* title, const std::map<std::string, MetricsCell>& cells) {
      if (cells.empty()) return;
      out += "\n";
      std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s\n", title, "True", "False", "F1");
      out += line;
      for (const auto& [key, cell] : cells) {
        std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s\n", key.c_str(),
                      fmt(cell.true_acc()).c_str(), fmt(cell.false_acc()).c_str(),
                      fmt(cell.f1()).c_str());
        out += line;
      }
    };
    slice("Depth", per_depth);
    slice("Profile", per_profile);
    return out;
  }
};

// Aggregates score records into per-domain metrics plus depth and
// complexity-profile slices. Internal math stays in full precision; rounding
// happens only in the text/CSV presentations.
inline MetricsReport aggregate(const std::vector<ScoreRecord>& records,
                               const InstanceIndex& instances) {
  if (records.empty()) throw EmptyRecords();
  MetricsReport report;
  for (const auto& rec : records) {
    auto it = instances.find(rec.instance_id);
    if (it == instances.end()) throw UnknownInstance(rec.instance_id);
    const BenchmarkInstance& inst = it->second;
    auto bump = [&](MetricsCell& cell) {
      if (inst.path_kind == PathKind::TruePath) {
        ++cell.true_total;
        if (rec.correct) ++cell.true_correct;
      } else {
        ++cell.false_total;
        if (rec.correct) ++cell.false_correct;
      }
    };
    bump(report.per_domain[std::string(to_string(inst.domain))]);
    bump(report.per_depth["D=" + std::to_string(inst.depth)]);
    if (!inst.complexity_profile_name.empty())
      bump(report.per_profile[inst.complexity_profile_name]);
  }
  double sum = 0.0;
  int defined = 0;
  for (const auto& [key, cell] : report.per_domain) {
    (void)key;
    if (auto f1 = cell.f1()) {
      sum += *f1;
      ++defined;
    }
  }
  if (defined > 0) report.avg_f1 = sum / defined;
  return report;
}

struct ManifestCounts {
  int true_instances = 0;
  int false_instances = 0;
  int paired_samples = 0;  // chain_refs carrying exactly one of each
};

struct ManifestReport {
  std::map<std::string, ManifestCounts> per_domain;
  std::vector<std::string> unbalanced_chains;  // chain_refs without a 1:1 pairing
  std::vector<std::string> mismatches;         // deviations from the expected manifest
  bool passed = true;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json domains;
    for (const auto& [key, c] : per_domain)
      domains[key] = {{"true_instances", c.true_instances},
                      {"false_instances", c.false_instances},
                      {"paired_samples", c.paired_samples}};
    j["domains"] = domains;
    j["unbalanced_chains"] = unbalanced_chains;
    j["mismatches"] = mismatches;
    j["passed"] = passed;
    return j;
  }
};

// Counts instances per domain and checks the one-true/one-false pairing per
// chain; optionally compares per-domain sample counts against an expected
// manifest of {"<domain>": count} entries.
inline ManifestReport validate_manifest(
    const std::vector<BenchmarkInstance>& instances,
    const std::optional<std::map<std::string, int>>& expected = std::nullopt) {
  ManifestReport report;
  std::map<std::string, std::pair<int, int>> chain_sides;  // chain_ref -> (true, false)
  std::map<std::string, std::string> chain_domain;
  for (const auto& inst : instances) {
    std::string domain(to_string(inst.domain));
    auto& counts = report.per_domain[domain];
    if (inst.path_kind == PathKind::TruePath) {
      ++counts.true_instances;
      ++chain_sides[inst.chain_ref].first;
    } else {
      ++counts.false_instances;
      ++chain_sides[inst.chain_ref].second;
    }
    chain_domain[inst.chain_ref] = domain;
  }
  for (const auto& [chain, sides] : chain_sides) {
    if (sides.first == 1 && sides.second == 1) {
      ++report.per_domain[chain_domain[chain]].paired_samples;
    } else {
      report.unbalanced_chains.push_back(chain);
      report.passed = false;
    }
  }
  if (expected) {
    for (const auto& [domain, want] : *expected) {
      int have = report.per_domain.count(domain) ? report.per_domain[domain].paired_samples : 0;
      if (have != want) {
        report.mismatches.push_back(domain + ": expected " + std::to_string(want) +
                                    " paired samples, found " + std::to_string(have));
        report.passed = false;
      }
    }
    for (const auto& [domain, counts] : report.per_domain)
      if (!expected->count(domain) && counts.paired_samples > 0) {
        report.mismatches.push_back(domain + ": unexpected domain with " +
                                    std::to_string(counts.paired_samples) + " samples");
        report.passed = false;
      }
  }
  return report;
}

}  // namespace condchain
