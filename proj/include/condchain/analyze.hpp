#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ast.hpp"
#include "eval.hpp"
#include "lexer.hpp"
#include "textdiff.hpp"
#include "unparse.hpp"

namespace condchain::vpir {

struct ComplexityReport {
  int logical_op_count = 0;   // textual and/or operators plus 'not' nodes
  int fact_key_count = 0;     // distinct free variables
  int nested_group_count = 0; // boolean groups that are operands of a boolean operator
  int comparison_count = 0;   // comparison operators (a chain of k ops counts k)
  int builtin_call_count = 0;
};

namespace detail {
inline void complexity_walk(const AstNode& n, bool parent_is_bool, ComplexityReport& r) {
  bool is_bool_node = n.kind == NodeKind::BoolOp || n.kind == NodeKind::Not;
  switch (n.kind) {
    case NodeKind::BoolOp:
      r.logical_op_count += static_cast<int>(n.children.size()) - 1;
      if (parent_is_bool) ++r.nested_group_count;
      break;
    case NodeKind::Not:
      ++r.logical_op_count;
      break;
    case NodeKind::Compare:
      r.comparison_count += static_cast<int>(n.cmp_ops.size());
      break;
    case NodeKind::Call:
      ++r.builtin_call_count;
      break;
    default:
      break;
  }
  for (const auto& c : n.children) complexity_walk(c, is_bool_node, r);
}
}  // namespace detail

inline ComplexityReport complexity(const AstNode& ast) {
  ComplexityReport r;
  detail::complexity_walk(ast, false, r);
  r.fact_key_count = static_cast<int>(free_variables(ast).size());
  return r;
}

struct Bound {
  std::optional<int> min;
  std::optional<int> max;
};

struct ComplexityProfile {
  std::string name = "Custom";
  Bound logical_op_count;
  Bound fact_key_count;
  Bound nested_group_count;
  Bound comparison_count;
  Bound builtin_call_count;

  // at most 2 logical operators, at least 2 attribute keys, no nesting bound
  static ComplexityProfile simple() {
    ComplexityProfile p;
    p.name = "Simple";
    p.logical_op_count.max = 2;
    p.fact_key_count.min = 2;
    return p;
  }

  // at least 4 logical operators, 4 attribute keys, and 2 nested groups
  static ComplexityProfile complex() {
    ComplexityProfile p;
    p.name = "Complex";
    p.logical_op_count.min = 4;
    p.fact_key_count.min = 4;
    p.nested_group_count.min = 2;
    return p;
  }

  static ComplexityProfile by_name(const std::string& name) {
    if (name == "Simple" || name == "simple") return simple();
    if (name == "Complex" || name == "complex") return complex();
    throw std::invalid_argument("unknown complexity profile: " + name);
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    auto put = [&](const char* field, const Bound& b) {
      nlohmann::ordered_json bj;
      bj["min"] = b.min ? nlohmann::ordered_json(*b.min) : nlohmann::ordered_json(nullptr);
      bj["max"] = b.max ? nlohmann::ordered_json(*b.max) : nlohmann::ordered_json(nullptr);
      j[field] = bj;
    };
    put("logical_op_count", logical_op_count);
    put("fact_key_count", fact_key_count);
    put("nested_group_count", nested_group_count);
    put("comparison_count", comparison_count);
    put("builtin_call_count", builtin_call_count);
    return j;
  }

  static ComplexityProfile from_json(const nlohmann::ordered_json& j) {
    ComplexityProfile p;
    p.name = j.value("name", "Custom");
    auto get = [&](const char* field, Bound& b) {
      if (!j.contains(field)) return;
      const auto& bj = j.at(field);
      if (bj.contains("min") && !bj.at("min").is_null()) b.min = bj.at("min").get<int>();
      if (bj.contains("max") && !bj.at("max").is_null()) b.max = bj.at("max").get<int>();
      if (b.min && b.max && *b.min > *b.max)
        throw std::invalid_argument(std::string("profile bound min > max for ") + field);
    };
    get("logical_op_count", p.logical_op_count);
    get("fact_key_count", p.fact_key_count);
    get("nested_group_count", p.nested_group_count);
    get("comparison_count", p.comparison_count);
    get("builtin_call_count", p.builtin_call_count);
    return p;
  }
};

struct ProfileCheck {
  bool passed = true;
  std::vector<std::string> violations;
};

inline ProfileCheck check_profile(const ComplexityReport& report, const ComplexityProfile& profile) {
  ProfileCheck out;
  auto check = [&](const char* field, int value, const Bound& bound) {
    if (bound.min && value < *bound.min)
      out.violations.push_back(std::string(field) + " " + std::to_string(value) + " < min " +
                               std::to_string(*bound.min));
    if (bound.max && value > *bound.max)
      out.violations.push_back(std::string(field) + " " + std::to_string(value) + " > max " +
                               std::to_string(*bound.max));
  };
  check("logical_op_count", report.logical_op_count, profile.logical_op_count);
  check("fact_key_count", report.fact_key_count, profile.fact_key_count);
  check("nested_group_count", report.nested_group_count, profile.nested_group_count);
  check("comparison_count", report.comparison_count, profile.comparison_count);
  check("builtin_call_count", report.builtin_call_count, profile.builtin_call_count);
  out.passed = out.violations.empty();
  return out;
}

// Token texts of the canonical unparse, the streams the perturbation
// distance is measured over.
inline std::vector<std::string> canonical_tokens(const AstNode& ast) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(unparse(ast)))
    if (t.kind != TokenKind::End) out.push_back(t.text);
  return out;
}

// Number of differing tokens between the canonical forms of two predicates,
// LCS-aligned: substitutions, insertions, and deletions each count 1.
inline int perturbation_distance(const AstNode& p, const AstNode& p_tilde) {
  return static_cast<int>(aligned_diff_count(canonical_tokens(p), canonical_tokens(p_tilde)));
}

struct TemplateKey {
  std::string normalized_text;
  friend bool operator==(const TemplateKey& a, const TemplateKey& b) {
    return a.normalized_text == b.normalized_text;
  }
  friend bool operator<(const TemplateKey& a, const TemplateKey& b) {
    return a.normalized_text < b.normalized_text;
  }
};

// Replaces identifiers and literals with VAR/STR/NUM/BOOL/LIST/NONE
// placeholders while keeping operators, builtin names, and the canonical
// parenthesization.
inline TemplateKey normalize_template(const AstNode& ast) {
  return {detail::render(ast, detail::RenderMode::Template)};
}

class EmptyCorpus : public std::runtime_error {
 public:
  EmptyCorpus() : std::runtime_error("coverage requires a non-empty template corpus") {}
};

struct CoveragePoint {
  int rank = 0;  // 1-based
  std::string normalized_text;
  long long count = 0;
  double cumulative_fraction = 0.0;
};

class CoverageCurve {
 public:
  explicit CoverageCurve(const std::map<TemplateKey, long long>& counts) {
    if (counts.empty()) throw EmptyCorpus();
    std::vector<std::pair<std::string, long long>> rows;
    for (const auto& [key, count] : counts) {
      rows.emplace_back(key.normalized_text, count);
      total_ += count;
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    long long cum = 0;
    int rank = 1;
    for (auto& [text, count] : rows) {
      cum += count;
      points_.push_back({rank++, text, count,
                         static_cast<double>(cum) / static_cast<double>(total_)});
    }
  }

  const std::vector<CoveragePoint>& points() const { return points_; }
  long long total_expressions() const { return total_; }

  double top_k_coverage(std::size_t k) const {
    if (k == 0) return 0.0;
    if (k >= points_.size()) return 1.0;
    return points_[k - 1].cumulative_fraction;
  }

  // Smallest number of templates whose cumulative fraction reaches the
  // threshold; capped at the full corpus.
  int min_templates_for(double threshold) const {
    for (const auto& p : points_)
      if (p.cumulative_fraction >= threshold) return p.rank;
    return static_cast<int>(points_.size());
  }

 private:
  std::vector<CoveragePoint> points_;
  long long total_ = 0;
};

inline CoverageCurve coverage_curve(const std::map<TemplateKey, long long>& counts) {
  return CoverageCurve(counts);
}

}  // namespace condchain::vpir
