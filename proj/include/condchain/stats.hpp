#pragma once

#include <map>
#include <string>
#include <vector>

#include "analyze.hpp"
#include "chain.hpp"
#include "eval.hpp"

namespace condchain {

struct AttributeTables {
  // key -> number of layers carrying it
  std::map<std::string, long long> extracted;
  // key -> number of layers whose predicate pair reads it
  std::map<std::string, long long> vpir_variables;

  friend bool operator==(const AttributeTables& a, const AttributeTables& b) {
    return a.extracted == b.extracted && a.vpir_variables == b.vpir_variables;
  }
};

// Per-layer attribute occurrence counts, split by domain. A key counts once
// per layer for the extracted table and once per layer where either the true
// logic or the counterfactual reads it.
inline std::map<std::string, AttributeTables> attribute_frequencies(
    const std::vector<ChainSkeleton>& chains) {
  std::map<std::string, AttributeTables> out;
  for (const auto& chain : chains) {
    AttributeTables& tables = out[std::string(to_string(chain.input_ref.domain))];
    for (const auto& layer : chain.layers) {
      for (const auto& key : layer.facts.keys()) ++tables.extracted[key];
      std::set<std::string> used = vpir::free_variables(layer.pair.p_ast);
      for (const auto& name : vpir::free_variables(layer.pair.p_tilde_ast)) used.insert(name);
      for (const auto& name : used)
        if (layer.facts.contains(name)) ++tables.vpir_variables[name];
    }
  }
  return out;
}

// Frequency rows sorted by count (descending) with alphabetical tie-breaks.
inline std::vector<std::pair<std::string, long long>> top_k(
    const std::map<std::string, long long>& table, std::size_t k) {
  std::vector<std::pair<std::string, long long>> rows(table.begin(), table.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (rows.size() > k) rows.resize(k);
  return rows;
}

struct TemplateDistribution {
  std::map<vpir::TemplateKey, long long> counts;  // over p and p_tilde alike
  long long total_expressions = 0;
};

inline TemplateDistribution template_distribution(const std::vector<ChainSkeleton>& chains) {
  TemplateDistribution dist;
  for (const auto& chain : chains)
    for (const auto& layer : chain.layers) {
      ++dist.counts[vpir::normalize_template(layer.pair.p_ast)];
      ++dist.counts[vpir::normalize_template(layer.pair.p_tilde_ast)];
      dist.total_expressions += 2;
    }
  return dist;
}

inline nlohmann::ordered_json attribute_export(const std::vector<ChainSkeleton>& chains,
                                               std::size_t k = 20) {
  nlohmann::ordered_json j;
  j["convention"] = "counts are per layer occurrence; vpir_variables counts p and p_tilde reads";
  nlohmann::ordered_json domains;
  for (const auto& [domain, tables] : attribute_frequencies(chains)) {
    nlohmann::ordered_json dj;
    auto rows = [&](const std::map<std::string, long long>& table) {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const auto& [key, count] : top_k(table, k))
        arr.push_back({{"key", key}, {"count", count}});
      return arr;
    };
    dj["extracted_facts_top"] = rows(tables.extracted);
    dj["vpir_variables_top"] = rows(tables.vpir_variables);
    domains[domain] = dj;
  }
  j["domains"] = domains;
  return j;
}

inline nlohmann::ordered_json template_export(const std::vector<ChainSkeleton>& chains) {
  TemplateDistribution dist = template_distribution(chains);
  nlohmann::ordered_json j;
  j["counts_include_counterfactuals"] = true;
  j["total_expressions"] = dist.total_expressions;
  if (dist.counts.empty()) {
    j["templates"] = nlohmann::ordered_json::array();
    return j;
  }
  vpir::CoverageCurve curve(dist.counts);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& p : curve.points())
    rows.push_back({{"rank", p.rank},
                    {"normalized_text", p.normalized_text},
                    {"count", p.count},
                    {"cumulative_fraction", p.cumulative_fraction}});
  j["templates"] = rows;
  j["top_20_coverage"] = curve.top_k_coverage(20);
  j["min_templates_for_80pct"] = curve.min_templates_for(0.80);
  return j;
}

}  // namespace condchain
