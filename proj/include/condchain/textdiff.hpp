#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace condchain {

// Alignment-based difference over token sequences: the minimal number of
// token substitutions, insertions, and deletions turning one stream into
// the other, each counting 1. Matched tokens cost nothing, so the count is
// 0 exactly when the streams are equal, and it is symmetric.
inline std::size_t aligned_diff_count(const std::vector<std::string>& a,
                                      const std::vector<std::string>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

inline std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Lowercased words with leading/trailing punctuation stripped, for
// wording-level comparisons.
inline std::vector<std::string> normalized_words(const std::string& text) {
  std::vector<std::string> out;
  for (auto& w : split_words(text)) {
    std::size_t b = 0, e = w.size();
    auto is_punct = [](char c) {
      return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '"' ||
             c == '\'' || c == '(' || c == ')';
    };
    while (b < e && is_punct(w[b])) ++b;
    while (e > b && is_punct(w[e - 1])) --e;
    std::string t = w.substr(b, e - b);
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace condchain
