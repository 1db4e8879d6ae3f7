#pragma once

#include <functional>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "domain.hpp"
#include "value.hpp"

namespace condchain {

class AdapterError : public std::runtime_error {
 public:
  explicit AdapterError(const std::string& msg) : std::runtime_error(msg) {}
};

class EmptyAfterRepair : public AdapterError {
 public:
  EmptyAfterRepair() : AdapterError("no chart entries remain after repair") {}
};

enum class ChartKind { Bar, Line, Pie };

inline std::string_view to_string(ChartKind k) {
  switch (k) {
    case ChartKind::Bar: return "bar";
    case ChartKind::Line: return "line";
    case ChartKind::Pie: return "pie";
  }
  return "?";
}

inline ChartKind chart_kind_from_string(std::string_view s) {
  if (s == "bar") return ChartKind::Bar;
  if (s == "line") return ChartKind::Line;
  if (s == "pie") return ChartKind::Pie;
  throw AdapterError("unknown chart kind: " + std::string(s));
}

struct RepairEntry {
  std::string action;
  std::string detail;
};

struct ChartMeta {
  std::vector<std::string> x_labels;
  std::vector<double> y_values;
  ChartKind chart_kind = ChartKind::Bar;
  std::vector<RepairEntry> repair_log;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["x_labels"] = x_labels;
    j["y_values"] = y_values;
    j["chart_kind"] = std::string(to_string(chart_kind));
    j["repair_log"] = nlohmann::ordered_json::array();
    for (const auto& r : repair_log)
      j["repair_log"].push_back({{"action", r.action}, {"detail", r.detail}});
    return j;
  }
};

// Optional hook for value repair of flagged placeholders: given the x label,
// returns the recovered value or nullopt to drop the entry.
using ChartRepairHook = std::function<std::optional<double>(const std::string& x_label)>;

// Aligns x/y columns and handles zero-placeholder artifacts. Length
// mismatches truncate both columns to the shorter length; entries whose
// value is exactly 0 at a marker-flagged position are repaired through the
// hook or dropped. Every mutation lands in the repair log.
inline ChartMeta normalize_chart(const std::vector<std::string>& x_labels,
                                 const std::vector<double>& y_values, ChartKind kind,
                                 const std::vector<bool>& placeholder_markers = {},
                                 const ChartRepairHook& repair = nullptr) {
  if (x_labels.empty() || y_values.empty())
    throw AdapterError("chart columns must be non-empty");

  ChartMeta meta;
  meta.chart_kind = kind;

  std::size_t n = std::min(x_labels.size(), y_values.size());
  if (x_labels.size() != y_values.size())
    meta.repair_log.push_back({"truncate", "x length " + std::to_string(x_labels.size()) +
                                               ", y length " + std::to_string(y_values.size()) +
                                               "; kept " + std::to_string(n)});

  for (std::size_t i = 0; i < n; ++i) {
    bool flagged = i < placeholder_markers.size() && placeholder_markers[i] && y_values[i] == 0.0;
    if (!flagged) {
      meta.x_labels.push_back(x_labels[i]);
      meta.y_values.push_back(y_values[i]);
      continue;
    }
    if (repair) {
      std::optional<double> fixed = repair(x_labels[i]);
      if (fixed) {
        meta.x_labels.push_back(x_labels[i]);
        meta.y_values.push_back(*fixed);
        meta.repair_log.push_back({"repair-placeholder",
                                   "index " + std::to_string(i) + " (" + x_labels[i] + ")"});
        continue;
      }
    }
    meta.repair_log.push_back({"drop-placeholder",
                               "index " + std::to_string(i) + " (" + x_labels[i] + ")"});
  }
  if (meta.x_labels.empty()) throw EmptyAfterRepair();
  return meta;
}

enum class ActionType { Click, Scroll, TypeText, Press, Navigate, Other };

inline std::string_view to_string(ActionType t) {
  switch (t) {
    case ActionType::Click: return "click";
    case ActionType::Scroll: return "scroll";
    case ActionType::TypeText: return "type_text";
    case ActionType::Press: return "press";
    case ActionType::Navigate: return "navigate";
    case ActionType::Other: return "other";
  }
  return "?";
}

struct StructuredAction {
  ActionType action_type = ActionType::Other;
  std::optional<std::string> target_element;
  std::optional<std::string> location;
  std::string raw;  // preserved verbatim

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["action_type"] = std::string(to_string(action_type));
    j["target_element"] = target_element ? nlohmann::ordered_json(*target_element)
                                         : nlohmann::ordered_json(nullptr);
    j["location"] = location ? nlohmann::ordered_json(*location) : nlohmann::ordered_json(nullptr);
    j["raw"] = raw;
    return j;
  }
};

// One row of the CoAT parsing table: the first matching pattern assigns the
// action type and pulls target/location from its capture groups (0 = none).
struct CoatPattern {
  ActionType action_type = ActionType::Other;
  std::string regex_text;
  int target_group = 0;
  int location_group = 0;
};

inline const std::vector<CoatPattern>& default_coat_patterns() {
  static const std::vector<CoatPattern> table = {
      {ActionType::Click, R"(^\s*(?:click|tap)(?:\s+on)?(?:\s+the)?\s+(.+?)\s*\.?\s*$)", 1, 0},
      {ActionType::Scroll,
       R"(^\s*scroll(?:\s+(?:up|down|left|right))?(?:\s+on(?:\s+the)?\s+(.+?))?\s*\.?\s*$)", 0, 1},
      {ActionType::TypeText,
       R"re(^\s*(?:type|enter|input)\s+"?([^"]+?)"?(?:\s+in(?:to)?(?:\s+the)?\s+(.+?))?\s*\.?\s*$)re",
       1, 2},
      {ActionType::Press, R"(^\s*press(?:\s+the)?\s+(.+?)(?:\s+(?:key|button))?\s*\.?\s*$)", 1, 0},
      {ActionType::Navigate, R"(^\s*(?:navigate|go)(?:\s+back)?(?:\s+to)?(?:\s+the)?\s+(.+?)\s*\.?\s*$)",
       1, 0},
  };
  return table;
}

// Parses one CoAT action description. Total: anything unmatched comes back
// as action_type=other with the raw string preserved.
inline StructuredAction parse_coat(const std::string& raw,
                                   const std::vector<CoatPattern>& table = default_coat_patterns()) {
  StructuredAction out;
  out.raw = raw;
  for (const auto& row : table) {
    std::regex re(row.regex_text, std::regex::ECMAScript | std::regex::icase);
    std::smatch m;
    if (!std::regex_match(raw, m, re)) continue;
    out.action_type = row.action_type;
    if (row.target_group > 0 && row.target_group < static_cast<int>(m.size()) &&
        m[row.target_group].matched)
      out.target_element = m[row.target_group].str();
    if (row.location_group > 0 && row.location_group < static_cast<int>(m.size()) &&
        m[row.location_group].matched)
      out.location = m[row.location_group].str();
    return out;
  }
  return out;
}

struct GuiTrajectory {
  std::vector<std::string> screenshot_refs;
  std::vector<std::string> annotations;
  std::vector<StructuredAction> parsed_actions;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["screenshots"] = screenshot_refs;
    j["annotations"] = annotations;
    j["parsed_actions"] = nlohmann::ordered_json::array();
    for (const auto& a : parsed_actions) j["parsed_actions"].push_back(a.to_json());
    return j;
  }
};

struct TrajectoryRejection {
  std::string code;  // "LengthMismatch" | "EmptyTrajectory"
  std::string detail;
};

struct TrajectoryResult {
  std::optional<GuiTrajectory> trajectory;
  std::optional<TrajectoryRejection> rejection;
  bool accepted() const { return trajectory.has_value(); }
};

// Completeness gate: a trajectory is kept only when every screenshot has an
// annotation and vice versa; otherwise it is rejected whole.
inline TrajectoryResult validate_trajectory(
    const std::vector<std::string>& screenshot_refs, const std::vector<std::string>& annotations,
    const std::vector<CoatPattern>& table = default_coat_patterns()) {
  TrajectoryResult out;
  if (screenshot_refs.empty() && annotations.empty()) {
    out.rejection = {"EmptyTrajectory", "no frames"};
    return out;
  }
  if (screenshot_refs.size() != annotations.size()) {
    out.rejection = {"LengthMismatch",
                     std::to_string(screenshot_refs.size()) + " screenshots vs " +
                         std::to_string(annotations.size()) + " annotations"};
    return out;
  }
  GuiTrajectory t;
  t.screenshot_refs = screenshot_refs;
  t.annotations = annotations;
  for (const auto& a : annotations) t.parsed_actions.push_back(parse_coat(a, table));
  out.trajectory = std::move(t);
  return out;
}

class ValidationError : public AdapterError {
 public:
  explicit ValidationError(const std::string& msg) : AdapterError(msg) {}
};

// Natural images need no preprocessing; this wraps the reference into an
// engine input descriptor.
inline InputRef normalize_natural(const std::string& image_ref) {
  if (image_ref.empty()) throw ValidationError("image reference is empty");
  InputRef r;
  r.domain = Domain::Natural;
  r.id = image_ref;
  return r;
}

inline InputRef chart_input(const std::string& id, const ChartMeta& meta) {
  InputRef r;
  r.domain = Domain::Chart;
  r.id = id;
  r.payload = meta.to_json();
  return r;
}

inline InputRef gui_input(const std::string& id, const GuiTrajectory& trajectory) {
  InputRef r;
  r.domain = Domain::Gui;
  r.id = id;
  r.payload = trajectory.to_json();
  return r;
}

}  // namespace condchain
