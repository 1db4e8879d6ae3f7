#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ast.hpp"
#include "value.hpp"

namespace condchain::vpir {

struct EvalBudget {
  std::int64_t max_nodes_visited = 100000;
  std::int64_t max_collection_len = 10000;
};

enum class EvalErrorKind { UnboundIdentifier, Type, NonBooleanResult, BudgetExceeded };

class EvalError : public std::runtime_error {
 public:
  EvalError(EvalErrorKind kind, Span span, const std::string& detail)
      : std::runtime_error(label(kind) + ": " + detail), kind_(kind), span_(span) {}
  EvalErrorKind kind() const { return kind_; }
  Span span() const { return span_; }

 private:
  static std::string label(EvalErrorKind k) {
    switch (k) {
      case EvalErrorKind::UnboundIdentifier: return "unbound identifier";
      case EvalErrorKind::Type: return "type error";
      case EvalErrorKind::NonBooleanResult: return "non-boolean result";
      case EvalErrorKind::BudgetExceeded: return "budget exceeded";
    }
    return "eval error";
  }
  EvalErrorKind kind_;
  Span span_;
};

// Names referenced by the predicate that must be bound by the fact map.
// Comprehension loop variables are bound within their body/filter scope; the
// iterable itself is evaluated in the enclosing scope.
namespace detail {
inline void free_variables_impl(const AstNode& n, std::vector<std::string>& bound,
                                std::vector<std::string>& out_order,
                                std::set<std::string>& seen) {
  switch (n.kind) {
    case NodeKind::Identifier:
      if (std::find(bound.rbegin(), bound.rend(), n.name) == bound.rend() &&
          seen.insert(n.name).second)
        out_order.push_back(n.name);
      return;
    case NodeKind::Comprehension:
      free_variables_impl(n.children[1], bound, out_order, seen);  // iterable: outer scope
      bound.push_back(n.name);
      free_variables_impl(n.children[0], bound, out_order, seen);
      if (n.comp_has_filter) free_variables_impl(n.children[2], bound, out_order, seen);
      bound.pop_back();
      return;
    default:
      for (const auto& c : n.children) free_variables_impl(c, bound, out_order, seen);
  }
}
}  // namespace detail

inline std::set<std::string> free_variables(const AstNode& ast) {
  std::vector<std::string> bound, order;
  std::set<std::string> seen;
  detail::free_variables_impl(ast, bound, order, seen);
  return seen;
}

// Free variables in first-reference order; used for deterministic error
// reporting and statistics.
inline std::vector<std::string> free_variables_ordered(const AstNode& ast) {
  std::vector<std::string> bound, order;
  std::set<std::string> seen;
  detail::free_variables_impl(ast, bound, order, seen);
  return order;
}

namespace detail {

// Runtime value: a JSON value, optionally marked as the result of set().
// Set results keep first-occurrence order and compare order-insensitively.
struct Value {
  nlohmann::ordered_json data;
  bool is_set = false;
};

inline std::string type_name(const Value& v) {
  if (v.is_set) return "set";
  const auto& j = v.data;
  if (j.is_null()) return "null";
  if (j.is_boolean()) return "boolean";
  if (j.is_number_integer()) return "integer";
  if (j.is_number_float()) return "float";
  if (j.is_string()) return "string";
  if (j.is_array()) return "list";
  if (j.is_object()) return "map";
  return "unknown";
}

inline bool is_numeric(const Value& v) {
  return !v.is_set && (v.data.is_number_integer() || v.data.is_number_float());
}

inline bool json_equals(const nlohmann::ordered_json& a, const nlohmann::ordered_json& b) {
  return a == b;  // numeric int/float unification; mismatched types unequal
}

inline bool value_equals(const Value& a, const Value& b) {
  if (a.is_set != b.is_set) return false;
  if (!a.is_set) return json_equals(a.data, b.data);
  if (a.data.size() != b.data.size()) return false;
  for (const auto& x : a.data) {
    bool found = false;
    for (const auto& y : b.data)
      if (json_equals(x, y)) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

class Evaluator {
 public:
  Evaluator(const FactMap& facts, const EvalBudget& budget) : facts_(facts), budget_(budget) {}

  bool run(const AstNode& ast) {
    // Unbound names fail up front, before any short-circuiting can hide them.
    for (const auto& name : free_variables_ordered(ast))
      if (!facts_.contains(name))
        throw EvalError(EvalErrorKind::UnboundIdentifier, ast.span, name);
    Value v = eval(ast);
    if (v.is_set || !v.data.is_boolean())
      throw EvalError(EvalErrorKind::NonBooleanResult, ast.span,
                      "top-level predicate produced " + type_name(v));
    return v.data.get<bool>();
  }

 private:
  const FactMap& facts_;
  const EvalBudget& budget_;
  std::int64_t visited_ = 0;
  std::vector<std::pair<std::string, Value>> locals_;

  void tick(const AstNode& n) {
    if (++visited_ > budget_.max_nodes_visited)
      throw EvalError(EvalErrorKind::BudgetExceeded, n.span,
                      "node visit budget exhausted (" +
                          std::to_string(budget_.max_nodes_visited) + ")");
  }

  [[noreturn]] void type_error(const AstNode& n, const std::string& detail) const {
    throw EvalError(EvalErrorKind::Type, n.span, detail);
  }

  bool eval_bool(const AstNode& n, const char* context) {
    Value v = eval(n);
    if (v.is_set || !v.data.is_boolean())
      type_error(n, std::string(context) + " requires a boolean operand, got " + type_name(v));
    return v.data.get<bool>();
  }

  Value eval(const AstNode& n) {
    tick(n);
    switch (n.kind) {
      case NodeKind::Literal:
        return {n.literal, false};
      case NodeKind::Identifier: {
        for (auto it = locals_.rbegin(); it != locals_.rend(); ++it)
          if (it->first == n.name) return it->second;
        return {facts_.at(n.name), false};
      }
      case NodeKind::BoolOp: {
        bool want = n.bool_op == BoolKind::Or;
        // short-circuits on boolean operands only
        for (const auto& c : n.children)
          if (eval_bool(c, n.bool_op == BoolKind::Or ? "'or'" : "'and'") == want)
            return {want, false};
        return {!want, false};
      }
      case NodeKind::Not:
        return {!eval_bool(n.children[0], "'not'"), false};
      case NodeKind::Compare: {
        Value left = eval(n.children[0]);
        for (std::size_t i = 0; i < n.cmp_ops.size(); ++i) {
          Value right = eval(n.children[i + 1]);
          if (!compare(n.cmp_ops[i], left, right, n.children[i + 1])) return {false, false};
          left = std::move(right);
        }
        return {true, false};
      }
      case NodeKind::Arith:
        return arith(n);
      case NodeKind::Neg: {
        Value v = eval(n.children[0]);
        if (!is_numeric(v)) type_error(n, "unary minus requires a number, got " + type_name(v));
        if (v.data.is_number_integer()) {
          auto x = v.data.get<std::int64_t>();
          if (x == INT64_MIN) type_error(n, "integer overflow in negation");
          return {-x, false};
        }
        return {-v.data.get<double>(), false};
      }
      case NodeKind::Subscript:
        return subscript(n);
      case NodeKind::Call:
        return call(n);
      case NodeKind::Comprehension:
        type_error(n, "comprehension outside a builtin call");
    }
    type_error(n, "unsupported node");
  }

  bool compare(CmpOp op, const Value& a, const Value& b, const AstNode& at) {
    switch (op) {
      case CmpOp::Eq: return value_equals(a, b);
      case CmpOp::Ne: return !value_equals(a, b);
      case CmpOp::In: return membership(a, b, at);
      default: break;
    }
    if (is_numeric(a) && is_numeric(b)) {
      if (a.data.is_number_integer() && b.data.is_number_integer()) {
        auto x = a.data.get<std::int64_t>(), y = b.data.get<std::int64_t>();
        switch (op) {
          case CmpOp::Lt: return x < y;
          case CmpOp::Le: return x <= y;
          case CmpOp::Gt: return x > y;
          case CmpOp::Ge: return x >= y;
          default: break;
        }
      }
      double x = a.data.is_number_integer() ? static_cast<double>(a.data.get<std::int64_t>())
                                            : a.data.get<double>();
      double y = b.data.is_number_integer() ? static_cast<double>(b.data.get<std::int64_t>())
                                            : b.data.get<double>();
      switch (op) {
        case CmpOp::Lt: return x < y;
        case CmpOp::Le: return x <= y;
        case CmpOp::Gt: return x > y;
        case CmpOp::Ge: return x >= y;
        default: break;
      }
    }
    if (!a.is_set && !b.is_set && a.data.is_string() && b.data.is_string()) {
      const auto& x = a.data.get_ref<const std::string&>();
      const auto& y = b.data.get_ref<const std::string&>();
      switch (op) {
        case CmpOp::Lt: return x < y;
        case CmpOp::Le: return x <= y;
        case CmpOp::Gt: return x > y;
        case CmpOp::Ge: return x >= y;
        default: break;
      }
    }
    type_error(at, "ordering requires two numbers or two strings, got " + type_name(a) +
                       " and " + type_name(b));
  }

  bool membership(const Value& item, const Value& coll, const AstNode& at) {
    if (coll.is_set || coll.data.is_array()) {
      for (const auto& e : coll.data)
        if (value_equals(item, Value{e, false})) return true;
      return false;
    }
    if (coll.data.is_string()) {
      if (item.is_set || !item.data.is_string())
        type_error(at, "'in <string>' requires a string on the left, got " + type_name(item));
      return coll.data.get_ref<const std::string&>().find(
                 item.data.get_ref<const std::string&>()) != std::string::npos;
    }
    if (coll.data.is_object()) {
      if (item.is_set || !item.data.is_string())
        type_error(at, "'in <map>' requires a string key on the left, got " + type_name(item));
      return coll.data.contains(item.data.get_ref<const std::string&>());
    }
    type_error(at, "'in' requires a list, string, set, or map on the right, got " +
                       type_name(coll));
  }

  Value arith(const AstNode& n) {
    Value a = eval(n.children[0]);
    Value b = eval(n.children[1]);
    if (!is_numeric(a) || !is_numeric(b))
      type_error(n, std::string("'") + std::string(to_string(n.arith_op)) +
                        "' requires numbers, got " + type_name(a) + " and " + type_name(b));
    bool both_int = a.data.is_number_integer() && b.data.is_number_integer();
    if (n.arith_op == ArithOp::Div) {
      double x = to_double(a), y = to_double(b);
      if (y == 0.0) type_error(n, "division by zero");
      return {x / y, false};
    }
    if (n.arith_op == ArithOp::FloorDiv || n.arith_op == ArithOp::Mod) {
      if (!both_int)
        type_error(n, std::string("'") + std::string(to_string(n.arith_op)) +
                          "' requires integers");
      auto x = a.data.get<std::int64_t>(), y = b.data.get<std::int64_t>();
      if (y == 0) type_error(n, "integer division or modulo by zero");
      if (x == INT64_MIN && y == -1) type_error(n, "integer overflow");
      std::int64_t q = x / y;
      std::int64_t r = x % y;
      if (r != 0 && ((x < 0) != (y < 0))) {
        --q;       // floor division
        r += y;    // remainder carries the divisor's sign
      }
      return {n.arith_op == ArithOp::FloorDiv ? q : r, false};
    }
    if (both_int) {
      auto x = a.data.get<std::int64_t>(), y = b.data.get<std::int64_t>();
      std::int64_t out = 0;
      bool overflow = false;
      switch (n.arith_op) {
        case ArithOp::Add: overflow = __builtin_add_overflow(x, y, &out); break;
        case ArithOp::Sub: overflow = __builtin_sub_overflow(x, y, &out); break;
        case ArithOp::Mul: overflow = __builtin_mul_overflow(x, y, &out); break;
        default: break;
      }
      if (overflow) type_error(n, "integer overflow");
      return {out, false};
    }
    double x = to_double(a), y = to_double(b);
    switch (n.arith_op) {
      case ArithOp::Add: return {x + y, false};
      case ArithOp::Sub: return {x - y, false};
      case ArithOp::Mul: return {x * y, false};
      default: break;
    }
    type_error(n, "unsupported arithmetic operator");
  }

  static double to_double(const Value& v) {
    return v.data.is_number_integer() ? static_cast<double>(v.data.get<std::int64_t>())
                                      : v.data.get<double>();
  }

  Value subscript(const AstNode& n) {
    Value base = eval(n.children[0]);
    Value index = eval(n.children[1]);
    if (!base.is_set && base.data.is_array()) {
      if (index.is_set || !index.data.is_number_integer())
        type_error(n, "list index must be an integer, got " + type_name(index));
      auto i = index.data.get<std::int64_t>();
      auto size = static_cast<std::int64_t>(base.data.size());
      if (i < 0) i += size;
      if (i < 0 || i >= size) type_error(n, "list index out of range");
      return {base.data[static_cast<std::size_t>(i)], false};
    }
    if (!base.is_set && base.data.is_object()) {
      if (index.is_set || !index.data.is_string())
        type_error(n, "map key must be a string, got " + type_name(index));
      const auto& key = index.data.get_ref<const std::string&>();
      if (!base.data.contains(key)) type_error(n, "key not found: \"" + key + "\"");
      return {base.data.at(key), false};
    }
    type_error(n, "subscript requires a list or map, got " + type_name(base));
  }

  // Materializes the elements a builtin iterates over; enforces the
  // collection budget.
  std::vector<Value> elements_of(const Value& v, const AstNode& at) {
    std::vector<Value> out;
    if (v.is_set || v.data.is_array()) {
      check_len(v.data.size(), at);
      for (const auto& e : v.data) out.push_back({e, false});
      return out;
    }
    if (v.data.is_string()) {
      const auto& s = v.data.get_ref<const std::string&>();
      std::vector<std::string> chars = utf8_chars(s, at);
      for (auto& c : chars) out.push_back({std::move(c), false});
      return out;
    }
    if (v.data.is_object()) {
      check_len(v.data.size(), at);
      for (const auto& [k, e] : v.data.items()) {
        (void)e;
        out.push_back({k, false});
      }
      return out;
    }
    type_error(at, "expected an iterable collection, got " + type_name(v));
  }

  void check_len(std::size_t len, const AstNode& at) {
    if (static_cast<std::int64_t>(len) > budget_.max_collection_len)
      throw EvalError(EvalErrorKind::BudgetExceeded, at.span,
                      "collection longer than " + std::to_string(budget_.max_collection_len));
  }

  std::vector<std::string> utf8_chars(const std::string& s, const AstNode& at) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
      std::size_t len = 1;
      unsigned char c = static_cast<unsigned char>(s[i]);
      if ((c & 0x80) != 0) {
        while (i + len < s.size() &&
               (static_cast<unsigned char>(s[i + len]) & 0xC0) == 0x80)
          ++len;
      }
      out.push_back(s.substr(i, len));
      i += len;
      check_len(out.size(), at);
    }
    return out;
  }

  std::size_t code_point_count(const std::string& s) {
    std::size_t count = 0;
    for (char ch : s)
      if ((static_cast<unsigned char>(ch) & 0xC0) != 0x80) ++count;
    return count;
  }

  // Yields each element produced by the comprehension (filter applied) to fn.
  template <typename Fn>
  void for_comprehension(const AstNode& comp, Fn&& fn) {
    Value iterable = eval(comp.children[1]);
    std::vector<Value> elems = elements_of(iterable, comp.children[1]);
    for (auto& e : elems) {
      locals_.emplace_back(comp.name, std::move(e));
      bool keep = true;
      if (comp.comp_has_filter) keep = eval_bool(comp.children[2], "comprehension filter");
      if (keep) fn(eval(comp.children[0]));
      locals_.pop_back();
    }
  }

  // Collects argument values for a collection-style builtin: either the
  // comprehension's produced elements or the elements of the sole argument.
  std::vector<Value> collection_arg(const AstNode& call) {
    const AstNode& arg = call.children[0];
    std::vector<Value> out;
    if (arg.kind == NodeKind::Comprehension) {
      for_comprehension(arg, [&](Value v) {
        out.push_back(std::move(v));
        check_len(out.size(), call);
      });
      return out;
    }
    return elements_of(eval(arg), arg);
  }

  Value call(const AstNode& n) {
    const std::string& f = n.name;
    if (f == "len") {
      const AstNode& arg = n.children[0];
      if (arg.kind == NodeKind::Comprehension) {
        std::int64_t count = 0;
        for_comprehension(arg, [&](Value) { ++count; });
        return {count, false};
      }
      Value v = eval(arg);
      if (v.is_set || v.data.is_array() || v.data.is_object())
        return {static_cast<std::int64_t>(v.data.size()), false};
      if (v.data.is_string())
        return {static_cast<std::int64_t>(code_point_count(v.data.get_ref<const std::string&>())),
                false};
      type_error(n, "len() requires a collection or string, got " + type_name(v));
    }
    if (f == "set") {
      std::vector<Value> elems = elements_of(eval(n.children[0]), n.children[0]);
      nlohmann::ordered_json out = nlohmann::ordered_json::array();
      for (const auto& e : elems) {
        bool dup = false;
        for (const auto& seen : out)
          if (json_equals(seen, e.data)) {
            dup = true;
            break;
          }
        if (!dup) out.push_back(e.data);
      }
      return {std::move(out), true};
    }
    if (f == "any" || f == "all") {
      bool result = f == "all";
      for (const auto& v : collection_arg(n)) {
        if (v.is_set || !v.data.is_boolean())
          type_error(n, f + "() requires boolean elements, got " + type_name(v));
        bool b = v.data.get<bool>();
        if (f == "any") result = result || b;
        else result = result && b;
      }
      return {result, false};
    }
    if (f == "min" || f == "max") {
      std::vector<Value> items;
      if (n.children.size() == 1) items = collection_arg(n);
      else
        for (const auto& c : n.children) items.push_back(eval(c));
      if (items.empty()) type_error(n, f + "() of an empty collection");
      return extreme(items, f == "min", n);
    }
    if (f == "sum") {
      std::vector<Value> items = collection_arg(n);
      bool any_float = false;
      std::int64_t isum = 0;
      double fsum = 0.0;
      for (const auto& v : items) {
        if (!is_numeric(v)) type_error(n, "sum() requires numeric elements, got " + type_name(v));
        if (v.data.is_number_float()) {
          any_float = true;
        }
      }
      if (any_float) {
        for (const auto& v : items) fsum += to_double(v);
        return {fsum, false};
      }
      for (const auto& v : items) {
        if (__builtin_add_overflow(isum, v.data.get<std::int64_t>(), &isum))
          type_error(n, "integer overflow in sum()");
      }
      return {isum, false};
    }
    if (f == "abs") {
      Value v = eval(n.children[0]);
      if (!is_numeric(v)) type_error(n, "abs() requires a number, got " + type_name(v));
      if (v.data.is_number_integer()) {
        auto x = v.data.get<std::int64_t>();
        if (x == INT64_MIN) type_error(n, "integer overflow in abs()");
        return {x < 0 ? -x : x, false};
      }
      return {std::fabs(v.data.get<double>()), false};
    }
    if (f == "round") {
      Value v = eval(n.children[0]);
      if (!is_numeric(v)) type_error(n, "round() requires a number, got " + type_name(v));
      if (n.children.size() == 2) {
        Value d = eval(n.children[1]);
        if (d.is_set || !d.data.is_number_integer())
          type_error(n, "round() digit count must be an integer");
        auto digits = d.data.get<std::int64_t>();
        if (digits < -18 || digits > 18) type_error(n, "round() digit count out of range");
        double scale = std::pow(10.0, static_cast<double>(digits));
        double scaled = to_double(v) * scale;
        if (!std::isfinite(scaled)) type_error(n, "round() overflow");
        return {half_even(scaled) / scale, false};
      }
      if (v.data.is_number_integer()) return v;
      double r = half_even(v.data.get<double>());
      if (r < static_cast<double>(INT64_MIN) || r > static_cast<double>(INT64_MAX))
        type_error(n, "round() result out of integer range");
      return {static_cast<std::int64_t>(r), false};
    }
    if (f == "sorted") {
      std::vector<Value> items = elements_of(eval(n.children[0]), n.children[0]);
      bool all_num = true, all_str = true;
      for (const auto& v : items) {
        all_num = all_num && is_numeric(v);
        all_str = all_str && !v.is_set && v.data.is_string();
      }
      if (!items.empty() && !all_num && !all_str)
        type_error(n, "sorted() requires all-numeric or all-string elements");
      std::stable_sort(items.begin(), items.end(), [&](const Value& a, const Value& b) {
        if (all_num) return to_double(a) < to_double(b);
        return a.data.get_ref<const std::string&>() < b.data.get_ref<const std::string&>();
      });
      nlohmann::ordered_json out = nlohmann::ordered_json::array();
      for (auto& v : items) out.push_back(std::move(v.data));
      return {std::move(out), false};
    }
    type_error(n, "unknown builtin: " + f);
  }

  // round-half-even, matching conventional numeric rounding
  static double half_even(double x) {
    double floor_v = std::floor(x);
    double diff = x - floor_v;
    if (diff > 0.5) return floor_v + 1.0;
    if (diff < 0.5) return floor_v;
    return std::fmod(floor_v, 2.0) == 0.0 ? floor_v : floor_v + 1.0;
  }

  Value extreme(const std::vector<Value>& items, bool take_min, const AstNode& at) {
    bool all_num = true, all_str = true;
    for (const auto& v : items) {
      all_num = all_num && is_numeric(v);
      all_str = all_str && !v.is_set && v.data.is_string();
    }
    if (!all_num && !all_str)
      type_error(at, "min()/max() requires all-numeric or all-string elements");
    auto less = [&](const Value& a, const Value& b) {
      if (all_num) return to_double(a) < to_double(b);
      return a.data.get_ref<const std::string&>() < b.data.get_ref<const std::string&>();
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < items.size(); ++i)
      if (take_min ? less(items[i], items[best]) : less(items[best], items[i])) best = i;
    return items[best];
  }
};

}  // namespace detail

// Evaluates a predicate against a fact environment. Strict semantics:
// and/or/not require boolean operands; ==/!= across mismatched types yield
// false/true; ordering requires two numbers or two strings; the top-level
// result must be boolean.
inline bool evaluate(const AstNode& ast, const FactMap& facts, const EvalBudget& budget = {}) {
  return detail::Evaluator(facts, budget).run(ast);
}

enum class PairRejection { None, TrueLogicFalse, CounterfactualTrue, EvaluationError };

struct PairVerdict {
  bool accepted = false;
  PairRejection rejection = PairRejection::None;
  std::string detail;

  std::string reason_code() const {
    switch (rejection) {
      case PairRejection::None: return "accepted";
      case PairRejection::TrueLogicFalse: return "true-logic-false";
      case PairRejection::CounterfactualTrue: return "counterfactual-true";
      case PairRejection::EvaluationError: return "evaluation-error";
    }
    return "unknown";
  }
};

// The acceptance gate: the true logic must evaluate to true and the
// counterfactual to false on the same facts. A pair that errors is never
// accepted.
inline PairVerdict verify_pair(const AstNode& p, const AstNode& p_tilde, const FactMap& facts,
                               const EvalBudget& budget = {}) {
  bool p_value = false, pt_value = false;
  try {
    p_value = evaluate(p, facts, budget);
  } catch (const EvalError& e) {
    return {false, PairRejection::EvaluationError, std::string("true logic: ") + e.what()};
  }
  try {
    pt_value = evaluate(p_tilde, facts, budget);
  } catch (const EvalError& e) {
    return {false, PairRejection::EvaluationError, std::string("counterfactual: ") + e.what()};
  }
  if (!p_value) return {false, PairRejection::TrueLogicFalse, "true logic evaluated to false"};
  if (pt_value)
    return {false, PairRejection::CounterfactualTrue, "counterfactual evaluated to true"};
  return {true, PairRejection::None, {}};
}

}  // namespace condchain::vpir
