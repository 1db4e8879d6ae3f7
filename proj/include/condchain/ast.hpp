#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lexer.hpp"

namespace condchain::vpir {

// The only callable names inside a predicate. Fixed at build time.
inline constexpr std::array<std::string_view, 10> kBuiltinWhitelist = {
    "len", "set", "any", "all", "min", "max", "sum", "abs", "round", "sorted"};

inline bool is_builtin(std::string_view name) {
  for (auto b : kBuiltinWhitelist)
    if (b == name) return true;
  return false;
}

// Builtins whose single argument may be a generator comprehension.
inline bool builtin_accepts_comprehension(std::string_view name) {
  return name == "any" || name == "all" || name == "sum" || name == "min" ||
         name == "max" || name == "len";
}

enum class NodeKind {
  BoolOp,        // and / or, 2+ operands (same-operator chains are flattened)
  Not,
  Compare,       // chained: ops.size() + 1 operands
  Arith,         // binary + - * / // %
  Neg,           // unary minus
  Literal,       // int | float | string | bool | none | list of literals
  Identifier,
  Subscript,     // children: [base, index]
  Call,          // name + argument children
  Comprehension  // children: [body, iterable, filter?]; only as sole call arg
};

enum class BoolKind { And, Or };
enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge, In };
enum class ArithOp { Add, Sub, Mul, Div, FloorDiv, Mod };

inline std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::In: return "in";
  }
  return "?";
}

inline std::string_view to_string(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
    case ArithOp::FloorDiv: return "//";
    case ArithOp::Mod: return "%";
  }
  return "?";
}

struct AstNode {
  NodeKind kind = NodeKind::Literal;
  Span span;

  BoolKind bool_op = BoolKind::And;    // BoolOp
  std::vector<CmpOp> cmp_ops;          // Compare
  ArithOp arith_op = ArithOp::Add;     // Arith
  nlohmann::ordered_json literal;      // Literal payload
  std::string name;                    // Identifier / Call builtin / loop variable
  bool comp_has_filter = false;        // Comprehension
  std::vector<AstNode> children;
};

// Structural equality ignores spans: a reparse of the canonical unparse must
// compare equal to the original tree.
inline bool structurally_equal(const AstNode& a, const AstNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::BoolOp:
      if (a.bool_op != b.bool_op) return false;
      break;
    case NodeKind::Compare:
      if (a.cmp_ops != b.cmp_ops) return false;
      break;
    case NodeKind::Arith:
      if (a.arith_op != b.arith_op) return false;
      break;
    case NodeKind::Literal:
      if (a.literal != b.literal) return false;
      // 1 and 1.0 are distinct literals even though JSON equality unifies them.
      if (a.literal.type() != b.literal.type()) return false;
      break;
    case NodeKind::Identifier:
    case NodeKind::Call:
      if (a.name != b.name) return false;
      break;
    case NodeKind::Comprehension:
      if (a.name != b.name || a.comp_has_filter != b.comp_has_filter) return false;
      break;
    default:
      break;
  }
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(a.children[i], b.children[i])) return false;
  return true;
}

// Walks every node; returns the callable names encountered.
inline void collect_call_names(const AstNode& node, std::vector<std::string>& out) {
  if (node.kind == NodeKind::Call) out.push_back(node.name);
  for (const auto& c : node.children) collect_call_names(c, out);
}

}  // namespace condchain::vpir
