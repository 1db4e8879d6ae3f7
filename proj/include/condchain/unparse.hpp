#pragma once

#include <charconv>
#include <string>

#include "ast.hpp"

namespace condchain::vpir {

namespace detail {

enum class RenderMode { Canonical, Template };

// Precedence levels used for minimal parenthesization.
inline int precedence(const AstNode& n) {
  switch (n.kind) {
    case NodeKind::BoolOp: return n.bool_op == BoolKind::Or ? 1 : 2;
    case NodeKind::Not: return 3;
    case NodeKind::Compare: return 4;
    case NodeKind::Arith:
      return (n.arith_op == ArithOp::Add || n.arith_op == ArithOp::Sub) ? 5 : 6;
    case NodeKind::Neg: return 7;
    case NodeKind::Subscript: return 8;
    default: return 9;
  }
}

inline std::string render_float(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find('E') == std::string::npos)
    s += ".0";
  return s;
}

inline std::string render_string_literal(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

inline std::string render_json_literal(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "None";
  if (v.is_boolean()) return v.get<bool>() ? "True" : "False";
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return render_float(v.get<double>());
  if (v.is_string()) return render_string_literal(v.get<std::string>());
  if (v.is_array()) {
    std::string out = "[";
    bool first = true;
    for (const auto& e : v) {
      if (!first) out += ", ";
      first = false;
      out += render_json_literal(e);
    }
    out += "]";
    return out;
  }
  return v.dump();
}

inline std::string render_template_literal(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "NONE";
  if (v.is_boolean()) return "BOOL";
  if (v.is_number()) return "NUM";
  if (v.is_string()) return "STR";
  if (v.is_array()) return "LIST";
  return "NUM";
}

inline std::string render(const AstNode& n, RenderMode mode);

inline std::string render_child(const AstNode& child, bool need_parens, RenderMode mode) {
  std::string s = render(child, mode);
  return need_parens ? "(" + s + ")" : s;
}

inline std::string render(const AstNode& n, RenderMode mode) {
  switch (n.kind) {
    case NodeKind::BoolOp: {
      const char* joiner = n.bool_op == BoolKind::Or ? " or " : " and ";
      int prec = precedence(n);
      std::string out;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += joiner;
        out += render_child(n.children[i], precedence(n.children[i]) < prec, mode);
      }
      return out;
    }
    case NodeKind::Not:
      return "not " + render_child(n.children[0], precedence(n.children[0]) < 3, mode);
    case NodeKind::Compare: {
      std::string out = render_child(n.children[0], precedence(n.children[0]) <= 4, mode);
      for (std::size_t i = 0; i < n.cmp_ops.size(); ++i) {
        out += " ";
        out += to_string(n.cmp_ops[i]);
        out += " ";
        out += render_child(n.children[i + 1], precedence(n.children[i + 1]) <= 4, mode);
      }
      return out;
    }
    case NodeKind::Arith: {
      int prec = precedence(n);
      std::string out = render_child(n.children[0], precedence(n.children[0]) < prec, mode);
      out += " ";
      out += to_string(n.arith_op);
      out += " ";
      out += render_child(n.children[1], precedence(n.children[1]) <= prec, mode);
      return out;
    }
    case NodeKind::Neg:
      return "-" + render_child(n.children[0], precedence(n.children[0]) < 7, mode);
    case NodeKind::Literal:
      return mode == RenderMode::Template ? render_template_literal(n.literal)
                                          : render_json_literal(n.literal);
    case NodeKind::Identifier:
      return mode == RenderMode::Template ? "VAR" : n.name;
    case NodeKind::Subscript:
      return render_child(n.children[0], precedence(n.children[0]) < 8, mode) + "[" +
             render(n.children[1], mode) + "]";
    case NodeKind::Call: {
      std::string out = n.name + "(";
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += ", ";
        out += render(n.children[i], mode);
      }
      out += ")";
      return out;
    }
    case NodeKind::Comprehension: {
      std::string var = mode == RenderMode::Template ? "VAR" : n.name;
      std::string out = render(n.children[0], mode) + " for " + var + " in " +
                        render(n.children[1], mode);
      if (n.comp_has_filter) out += " if " + render(n.children[2], mode);
      return out;
    }
  }
  return {};
}

}  // namespace detail

// Canonical text: single spaces around binary operators, minimal
// parentheses. Reparsing the result yields a structurally equal tree.
inline std::string unparse(const AstNode& ast) {
  return detail::render(ast, detail::RenderMode::Canonical);
}

}  // namespace condchain::vpir
