#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ast.hpp"
#include "lexer.hpp"

namespace condchain::vpir {

/*
 * Grammar (precedence from weakest to tightest):
 *
 *   expr        := or_expr
 *   or_expr     := and_expr ( "or" and_expr )*
 *   and_expr    := not_expr ( "and" not_expr )*
 *   not_expr    := "not" not_expr | comparison
 *   comparison  := arith ( cmp_op arith )*          chained -> one Compare node
 *   cmp_op      := "==" | "!=" | "<" | "<=" | ">" | ">=" | "in"
 *   arith       := term ( ("+"|"-") term )*
 *   term        := unary ( ("*"|"/"|"//"|"%") unary )*
 *   unary       := "-" unary | postfix
 *   postfix     := atom ( "[" expr "]" )*
 *   atom        := INT | FLOAT | STRING | "True" | "False" | "None"
 *               | list_literal | call | IDENT | "(" expr ")"
 *   list_literal := "[" ( literal ( "," literal )* )? "]"
 *   call        := BUILTIN "(" ( comprehension | expr ( "," expr )* )? ")"
 *   comprehension := expr "for" IDENT "in" expr ( "if" expr )?
 *
 * Calls are restricted to the builtin whitelist; a comprehension may appear
 * only as the sole argument of any/all/sum/min/max/len. Same-operator
 * and/or chains are flattened into one BoolOp node.
 */

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, const std::string& message)
      : std::runtime_error("parse error at column " + std::to_string(position + 1) + ": " + message),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class WhitelistError : public ParseError {
 public:
  WhitelistError(std::size_t position, const std::string& callee)
      : ParseError(position, "call to non-whitelisted name: " + callee), name_(callee) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  AstNode parse_expression() {
    AstNode node = parse_or();
    if (!at_end()) throw ParseError(peek().span.begin, "unexpected token: '" + peek().text + "'");
    return node;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_++]; }
  bool at_end() const { return peek().kind == TokenKind::End; }

  bool match_keyword(std::string_view kw) {
    if (peek().kind == TokenKind::Keyword && peek().text == kw) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool match_op(std::string_view op) {
    if (peek().kind == TokenKind::Operator && peek().text == op) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool match_punct(char p) {
    if (peek().kind == TokenKind::Punct && peek().text[0] == p) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect_punct(char p, const char* what) {
    if (!match_punct(p))
      throw ParseError(peek().span.begin, std::string("expected '") + p + "' " + what);
  }

  AstNode parse_or() {
    AstNode first = parse_and();
    if (!(peek().kind == TokenKind::Keyword && peek().text == "or")) return first;
    AstNode node;
    node.kind = NodeKind::BoolOp;
    node.bool_op = BoolKind::Or;
    node.span.begin = first.span.begin;
    append_operand(node, std::move(first), BoolKind::Or);
    while (match_keyword("or")) append_operand(node, parse_and(), BoolKind::Or);
    node.span.end = node.children.back().span.end;
    return node;
  }

  AstNode parse_and() {
    AstNode first = parse_not();
    if (!(peek().kind == TokenKind::Keyword && peek().text == "and")) return first;
    AstNode node;
    node.kind = NodeKind::BoolOp;
    node.bool_op = BoolKind::And;
    node.span.begin = first.span.begin;
    append_operand(node, std::move(first), BoolKind::And);
    while (match_keyword("and")) append_operand(node, parse_not(), BoolKind::And);
    node.span.end = node.children.back().span.end;
    return node;
  }

  // and/or are associative; nested same-operator groups collapse into the
  // enclosing chain so equivalent sources share one canonical tree.
  static void append_operand(AstNode& chain, AstNode operand, BoolKind op) {
    if (operand.kind == NodeKind::BoolOp && operand.bool_op == op) {
      for (auto& c : operand.children) chain.children.push_back(std::move(c));
    } else {
      chain.children.push_back(std::move(operand));
    }
  }

  AstNode parse_not() {
    if (peek().kind == TokenKind::Keyword && peek().text == "not") {
      std::size_t start = peek().span.begin;
      ++pos_;
      AstNode node;
      node.kind = NodeKind::Not;
      node.children.push_back(parse_not());
      node.span = {start, node.children.back().span.end};
      return node;
    }
    return parse_comparison();
  }

  AstNode parse_comparison() {
    AstNode first = parse_arith();
    std::vector<CmpOp> ops;
    std::vector<AstNode> operands;
    operands.push_back(std::move(first));
    while (true) {
      CmpOp op;
      if (match_op("==")) op = CmpOp::Eq;
      else if (match_op("!=")) op = CmpOp::Ne;
      else if (match_op("<=")) op = CmpOp::Le;
      else if (match_op(">=")) op = CmpOp::Ge;
      else if (match_op("<")) op = CmpOp::Lt;
      else if (match_op(">")) op = CmpOp::Gt;
      else if (peek().kind == TokenKind::Keyword && peek().text == "in") {
        ++pos_;
        op = CmpOp::In;
      } else break;
      ops.push_back(op);
      operands.push_back(parse_arith());
    }
    if (ops.empty()) return std::move(operands.front());
    AstNode node;
    node.kind = NodeKind::Compare;
    node.cmp_ops = std::move(ops);
    node.span = {operands.front().span.begin, operands.back().span.end};
    node.children = std::move(operands);
    return node;
  }

  AstNode parse_arith() {
    AstNode lhs = parse_term();
    while (true) {
      ArithOp op;
      if (match_op("+")) op = ArithOp::Add;
      else if (match_op("-")) op = ArithOp::Sub;
      else break;
      AstNode rhs = parse_term();
      lhs = make_arith(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  AstNode parse_term() {
    AstNode lhs = parse_unary();
    while (true) {
      ArithOp op;
      if (match_op("*")) op = ArithOp::Mul;
      else if (match_op("//")) op = ArithOp::FloorDiv;
      else if (match_op("/")) op = ArithOp::Div;
      else if (match_op("%")) op = ArithOp::Mod;
      else break;
      AstNode rhs = parse_unary();
      lhs = make_arith(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  static AstNode make_arith(ArithOp op, AstNode lhs, AstNode rhs) {
    AstNode node;
    node.kind = NodeKind::Arith;
    node.arith_op = op;
    node.span = {lhs.span.begin, rhs.span.end};
    node.children.push_back(std::move(lhs));
    node.children.push_back(std::move(rhs));
    return node;
  }

  AstNode parse_unary() {
    if (peek().kind == TokenKind::Operator && peek().text == "-") {
      std::size_t start = peek().span.begin;
      ++pos_;
      AstNode node;
      node.kind = NodeKind::Neg;
      node.children.push_back(parse_unary());
      node.span = {start, node.children.back().span.end};
      return node;
    }
    return parse_postfix();
  }

  AstNode parse_postfix() {
    AstNode base = parse_atom();
    while (peek().kind == TokenKind::Punct && peek().text == "[") {
      ++pos_;
      AstNode index = parse_or();
      if (!match_punct(']')) throw ParseError(peek().span.begin, "expected ']' after subscript index");
      AstNode node;
      node.kind = NodeKind::Subscript;
      node.span = {base.span.begin, tokens_[pos_ - 1].span.end};
      node.children.push_back(std::move(base));
      node.children.push_back(std::move(index));
      base = std::move(node);
    }
    return base;
  }

  AstNode parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Int: {
        advance();
        AstNode node;
        node.kind = NodeKind::Literal;
        node.literal = t.int_value;
        node.span = t.span;
        return node;
      }
      case TokenKind::Float: {
        advance();
        AstNode node;
        node.kind = NodeKind::Literal;
        node.literal = t.float_value;
        node.span = t.span;
        return node;
      }
      case TokenKind::String: {
        advance();
        AstNode node;
        node.kind = NodeKind::Literal;
        node.literal = t.string_value;
        node.span = t.span;
        return node;
      }
      case TokenKind::Keyword: {
        if (t.text == "True" || t.text == "False" || t.text == "None") {
          advance();
          AstNode node;
          node.kind = NodeKind::Literal;
          if (t.text == "True") node.literal = true;
          else if (t.text == "False") node.literal = false;
          else node.literal = nullptr;
          node.span = t.span;
          return node;
        }
        throw ParseError(t.span.begin, "unexpected keyword: '" + t.text + "'");
      }
      case TokenKind::Punct: {
        if (t.text == "(") {
          advance();
          AstNode inner = parse_or();
          expect_punct(')', "to close group");
          return inner;
        }
        if (t.text == "[") return parse_list_literal();
        throw ParseError(t.span.begin, "unexpected token: '" + t.text + "'");
      }
      case TokenKind::Ident: {
        advance();
        bool is_call = peek().kind == TokenKind::Punct && peek().text == "(";
        if (is_call) {
          if (!is_builtin(t.text)) throw WhitelistError(t.span.begin, t.text);
          return parse_call(t);
        }
        if (is_builtin(t.text))
          throw ParseError(t.span.begin, "builtin name cannot be used as a variable: " + t.text);
        AstNode node;
        node.kind = NodeKind::Identifier;
        node.name = t.text;
        node.span = t.span;
        return node;
      }
      default:
        throw ParseError(t.span.begin, "unexpected end of input");
    }
  }

  AstNode parse_list_literal() {
    std::size_t start = peek().span.begin;
    expect_punct('[', "to open list literal");
    nlohmann::ordered_json items = nlohmann::ordered_json::array();
    if (!(peek().kind == TokenKind::Punct && peek().text == "]")) {
      items.push_back(parse_literal_element());
      while (match_punct(',')) items.push_back(parse_literal_element());
    }
    if (!match_punct(']')) throw ParseError(peek().span.begin, "expected ']' to close list literal");
    AstNode node;
    node.kind = NodeKind::Literal;
    node.literal = std::move(items);
    node.span = {start, tokens_[pos_ - 1].span.end};
    return node;
  }

  nlohmann::ordered_json parse_literal_element() {
    bool negate = false;
    if (peek().kind == TokenKind::Operator && peek().text == "-") {
      negate = true;
      ++pos_;
    }
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Int:
        advance();
        return negate ? nlohmann::ordered_json(-t.int_value) : nlohmann::ordered_json(t.int_value);
      case TokenKind::Float:
        advance();
        return negate ? nlohmann::ordered_json(-t.float_value) : nlohmann::ordered_json(t.float_value);
      case TokenKind::String:
        if (negate) throw ParseError(t.span.begin, "cannot negate a string literal");
        advance();
        return t.string_value;
      case TokenKind::Keyword:
        if (negate) throw ParseError(t.span.begin, "cannot negate this literal");
        if (t.text == "True") { advance(); return true; }
        if (t.text == "False") { advance(); return false; }
        if (t.text == "None") { advance(); return nullptr; }
        throw ParseError(t.span.begin, "list literals may contain only literals");
      case TokenKind::Punct:
        if (t.text == "[") {
          AstNode nested = parse_list_literal();
          return nested.literal;
        }
        [[fallthrough]];
      default:
        throw ParseError(t.span.begin, "list literals may contain only literals");
    }
  }

  AstNode parse_call(const Token& callee) {
    AstNode node;
    node.kind = NodeKind::Call;
    node.name = callee.text;
    node.span.begin = callee.span.begin;
    expect_punct('(', "after builtin name");
    if (!(peek().kind == TokenKind::Punct && peek().text == ")")) {
      AstNode first = parse_or();
      if (peek().kind == TokenKind::Keyword && peek().text == "for") {
        node.children.push_back(parse_comprehension_tail(std::move(first), callee));
        if (peek().kind == TokenKind::Punct && peek().text == ",")
          throw ParseError(peek().span.begin, "a comprehension must be the sole argument");
      } else {
        node.children.push_back(std::move(first));
        while (match_punct(',')) node.children.push_back(parse_or());
      }
    }
    if (!match_punct(')')) throw ParseError(peek().span.begin, "expected ')' to close call");
    node.span.end = tokens_[pos_ - 1].span.end;
    check_arity(node, callee.span.begin);
    return node;
  }

  AstNode parse_comprehension_tail(AstNode body, const Token& callee) {
    if (!builtin_accepts_comprehension(callee.text))
      throw ParseError(callee.span.begin, "builtin does not accept a comprehension: " + callee.text);
    std::size_t start = body.span.begin;
    if (!match_keyword("for")) throw ParseError(peek().span.begin, "expected 'for'");
    const Token& var = peek();
    if (var.kind != TokenKind::Ident)
      throw ParseError(var.span.begin, "expected loop variable name");
    if (is_builtin(var.text))
      throw ParseError(var.span.begin, "loop variable may not shadow a builtin: " + var.text);
    advance();
    if (!match_keyword("in")) throw ParseError(peek().span.begin, "expected 'in'");
    AstNode iterable = parse_or();
    AstNode node;
    node.kind = NodeKind::Comprehension;
    node.name = var.text;
    node.children.push_back(std::move(body));
    node.children.push_back(std::move(iterable));
    if (match_keyword("if")) {
      node.comp_has_filter = true;
      node.children.push_back(parse_or());
    }
    node.span = {start, node.children.back().span.end};
    return node;
  }

  void check_arity(const AstNode& call, std::size_t pos) {
    std::size_t n = call.children.size();
    const std::string& f = call.name;
    auto fail = [&](const char* expected) {
      throw ParseError(pos, f + "() expects " + expected + " argument(s), got " + std::to_string(n));
    };
    if (f == "len" || f == "set" || f == "any" || f == "all" || f == "sum" ||
        f == "abs" || f == "sorted") {
      if (n != 1) fail("1");
    } else if (f == "round") {
      if (n != 1 && n != 2) fail("1 or 2");
    } else if (f == "min" || f == "max") {
      if (n < 1) fail("at least 1");
      if (n == 1) return;
      for (const auto& c : call.children)
        if (c.kind == NodeKind::Comprehension)
          throw ParseError(pos, "a comprehension must be the sole argument");
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Parses a predicate source into its AST.
inline AstNode parse(std::string_view source) {
  return detail::Parser(tokenize(source)).parse_expression();
}

}  // namespace condchain::vpir
