#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace condchain::vpir {

// Byte range [begin, end) into the predicate source text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
};

enum class TokenKind { Ident, Int, Float, String, Operator, Keyword, Punct, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;                 // raw lexeme (quotes included for strings)
  Span span;
  std::string string_value;         // decoded value for String tokens
  std::int64_t int_value = 0;       // for Int tokens
  double float_value = 0.0;         // for Float tokens
};

class LexError : public std::runtime_error {
 public:
  LexError(std::size_t position, const std::string& message)
      : std::runtime_error("lex error at column " + std::to_string(position + 1) + ": " + message),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

inline bool is_keyword(std::string_view s) {
  return s == "and" || s == "or" || s == "not" || s == "in" || s == "for" ||
         s == "if" || s == "True" || s == "False" || s == "None";
}

// Splits a predicate source into tokens. The language has no comments; any
// control character other than space or tab is rejected.
inline std::vector<Token> tokenize(std::string_view src) {
  {
    std::string_view t = src;
    while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.remove_prefix(1);
    if (t.empty()) throw LexError(0, "empty predicate source");
  }

  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = src.size();

  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  auto is_ident_head = [](char c) {
    return c == '_' || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  };
  auto is_ident_tail = [&](char c) { return is_ident_head(c) || is_digit(c); };

  while (i < n) {
    char c = src[i];
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f)
      throw LexError(i, "control characters are not allowed");
    if (c == '#') throw LexError(i, "comments are not part of the language");

    std::size_t start = i;
    if (is_ident_head(c)) {
      while (i < n && is_ident_tail(src[i])) ++i;
      Token t;
      t.text = std::string(src.substr(start, i - start));
      t.span = {start, i};
      t.kind = is_keyword(t.text) ? TokenKind::Keyword : TokenKind::Ident;
      tokens.push_back(std::move(t));
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(src[i + 1]))) {
      bool saw_dot = false, saw_exp = false;
      while (i < n) {
        char d = src[i];
        if (is_digit(d)) {
          ++i;
        } else if (d == '.' && !saw_dot && !saw_exp) {
          saw_dot = true;
          ++i;
        } else if ((d == 'e' || d == 'E') && !saw_exp) {
          saw_exp = true;
          ++i;
          if (i < n && (src[i] == '+' || src[i] == '-')) ++i;
          if (i >= n || !is_digit(src[i])) throw LexError(start, "malformed number: missing exponent digits");
        } else {
          break;
        }
      }
      if (i < n && is_ident_head(src[i])) throw LexError(start, "malformed number");
      Token t;
      t.text = std::string(src.substr(start, i - start));
      t.span = {start, i};
      if (saw_dot || saw_exp) {
        t.kind = TokenKind::Float;
        try {
          t.float_value = std::stod(t.text);
        } catch (const std::exception&) {
          throw LexError(start, "malformed number: " + t.text);
        }
      } else {
        t.kind = TokenKind::Int;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.int_value);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size())
          throw LexError(start, "integer literal out of range: " + t.text);
      }
      tokens.push_back(std::move(t));
      continue;
    }
    if (c == '"' || c == '\'') {
      char quote = c;
      ++i;
      std::string value;
      bool closed = false;
      while (i < n) {
        char d = src[i];
        if (d == quote) {
          closed = true;
          ++i;
          break;
        }
        if (d == '\\') {
          if (i + 1 >= n) throw LexError(start, "unterminated string literal");
          char e = src[i + 1];
          switch (e) {
            case '\\': value += '\\'; break;
            case '\'': value += '\''; break;
            case '"': value += '"'; break;
            case 'n': value += '\n'; break;
            case 't': value += '\t'; break;
            case 'r': value += '\r'; break;
            default: throw LexError(i, std::string("unknown escape sequence: \\") + e);
          }
          i += 2;
          continue;
        }
        if (static_cast<unsigned char>(d) < 0x20 || d == 0x7f)
          throw LexError(i, "control characters are not allowed");
        value += d;
        ++i;
      }
      if (!closed) throw LexError(start, "unterminated string literal");
      Token t;
      t.kind = TokenKind::String;
      t.text = std::string(src.substr(start, i - start));
      t.span = {start, i};
      t.string_value = std::move(value);
      tokens.push_back(std::move(t));
      continue;
    }

    auto two = (i + 1 < n) ? src.substr(i, 2) : std::string_view{};
    Token t;
    t.span = {start, start + 1};
    if (two == "==" || two == "!=" || two == "<=" || two == ">=" || two == "//") {
      t.kind = TokenKind::Operator;
      t.text = std::string(two);
      t.span.end = start + 2;
      i += 2;
    } else if (c == '<' || c == '>' || c == '+' || c == '-' || c == '*' || c == '/' || c == '%') {
      t.kind = TokenKind::Operator;
      t.text = std::string(1, c);
      ++i;
    } else if (c == '(' || c == ')' || c == '[' || c == ']' || c == ',') {
      t.kind = TokenKind::Punct;
      t.text = std::string(1, c);
      ++i;
    } else {
      throw LexError(i, std::string("unexpected character: '") + c + "'");
    }
    tokens.push_back(std::move(t));
  }

  Token end;
  end.kind = TokenKind::End;
  end.span = {n, n};
  tokens.push_back(std::move(end));
  return tokens;
}

}  // namespace condchain::vpir
