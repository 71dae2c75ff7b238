#pragma once

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "lasco/errors.hpp"
#include "lasco/expr.hpp"

namespace lasco {

namespace detail {

enum class Tok { End, Ident, Var, String, Number, Sym };

struct Token {
  Tok kind = Tok::End;
  std::string text;  // identifier/variable name, decoded string, symbol or number spelling
  std::size_t offset = 0;
};

/// Recursive-descent parser for the predicate surface grammar.
///
///   or      := and ( "||" and )*
///   and     := rel ( "&&" rel )*
///   rel     := setop ( relop setop )*
///   setop   := add ( ("intersect" | "union") add )*
///   add     := mul ( ("+" | "-") mul )*
///   mul     := unary ( ("*" | "/") unary )*
///   unary   := "!" unary | primary
///   primary := constant | ident | $ident | "(" or ")" | "{" [member ("," member)*] "}"
class PredicateParser {
 public:
  PredicateParser(std::string_view text, std::size_t base_line, std::size_t base_col)
      : text_(text), base_line_(base_line), base_col_(base_col) {
    tokenize();
  }

  Expr parse() {
    if (tokens_.front().kind == Tok::End) fail(tokens_.front().offset, "empty predicate");
    Expr e = parse_or();
    if (peek().kind != Tok::End) fail(peek().offset, "unexpected `" + peek().text + "`");
    return e;
  }

 private:
  [[noreturn]] void fail(std::size_t offset, const std::string& msg) const {
    std::size_t line = base_line_;
    std::size_t col = base_col_;
    for (std::size_t i = 0; i < offset && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(line, col, msg);
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  void tokenize() {
    std::size_t i = 0;
    const std::size_t n = text_.size();
    while (i < n) {
      const char c = text_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      const std::size_t start = i;
      if (ident_start(c)) {
        while (i < n && ident_char(text_[i])) ++i;
        tokens_.push_back({Tok::Ident, std::string(text_.substr(start, i - start)), start});
      } else if (c == '$') {
        ++i;
        if (i >= n || !ident_start(text_[i])) fail(start, "expected variable name after `$`");
        while (i < n && ident_char(text_[i])) ++i;
        tokens_.push_back({Tok::Var, std::string(text_.substr(start + 1, i - start - 1)), start});
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        while (i < n && std::isdigit(static_cast<unsigned char>(text_[i]))) ++i;
        if (i + 1 < n && text_[i] == '.' && std::isdigit(static_cast<unsigned char>(text_[i + 1]))) {
          ++i;
          while (i < n && std::isdigit(static_cast<unsigned char>(text_[i]))) ++i;
        }
        tokens_.push_back({Tok::Number, std::string(text_.substr(start, i - start)), start});
      } else if (c == '"') {
        ++i;
        std::string s;
        bool closed = false;
        while (i < n) {
          char d = text_[i++];
          if (d == '"') {
            closed = true;
            break;
          }
          if (d == '\\' && i < n) {
            char e = text_[i++];
            s += e == 'n' ? '\n' : e == 't' ? '\t' : e;
          } else {
            s += d;
          }
        }
        if (!closed) fail(start, "unterminated string literal");
        tokens_.push_back({Tok::String, std::move(s), start});
      } else {
        static const char* const two[] = {"&&", "||", "!=", "<=", ">="};
        std::string sym;
        for (const char* t : two) {
          if (text_.substr(i, 2) == t) sym = t;
        }
        if (sym.empty()) {
          if (std::string_view("!=<>+-*/(){},").find(c) == std::string_view::npos) {
            fail(start, std::string("unknown operator token `") + c + "`");
          }
          sym = std::string(1, c);
        }
        i += sym.size();
        tokens_.push_back({Tok::Sym, sym, start});
      }
    }
    tokens_.push_back({Tok::End, "end of input", n});
  }

  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }

  bool accept_sym(std::string_view s) {
    if (peek().kind == Tok::Sym && peek().text == s) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept_word(std::string_view w) {
    if (peek().kind == Tok::Ident && peek().text == w) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_sym(std::string_view s) {
    if (!accept_sym(s)) fail(peek().offset, "expected `" + std::string(s) + "` but found `" + peek().text + "`");
  }

  static bool is_keyword(const std::string& w) {
    return w == "in" || w == "subset" || w == "subseteq" || w == "intersect" || w == "union" ||
           w == "true" || w == "false";
  }

  Expr parse_or() {
    Expr e = parse_and();
    while (accept_sym("||")) e = Expr::binary(Op::Or, e, parse_and());
    return e;
  }

  Expr parse_and() {
    Expr e = parse_rel();
    while (accept_sym("&&")) e = Expr::binary(Op::And, e, parse_rel());
    return e;
  }

  Expr parse_rel() {
    Expr e = parse_setop();
    for (;;) {
      Op op;
      if (accept_sym("=")) op = Op::Eq;
      else if (accept_sym("!=")) op = Op::Neq;
      else if (accept_sym("<=")) op = Op::Le;
      else if (accept_sym(">=")) op = Op::Ge;
      else if (accept_sym("<")) op = Op::Lt;
      else if (accept_sym(">")) op = Op::Gt;
      else if (accept_word("in")) op = Op::In;
      else if (accept_word("subseteq")) op = Op::SubsetEq;
      else if (accept_word("subset")) op = Op::Subset;
      else return e;
      e = Expr::binary(op, e, parse_setop());
    }
  }

  Expr parse_setop() {
    Expr e = parse_add();
    for (;;) {
      if (accept_word("intersect")) e = Expr::binary(Op::Intersect, e, parse_add());
      else if (accept_word("union")) e = Expr::binary(Op::Union, e, parse_add());
      else return e;
    }
  }

  Expr parse_add() {
    Expr e = parse_mul();
    for (;;) {
      if (accept_sym("+")) e = Expr::binary(Op::Add, e, parse_mul());
      else if (accept_sym("-")) e = Expr::binary(Op::Sub, e, parse_mul());
      else return e;
    }
  }

  Expr parse_mul() {
    Expr e = parse_unary();
    for (;;) {
      if (accept_sym("*")) e = Expr::binary(Op::Mul, e, parse_unary());
      else if (accept_sym("/")) e = Expr::binary(Op::Div, e, parse_unary());
      else return e;
    }
  }

  Expr parse_unary() {
    if (accept_sym("!")) return Expr::negate(parse_unary());
    return parse_primary();
  }

  Value parse_number(bool negative) {
    const Token& t = next();
    double v = 0;
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (res.ec != std::errc()) fail(t.offset, "bad number `" + t.text + "`");
    return Value(negative ? -v : v);
  }

  /// A negative literal is `-` immediately followed by digits.
  bool at_negative_number() const {
    return peek().kind == Tok::Sym && peek().text == "-" && peek(1).kind == Tok::Number &&
           peek(1).offset == peek().offset + 1;
  }

  Value parse_member() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::String: return Value(next().text);
      case Tok::Number: return parse_number(false);
      case Tok::Ident:
        if (t.text == "true" || t.text == "false") return Value(next().text == "true");
        if (is_keyword(t.text)) fail(t.offset, "unexpected keyword `" + t.text + "` in set literal");
        // Bare words inside a set literal are text constants: {a,b}.
        return Value(next().text);
      case Tok::Sym:
        if (t.text == "{") return parse_set_literal();
        if (at_negative_number()) {
          ++pos_;
          return parse_number(true);
        }
        break;
      default:
        break;
    }
    fail(t.offset, "set literal members must be constants, found `" + t.text + "`");
  }

  Value parse_set_literal() {
    expect_sym("{");
    std::vector<Value> members;
    if (!accept_sym("}")) {
      do {
        members.push_back(parse_member());
      } while (accept_sym(","));
      expect_sym("}");
    }
    return Value::set(std::move(members));
  }

  Expr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::String: return Expr::constant(Value(next().text));
      case Tok::Number: return Expr::constant(parse_number(false));
      case Tok::Var: return Expr::var(next().text);
      case Tok::Ident:
        if (t.text == "true" || t.text == "false") return Expr::truth(next().text == "true");
        if (is_keyword(t.text)) fail(t.offset, "unexpected keyword `" + t.text + "`");
        return Expr::attr(next().text);
      case Tok::Sym:
        if (t.text == "(") {
          ++pos_;
          Expr e = parse_or();
          expect_sym(")");
          return e;
        }
        if (t.text == "{") return Expr::constant(parse_set_literal());
        if (at_negative_number()) {
          ++pos_;
          return Expr::constant(parse_number(true));
        }
        break;
      case Tok::End:
        fail(t.offset, "unexpected end of predicate");
    }
    fail(t.offset, "unexpected `" + t.text + "`");
  }

  std::string_view text_;
  std::size_t base_line_;
  std::size_t base_col_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parse predicate text. `line`/`column` locate the text inside a larger
/// document so errors point at the right place.
inline Expr parse_predicate(std::string_view text, std::size_t line = 1, std::size_t column = 1) {
  return detail::PredicateParser(text, line, column).parse();
}

}  // namespace lasco
