#pragma once

#include <cassert>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lasco/value.hpp"

namespace lasco {

enum class Op {
  Const,
  Attr,
  Var,
  Not,
  And,
  Or,
  Eq,
  Neq,
  Lt,
  Gt,
  Le,
  Ge,
  In,
  Subset,
  SubsetEq,
  Add,
  Sub,
  Mul,
  Div,
  Intersect,
  Union,
};

inline bool is_leaf(Op op) { return op == Op::Const || op == Op::Attr || op == Op::Var; }
inline bool is_logical(Op op) { return op == Op::Not || op == Op::And || op == Op::Or; }

/// Comparison and membership operators. Their result is always a flag, which
/// makes them the "innermost boolean expression" for missing-name handling.
inline bool is_relation(Op op) {
  switch (op) {
    case Op::Eq:
    case Op::Neq:
    case Op::Lt:
    case Op::Gt:
    case Op::Le:
    case Op::Ge:
    case Op::In:
    case Op::Subset:
    case Op::SubsetEq:
      return true;
    default:
      return false;
  }
}

/// Binding strength; larger binds tighter.
inline int precedence(Op op) {
  switch (op) {
    case Op::Or: return 1;
    case Op::And: return 2;
    case Op::Eq:
    case Op::Neq:
    case Op::Lt:
    case Op::Gt:
    case Op::Le:
    case Op::Ge:
    case Op::In:
    case Op::Subset:
    case Op::SubsetEq: return 3;
    case Op::Intersect:
    case Op::Union: return 4;
    case Op::Add:
    case Op::Sub: return 5;
    case Op::Mul:
    case Op::Div: return 6;
    case Op::Not: return 7;
    default: return 8;
  }
}

inline const char* symbol(Op op) {
  switch (op) {
    case Op::Not: return "!";
    case Op::And: return "&&";
    case Op::Or: return "||";
    case Op::Eq: return "=";
    case Op::Neq: return "!=";
    case Op::Lt: return "<";
    case Op::Gt: return ">";
    case Op::Le: return "<=";
    case Op::Ge: return ">=";
    case Op::In: return "in";
    case Op::Subset: return "subset";
    case Op::SubsetEq: return "subseteq";
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Intersect: return "intersect";
    case Op::Union: return "union";
    default: return "?";
  }
}

/// Immutable predicate expression tree. Copies share structure.
///
/// Leaves are constants, attribute/parameter references and `$`-variables
/// (stored without the sigil). Parentheses are not represented; the printer
/// inserts them from operator precedence.
class Expr {
 public:
  /// The implicit predicate: Constant(true).
  Expr() : Expr(constant(Value(true))) {}

  static Expr constant(Value v) {
    return Expr(std::make_shared<const Node>(Node{Op::Const, std::move(v), {}, {}}));
  }
  static Expr truth(bool b) { return constant(Value(b)); }
  static Expr attr(std::string name) {
    assert(!name.empty());
    return Expr(std::make_shared<const Node>(Node{Op::Attr, {}, std::move(name), {}}));
  }
  static Expr var(std::string name) {
    assert(!name.empty() && name.front() != '$');
    return Expr(std::make_shared<const Node>(Node{Op::Var, {}, std::move(name), {}}));
  }
  static Expr negate(Expr e) {
    return Expr(std::make_shared<const Node>(Node{Op::Not, {}, {}, {std::move(e)}}));
  }
  static Expr binary(Op op, Expr l, Expr r) {
    assert(!is_leaf(op) && op != Op::Not);
    return Expr(std::make_shared<const Node>(Node{op, {}, {}, {std::move(l), std::move(r)}}));
  }

  Op op() const { return node_->op; }
  const Value& value() const { return node_->value; }
  const std::string& name() const { return node_->name; }
  const std::vector<Expr>& kids() const { return node_->kids; }
  const Expr& operand() const { return node_->kids.at(0); }
  const Expr& lhs() const { return node_->kids.at(0); }
  const Expr& rhs() const { return node_->kids.at(1); }

  bool is_const() const { return op() == Op::Const; }
  bool is_true() const { return is_const() && value().is_flag() && value().flag(); }
  bool is_false() const { return is_const() && value().is_flag() && !value().flag(); }

  /// Rebuild this node with new children (same operator).
  Expr with_kids(std::vector<Expr> kids) const {
    if (op() == Op::Not) return negate(std::move(kids.at(0)));
    return binary(op(), std::move(kids.at(0)), std::move(kids.at(1)));
  }

  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.op() != b.op()) return false;
    switch (a.op()) {
      case Op::Const: return a.value() == b.value();
      case Op::Attr:
      case Op::Var: return a.name() == b.name();
      default: return a.kids() == b.kids();
    }
  }
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

  std::string to_string() const {
    std::string out;
    print(out, 0);
    return out;
  }

 private:
  struct Node {
    Op op;
    Value value;
    std::string name;
    std::vector<Expr> kids;
  };

  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  void print(std::string& out, int min_prec) const {
    switch (op()) {
      case Op::Const: out += value().to_string(); return;
      case Op::Attr: out += name(); return;
      case Op::Var: out += "$" + name(); return;
      default: break;
    }
    const int prec = precedence(op());
    const bool parens = prec < min_prec;
    if (parens) out += "(";
    if (op() == Op::Not) {
      out += "!";
      operand().print(out, precedence(Op::Not));
    } else {
      // Left-associative: a right child of equal strength needs parentheses.
      lhs().print(out, prec);
      out += " ";
      out += symbol(op());
      out += " ";
      rhs().print(out, prec + 1);
    }
    if (parens) out += ")";
  }

  std::shared_ptr<const Node> node_;
};

inline Expr operator&&(Expr a, Expr b) { return Expr::binary(Op::And, std::move(a), std::move(b)); }
inline Expr operator||(Expr a, Expr b) { return Expr::binary(Op::Or, std::move(a), std::move(b)); }
inline Expr operator!(Expr a) { return Expr::negate(std::move(a)); }

/// Conjunction that drops a constant-true side.
inline Expr conjoin_exprs(const Expr& a, const Expr& b) {
  if (a.is_true()) return b;
  if (b.is_true()) return a;
  return a && b;
}

namespace detail {
inline void collect(const Expr& e, Op leaf, std::set<std::string>& out) {
  if (e.op() == leaf) {
    out.insert(e.name());
    return;
  }
  for (const auto& k : e.kids()) collect(k, leaf, out);
}
}  // namespace detail

inline std::set<std::string> vars_of(const Expr& e) {
  std::set<std::string> out;
  detail::collect(e, Op::Var, out);
  return out;
}

inline std::set<std::string> attrs_of(const Expr& e) {
  std::set<std::string> out;
  detail::collect(e, Op::Attr, out);
  return out;
}

}  // namespace lasco
