#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lasco/errors.hpp"
#include "lasco/expr.hpp"

namespace lasco {

/// Partial bindings plus the residual condition over the still-unbound
/// variables. The condition never references attributes or parameters.
struct VariableConditions {
  Bindings bindings;
  Expr condition;

  friend bool operator==(const VariableConditions& a, const VariableConditions& b) {
    return a.bindings == b.bindings && a.condition == b.condition;
  }
};

namespace detail {

struct Substituted {
  Expr expr;
  bool poisoned = false;  // contains a missing name not yet absorbed by a boolean expression
};

inline Substituted substitute_attrs_rec(const Expr& e, const EvalContext& ctx) {
  switch (e.op()) {
    case Op::Const:
    case Op::Var:
      return {e, false};
    case Op::Attr: {
      auto it = ctx.find(e.name());
      if (it == ctx.end()) return {e, true};
      return {Expr::constant(it->second), false};
    }
    default:
      break;
  }
  std::vector<Expr> kids;
  bool poisoned = false;
  for (const auto& k : e.kids()) {
    auto s = substitute_attrs_rec(k, ctx);
    if (s.poisoned && is_logical(e.op())) {
      // The missing name is itself the innermost boolean expression.
      s.expr = Expr::truth(false);
      s.poisoned = false;
    }
    poisoned = poisoned || s.poisoned;
    kids.push_back(std::move(s.expr));
  }
  if (poisoned && is_relation(e.op())) return {Expr::truth(false), false};
  return {e.with_kids(std::move(kids)), poisoned};
}

}  // namespace detail

/// Replace attribute/parameter references by their values in `ctx`.
///
/// A name missing from `ctx` forces its innermost enclosing boolean
/// expression (a comparison, membership test, or the reference itself when
/// used directly as a logical operand) to false.
inline Expr substitute_attrs(const Expr& e, const EvalContext& ctx) {
  auto s = detail::substitute_attrs_rec(e, ctx);
  return s.poisoned ? Expr::truth(false) : s.expr;
}

/// Replace bound variables by their values; unbound variables stay.
inline Expr substitute_vars(const Expr& e, const Bindings& b) {
  if (b.empty()) return e;
  switch (e.op()) {
    case Op::Const:
    case Op::Attr:
      return e;
    case Op::Var: {
      auto it = b.find(e.name());
      return it == b.end() ? e : Expr::constant(it->second);
    }
    default:
      break;
  }
  std::vector<Expr> kids;
  kids.reserve(e.kids().size());
  for (const auto& k : e.kids()) kids.push_back(substitute_vars(k, b));
  return e.with_kids(std::move(kids));
}

namespace detail {

inline const Value& require_flag(const Expr& whole, const Value& v) {
  if (!v.is_flag()) throw FoldError("logical operand is not boolean", whole.to_string());
  return v;
}

inline Value apply_constant(const Expr& whole, Op op, const Value& a, const Value& b) {
  auto need_nums = [&] {
    if (!a.is_num() || !b.is_num()) throw FoldError("operator `" + std::string(symbol(op)) + "` requires numbers", whole.to_string());
  };
  auto need_sets = [&] {
    if (!a.is_set() || !b.is_set()) throw FoldError("operator `" + std::string(symbol(op)) + "` requires sets", whole.to_string());
  };
  switch (op) {
    case Op::Eq: return Value(a == b);
    case Op::Neq: return Value(a != b);
    case Op::Lt: need_nums(); return Value(a.num() < b.num());
    case Op::Gt: need_nums(); return Value(a.num() > b.num());
    case Op::Le: need_nums(); return Value(a.num() <= b.num());
    case Op::Ge: need_nums(); return Value(a.num() >= b.num());
    case Op::Add: need_nums(); return Value(a.num() + b.num());
    case Op::Sub: need_nums(); return Value(a.num() - b.num());
    case Op::Mul: need_nums(); return Value(a.num() * b.num());
    case Op::Div:
      need_nums();
      if (b.num() == 0) throw FoldError("division by zero", whole.to_string());
      return Value(a.num() / b.num());
    case Op::In:
      if (!b.is_set()) throw FoldError("right operand of `in` is not a set", whole.to_string());
      return Value(b.contains(a));
    case Op::Subset:
    case Op::SubsetEq: {
      need_sets();
      for (const auto& m : a.members()) {
        if (!b.contains(m)) return Value(false);
      }
      return Value(op == Op::SubsetEq || a.members().size() < b.members().size());
    }
    case Op::Intersect:
    case Op::Union: {
      need_sets();
      std::vector<Value> out;
      if (op == Op::Union) {
        out = a.members();
        out.insert(out.end(), b.members().begin(), b.members().end());
      } else {
        for (const auto& m : a.members()) {
          if (b.contains(m)) out.push_back(m);
        }
      }
      return Value::set(std::move(out));
    }
    default:
      throw FoldError("not a binary operator", whole.to_string());
  }
}

}  // namespace detail

/// Constant-fold every subexpression whose operands are constants, and
/// short-circuit `&&`/`||` on a constant side. The result is equivalent to
/// the input under every completion of its free variables.
inline Expr fold(const Expr& e) {
  if (is_leaf(e.op())) return e;

  if (e.op() == Op::Not) {
    Expr x = fold(e.operand());
    if (x.is_const()) return Expr::truth(!detail::require_flag(e, x.value()).flag());
    return x == e.operand() ? e : Expr::negate(x);
  }

  Expr l = fold(e.lhs());
  Expr r = fold(e.rhs());

  if (e.op() == Op::And || e.op() == Op::Or) {
    const bool absorbing = e.op() == Op::Or;  // true absorbs ||, false absorbs &&
    for (const Expr* side : {&l, &r}) {
      if (side->is_const() && detail::require_flag(e, side->value()).flag() == absorbing) {
        return Expr::truth(absorbing);
      }
    }
    if (l.is_const()) {
      if (r.is_const()) detail::require_flag(e, r.value());
      return r;
    }
    if (r.is_const()) return l;
    return Expr::binary(e.op(), l, r);
  }

  if (l.is_const() && r.is_const()) {
    return Expr::constant(detail::apply_constant(e, e.op(), l.value(), r.value()));
  }
  if (l == e.lhs() && r == e.rhs()) return e;
  return Expr::binary(e.op(), l, r);
}

/// Variable conditions under which `p` holds for the object/event `ctx`,
/// given bindings `b`. The bindings are carried through unchanged.
inline VariableConditions sat_pred(const Expr& p, const EvalContext& ctx, const Bindings& b) {
  return {b, fold(substitute_vars(substitute_attrs(p, ctx), b))};
}

namespace detail {

/// Returns the binding when `e` has the shape `$v = k` or `k = $v`.
inline std::optional<std::pair<std::string, Value>> forced_binding(const Expr& e) {
  if (e.op() != Op::Eq) return std::nullopt;
  const Expr& l = e.lhs();
  const Expr& r = e.rhs();
  if (l.op() == Op::Var && r.is_const()) return std::make_pair(l.name(), r.value());
  if (r.op() == Op::Var && l.is_const()) return std::make_pair(r.name(), l.value());
  return std::nullopt;
}

inline Expr strip_bound(const Expr& e, Bindings& found, bool& conflict) {
  if (e.op() == Op::And) {
    return Expr::binary(Op::And, strip_bound(e.lhs(), found, conflict),
                        strip_bound(e.rhs(), found, conflict));
  }
  if (auto b = forced_binding(e)) {
    auto [it, inserted] = found.emplace(b->first, b->second);
    if (!inserted && it->second != b->second) conflict = true;
    return Expr::truth(true);
  }
  return e;
}

}  // namespace detail

/// Pull every binding forced by a top-level conjunct `$v = k` (never from
/// under `||` or `!`) out of condition `c`. Contradictory forced bindings
/// give `({}, false)`.
inline std::pair<Bindings, Expr> extract_bound(const Expr& c) {
  Bindings found;
  bool conflict = false;
  Expr rest = detail::strip_bound(c, found, conflict);
  if (conflict) return {Bindings{}, Expr::truth(false)};
  return {std::move(found), fold(rest)};
}

/// Substitute the known bindings, extract newly forced ones and repeat
/// until no more variables become bound.
inline VariableConditions reduce_cond(const VariableConditions& c) {
  Bindings bound = c.bindings;
  Expr cond = c.condition;
  for (;;) {
    cond = fold(substitute_vars(cond, bound));
    auto [fresh, rest] = extract_bound(cond);
    cond = std::move(rest);
    if (fresh.empty()) break;
    bound.merge(fresh);
  }
  return {std::move(bound), std::move(cond)};
}

inline VariableConditions merge_conds(const VariableConditions& a, const VariableConditions& b) {
  const auto& small = a.bindings.size() <= b.bindings.size() ? a.bindings : b.bindings;
  const auto& large = &small == &a.bindings ? b.bindings : a.bindings;
  for (const auto& [name, value] : small) {
    auto it = large.find(name);
    if (it != large.end() && it->second != value) return {Bindings{}, Expr::truth(false)};
  }
  Bindings all = a.bindings;
  all.insert(b.bindings.begin(), b.bindings.end());
  return reduce_cond({std::move(all), conjoin_exprs(a.condition, b.condition)});
}

/// Left fold of the binary merge over a non-empty list.
inline VariableConditions merge_conds(const std::vector<VariableConditions>& cs) {
  if (cs.empty()) return {Bindings{}, Expr::truth(true)};
  VariableConditions acc = reduce_cond(cs.front());
  for (std::size_t i = 1; i < cs.size(); ++i) {
    acc = merge_conds(acc, cs[i]);
  }
  return acc;
}

}  // namespace lasco
