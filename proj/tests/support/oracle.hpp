#pragma once
// Brute-force reference semantics used only by tests. Evaluates predicates
// directly on complete data instead of going through substitution, folding
// and variable conditions, and enumerates matches by trying every mapping
// and every binding.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "lasco/policy.hpp"
#include "lasco/system.hpp"

namespace oracle {

using lasco::Bindings;
using lasco::EvalContext;
using lasco::Expr;
using lasco::Op;
using lasco::Value;

struct TypeError {};

struct Missing {};
using Result = std::variant<Missing, Value>;

inline Result eval(const Expr& e, const EvalContext& ctx, const Bindings& b);

inline bool truth(const Result& r) {
  if (std::holds_alternative<Missing>(r)) return false;
  const auto& v = std::get<Value>(r);
  if (!v.is_flag()) throw TypeError{};
  return v.flag();
}

inline Result eval(const Expr& e, const EvalContext& ctx, const Bindings& b) {
  switch (e.op()) {
    case Op::Const: return e.value();
    case Op::Attr: {
      auto it = ctx.find(e.name());
      if (it == ctx.end()) return Missing{};
      return it->second;
    }
    case Op::Var: {
      auto it = b.find(e.name());
      if (it == b.end()) throw TypeError{};  // callers always pass complete bindings
      return it->second;
    }
    case Op::Not: return Value(!truth(eval(e.operand(), ctx, b)));
    case Op::And: {
      // Both sides are evaluated; a missing name only spoils its own side.
      const bool l = truth(eval(e.lhs(), ctx, b));
      const bool r = truth(eval(e.rhs(), ctx, b));
      return Value(l && r);
    }
    case Op::Or: {
      const bool l = truth(eval(e.lhs(), ctx, b));
      const bool r = truth(eval(e.rhs(), ctx, b));
      return Value(l || r);
    }
    default: break;
  }
  Result lr = eval(e.lhs(), ctx, b);
  Result rr = eval(e.rhs(), ctx, b);
  const bool relation = e.op() == Op::Eq || e.op() == Op::Neq || e.op() == Op::Lt || e.op() == Op::Gt ||
                        e.op() == Op::Le || e.op() == Op::Ge || e.op() == Op::In || e.op() == Op::Subset ||
                        e.op() == Op::SubsetEq;
  if (std::holds_alternative<Missing>(lr) || std::holds_alternative<Missing>(rr)) {
    if (relation) return Value(false);
    return Missing{};
  }
  const Value& l = std::get<Value>(lr);
  const Value& r = std::get<Value>(rr);
  auto nums = [&] {
    if (!l.is_num() || !r.is_num()) throw TypeError{};
  };
  auto sets = [&] {
    if (!l.is_set() || !r.is_set()) throw TypeError{};
  };
  switch (e.op()) {
    case Op::Eq: return Value(l == r);
    case Op::Neq: return Value(!(l == r));
    case Op::Lt: nums(); return Value(l.num() < r.num());
    case Op::Gt: nums(); return Value(l.num() > r.num());
    case Op::Le: nums(); return Value(l.num() <= r.num());
    case Op::Ge: nums(); return Value(l.num() >= r.num());
    case Op::Add: nums(); return Value(l.num() + r.num());
    case Op::Sub: nums(); return Value(l.num() - r.num());
    case Op::Mul: nums(); return Value(l.num() * r.num());
    case Op::Div:
      nums();
      if (r.num() == 0) throw TypeError{};
      return Value(l.num() / r.num());
    case Op::In: {
      if (!r.is_set()) throw TypeError{};
      for (const auto& m : r.members()) {
        if (m == l) return Value(true);
      }
      return Value(false);
    }
    case Op::Subset:
    case Op::SubsetEq: {
      sets();
      std::size_t inside = 0;
      for (const auto& m : l.members()) {
        bool found = false;
        for (const auto& x : r.members()) found = found || x == m;
        if (!found) return Value(false);
        ++inside;
      }
      return Value(e.op() == Op::SubsetEq || inside < r.members().size());
    }
    case Op::Union:
    case Op::Intersect: {
      sets();
      std::vector<Value> out;
      for (const auto& m : l.members()) {
        bool in_r = false;
        for (const auto& x : r.members()) in_r = in_r || x == m;
        if (e.op() == Op::Union || in_r) out.push_back(m);
      }
      if (e.op() == Op::Union) out.insert(out.end(), r.members().begin(), r.members().end());
      return Value::set(out);
    }
    default: throw TypeError{};
  }
}

/// Whether `p` holds for `ctx` under complete bindings `b`.
inline bool holds(const Expr& p, const EvalContext& ctx, const Bindings& b) { return truth(eval(p, ctx, b)); }

/// A match in engine-independent form.
using MatchTuple = std::tuple<std::map<std::string, std::size_t>, std::map<std::string, lasco::SnapshotKey>, Bindings>;

inline void collect_constants(const Expr& e, std::set<Value>& out) {
  if (e.op() == Op::Const) {
    out.insert(e.value());
    if (e.value().is_set()) out.insert(e.value().members().begin(), e.value().members().end());
  }
  for (const auto& k : e.kids()) collect_constants(k, out);
}

/// Candidate values for variables: every value in the system and policy,
/// plus small integers so derived bindings such as `a + 1` are reachable.
inline std::vector<Value> candidate_values(const lasco::PolicyGraph& p, const lasco::SystemGraph& g) {
  std::set<Value> vs;
  for (const auto& [k, s] : g.snapshots()) {
    for (const auto& [n, v] : s.attrs) vs.insert(v);
  }
  for (const auto& e : g.events()) {
    for (const auto& [n, v] : e.params) vs.insert(v);
  }
  for (const auto& [id, pred] : p.domain) collect_constants(pred, vs);
  for (const auto& [id, pred] : p.req) collect_constants(pred, vs);
  for (int i = 0; i <= 4; ++i) vs.insert(Value(i));
  return {vs.begin(), vs.end()};
}

/// Every complete binding over `values` for `vars`.
inline void for_each_binding(const std::set<std::string>& vars, const std::vector<Value>& values,
                             const std::function<void(const Bindings&)>& f) {
  std::vector<std::string> names(vars.begin(), vars.end());
  Bindings b;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == names.size()) {
      f(b);
      return;
    }
    for (const auto& v : values) {
      b[names[i]] = v;
      rec(i + 1);
    }
    b.erase(names[i]);
  };
  rec(0);
}

/// Every injective edge map and isolated-node map whose induced node to
/// object assignment is a function and injective.
inline void for_each_mapping(const lasco::PolicyGraph& p, const lasco::SystemGraph& g,
                             const std::function<void(const std::map<std::string, std::size_t>&,
                                                      const std::map<std::string, lasco::SnapshotKey>&)>& f) {
  const auto& edges = p.graph.edges;
  const auto iso = p.graph.isolated_nodes();
  std::map<std::string, std::size_t> em;
  std::map<std::string, lasco::SnapshotKey> im;
  std::vector<lasco::SnapshotKey> snaps;
  for (const auto& [k, s] : g.snapshots()) snaps.push_back(k);

  auto consistent = [&] {
    std::map<std::string, std::string> node_obj;
    auto put = [&](const std::string& n, const std::string& o) {
      auto [it, fresh] = node_obj.emplace(n, o);
      return fresh || it->second == o;
    };
    std::set<std::size_t> used;
    for (const auto& e : edges) {
      const auto& ev = g.events()[em.at(e.id)];
      if (!used.insert(em.at(e.id)).second) return false;
      if (!put(e.src, ev.src) || !put(e.dest, ev.dest)) return false;
    }
    for (const auto& [n, k] : im) {
      if (!put(n, k.id)) return false;
    }
    std::set<std::string> objs;
    for (const auto& [n, o] : node_obj) {
      if (!objs.insert(o).second) return false;
    }
    return true;
  };

  std::function<void(std::size_t)> iso_rec = [&](std::size_t i) {
    if (i == iso.size()) {
      if (consistent()) f(em, im);
      return;
    }
    for (const auto& k : snaps) {
      im[iso[i]] = k;
      iso_rec(i + 1);
    }
    im.erase(iso[i]);
  };
  std::function<void(std::size_t)> edge_rec = [&](std::size_t i) {
    if (i == edges.size()) {
      iso_rec(0);
      return;
    }
    for (std::size_t ev = 0; ev < g.events().size(); ++ev) {
      em[edges[i].id] = ev;
      edge_rec(i + 1);
    }
    em.erase(edges[i].id);
  };
  edge_rec(0);
}

/// Whether the predicates `preds` all hold on the mapped elements under `b`.
inline bool graph_holds(const lasco::PolicyGraph& p, const lasco::PredicateMap& preds, const lasco::SystemGraph& g,
                        const std::map<std::string, std::size_t>& em,
                        const std::map<std::string, lasco::SnapshotKey>& im, const Bindings& b) {
  for (const auto& e : p.graph.edges) {
    const std::size_t i = em.at(e.id);
    if (!holds(preds.at(e.id), g.events()[i].params, b)) return false;
    if (!holds(preds.at(e.src), g.src_attr(i), b)) return false;
    if (!holds(preds.at(e.dest), g.dest_attr(i), b)) return false;
  }
  for (const auto& [n, k] : im) {
    if (!holds(preds.at(n), g.find(k.id, k.time)->attrs, b)) return false;
  }
  return true;
}

struct OracleResult {
  std::set<MatchTuple> matches;
  bool unique_bindings = true;  // no mapping admits two complete bindings
  bool type_error = false;
};

inline OracleResult find_matches(const lasco::PolicyGraph& p, const lasco::SystemGraph& g) {
  OracleResult out;
  const auto values = candidate_values(p, g);
  for_each_mapping(p, g, [&](const auto& em, const auto& im) {
    std::size_t count = 0;
    for_each_binding(p.vars, values, [&](const Bindings& b) {
      try {
        if (graph_holds(p, p.domain, g, em, im, b)) {
          ++count;
          out.matches.emplace(em, im, b);
        }
      } catch (const TypeError&) {
        out.type_error = true;
      }
    });
    if (count > 1) out.unique_bindings = false;
  });
  return out;
}

/// Requirement of `p` on a match, evaluated directly.
inline bool requirement_holds(const lasco::PolicyGraph& p, const lasco::SystemGraph& g, const MatchTuple& m) {
  return graph_holds(p, p.req, g, std::get<0>(m), std::get<1>(m), std::get<2>(m));
}

inline bool upheld(const lasco::PolicyGraph& p, const lasco::SystemGraph& g) {
  for (const auto& m : oracle::find_matches(p, g).matches) {
    if (!requirement_holds(p, g, m)) return false;
  }
  return true;
}

}  // namespace oracle
