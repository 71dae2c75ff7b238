#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "lasco/verdict.hpp"

namespace lasco {

/// Composite policy: an expression tree over policy graphs.
struct PolicyExpr {
  enum class Kind { Atom, Null, And, Or, Rev };

  Kind kind = Kind::Null;
  std::shared_ptr<const PolicyGraph> atom;
  std::vector<PolicyExpr> kids;

  static PolicyExpr of(PolicyGraph p) { return {Kind::Atom, std::make_shared<const PolicyGraph>(std::move(p)), {}}; }
  static PolicyExpr null() { return {}; }
  static PolicyExpr all(std::vector<PolicyExpr> ks) { return {Kind::And, nullptr, std::move(ks)}; }
  static PolicyExpr any(std::vector<PolicyExpr> ks) { return {Kind::Or, nullptr, std::move(ks)}; }
  static PolicyExpr rev(PolicyExpr k) { return {Kind::Rev, nullptr, {std::move(k)}}; }

  std::string to_string() const {
    switch (kind) {
      case Kind::Atom: return atom->name;
      case Kind::Null: return "null";
      case Kind::Rev: return "~" + kids.front().to_string();
      default: break;
    }
    std::string out = "(";
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (i) out += kind == Kind::And ? " & " : " | ";
      out += kids[i].to_string();
    }
    if (kids.empty()) out += kind == Kind::And ? "all" : "any";
    return out + ")";
  }
};

inline PolicyExpr nullify(const PolicyGraph&) { return PolicyExpr::null(); }

/// Same domain, every requirement `true`.
inline PolicyGraph nullify_graph(const PolicyGraph& p) {
  PolicyGraph out = p;
  for (auto& [id, pred] : out.req) pred = Expr::truth(true);
  return out;
}

inline PolicyExpr conjoin(const PolicyGraph& a, const PolicyGraph& b) {
  return PolicyExpr::all({PolicyExpr::of(a), PolicyExpr::of(b)});
}

inline PolicyExpr disjoin(const PolicyGraph& a, const PolicyGraph& b) {
  return PolicyExpr::any({PolicyExpr::of(a), PolicyExpr::of(b)});
}

inline bool same_domain(const PolicyGraph& a, const PolicyGraph& b) {
  return a.graph == b.graph && a.domain == b.domain && a.vars == b.vars;
}

/// Single graph whose requirements are the pairwise conjunctions.
inline PolicyGraph conjoin_same_domain(const PolicyGraph& a, const PolicyGraph& b) {
  if (!same_domain(a, b)) {
    throw PolicyError("policies `" + a.name + "` and `" + b.name + "` do not share a domain");
  }
  PolicyGraph out = a;
  out.name = a.name + "_and_" + b.name;
  for (auto& [id, pred] : out.req) pred = conjoin_exprs(pred, b.req.at(id));
  return out;
}

/// Requirement reversal as a disjunction of single-negation policies, one
/// per element whose requirement is not the constant `true`. When every
/// requirement is `true`, the one disjunct left has requirement `false` on
/// its first element, so the domain still applies and nothing is upheld.
inline PolicyExpr reverse(const PolicyGraph& p) {
  const auto elements = p.graph.elements();
  if (elements.empty()) return PolicyExpr::rev(PolicyExpr::of(p));
  std::vector<PolicyExpr> parts;
  auto single = [&](const std::string& id, Expr negated) {
    PolicyGraph q = nullify_graph(p);
    q.name = p.name + "_rev_" + id;
    q.req[id] = std::move(negated);
    q.vars = p.vars;
    parts.push_back(PolicyExpr::of(std::move(q)));
  };
  for (const auto& id : elements) {
    const Expr& r = p.req.at(id);
    if (!r.is_true()) single(id, !r);
  }
  if (parts.empty()) single(elements.front(), Expr::truth(false));
  return PolicyExpr::any(std::move(parts));
}

/// Reversal of a composite. A disjunction becomes the conjunction of its
/// reversed members; other composites are wrapped in RevOp.
inline PolicyExpr reverse(const PolicyExpr& e) {
  switch (e.kind) {
    case PolicyExpr::Kind::Atom: return reverse(*e.atom);
    case PolicyExpr::Kind::Rev: return e.kids.front();
    case PolicyExpr::Kind::Or: {
      std::vector<PolicyExpr> parts;
      for (const auto& k : e.kids) parts.push_back(reverse(k));
      return PolicyExpr::all(std::move(parts));
    }
    default: return PolicyExpr::rev(e);
  }
}

/// True when an OrOp in `e` joins atoms over different basic graphs or
/// variable sets, whose match tuples never coincide.
inline bool mixes_domains(const PolicyExpr& e) {
  std::vector<const PolicyGraph*> atoms;
  std::function<void(const PolicyExpr&)> collect = [&](const PolicyExpr& x) {
    if (x.kind == PolicyExpr::Kind::Atom) atoms.push_back(x.atom.get());
    for (const auto& k : x.kids) collect(k);
  };
  bool mixed = false;
  std::function<void(const PolicyExpr&)> walk = [&](const PolicyExpr& x) {
    if (x.kind == PolicyExpr::Kind::Or) {
      atoms.clear();
      collect(x);
      for (const auto* a : atoms) {
        if (!(a->graph == atoms.front()->graph && a->vars == atoms.front()->vars)) mixed = true;
      }
    }
    for (const auto& k : x.kids) walk(k);
  };
  walk(e);
  return mixed;
}

// --- evaluation -------------------------------------------------------------

/// Match tuple identity across policies: two atoms share a match only when
/// their basic graphs and variable sets coincide.
struct MatchKey {
  std::string shape;
  std::map<std::string, std::size_t> edges;
  std::map<std::string, SnapshotKey> isolated;
  Bindings bindings;

  friend bool operator<(const MatchKey& a, const MatchKey& b) {
    return std::tie(a.shape, a.edges, a.isolated, a.bindings) < std::tie(b.shape, b.edges, b.isolated, b.bindings);
  }
};

inline std::string shape_of(const PolicyGraph& p) {
  std::string s;
  for (const auto& n : p.graph.nodes) s += n + ";";
  s += "|";
  for (const auto& e : p.graph.edges) s += e.id + ":" + e.src + ">" + e.dest + ";";
  s += "|";
  for (const auto& v : p.vars) s += v + ";";
  return s;
}

/// Per match: whether the expression's requirement holds there.
using Outcomes = std::map<MatchKey, bool>;

inline Outcomes outcomes(const PolicyExpr& e, const SystemGraph& g, std::size_t cap = kDefaultMatchCap) {
  using K = PolicyExpr::Kind;
  Outcomes out;
  switch (e.kind) {
    case K::Null: return out;
    case K::Atom: {
      const auto shape = shape_of(*e.atom);
      for (auto& m : find_matches(*e.atom, g, cap)) {
        const bool ok = check_requirement(*e.atom, m, g).satisfied;
        out[{shape, std::move(m.edges), std::move(m.isolated), std::move(m.bindings)}] = ok;
      }
      return out;
    }
    case K::Rev:
      out = outcomes(e.kids.front(), g, cap);
      for (auto& [k, ok] : out) ok = !ok;
      return out;
    case K::And:
    case K::Or:
      for (const auto& kid : e.kids) {
        for (auto& [k, ok] : outcomes(kid, g, cap)) {
          auto [it, fresh] = out.emplace(k, ok);
          if (!fresh) it->second = e.kind == K::And ? (it->second && ok) : (it->second || ok);
        }
      }
      return out;
  }
  return out;
}

/// Upheld iff the requirement holds on every match.
inline bool eval_policy_expr(const PolicyExpr& e, const SystemGraph& g, std::size_t cap = kDefaultMatchCap) {
  for (const auto& [k, ok] : outcomes(e, g, cap)) {
    if (!ok) return false;
  }
  return true;
}

// --- bounded universes ------------------------------------------------------

/// A finite family of systems. Every object carries every attribute at
/// every instance; events carry every parameter.
struct UniverseBounds {
  std::size_t max_objects = 2;
  std::size_t max_instances = 1;
  std::size_t max_events = 2;
  std::map<std::string, std::vector<Value>> attributes;
  std::map<std::string, std::vector<Value>> parameters;
  std::vector<Value> values;  // default domain for names given without values
  std::uint64_t ceiling = 2000000;

  /// Every value any variable could take: the union of all domains.
  std::vector<Value> all_values() const {
    std::set<Value> s(values.begin(), values.end());
    for (const auto& [n, vs] : attributes) s.insert(vs.begin(), vs.end());
    for (const auto& [n, vs] : parameters) s.insert(vs.begin(), vs.end());
    return {s.begin(), s.end()};
  }

  std::string describe() const {
    return "bounded: objects<=" + std::to_string(max_objects) + ", instances<=" + std::to_string(max_instances) +
           ", events<=" + std::to_string(max_events) + ", " + std::to_string(all_values().size()) + " values";
  }
};

/// Reads `{"max_objects":2, "max_instances":1, "max_events":2,
/// "attributes":{"a":[0,1]} or ["a"], "parameters":..., "values":[...],
/// "ceiling":N}`.
inline UniverseBounds universe_from_json(const nlohmann::json& j) {
  UniverseBounds u;
  u.max_objects = j.value("max_objects", u.max_objects);
  u.max_instances = j.value("max_instances", u.max_instances);
  u.max_events = j.value("max_events", u.max_events);
  u.ceiling = j.value("ceiling", u.ceiling);
  if (j.contains("values")) {
    for (const auto& v : j["values"]) u.values.push_back(value_from_json(v));
  }
  auto names = [&](const char* key, std::map<std::string, std::vector<Value>>& out) {
    if (!j.contains(key)) return;
    const auto& x = j[key];
    if (x.is_array()) {
      for (const auto& n : x) out[n.get<std::string>()] = u.values;
    } else {
      for (const auto& [n, vs] : x.items()) {
        auto& dom = out[n];
        for (const auto& v : vs) dom.push_back(value_from_json(v));
      }
    }
  };
  names("attributes", u.attributes);
  names("parameters", u.parameters);
  if (u.max_instances == 0) throw PolicyError("universe needs at least one instance");
  for (const auto* m : {&u.attributes, &u.parameters}) {
    for (const auto& [n, vs] : *m) {
      if (vs.empty()) throw PolicyError("universe name `" + n + "` has an empty value domain");
    }
  }
  return u;
}

inline UniverseBounds load_universe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open universe file `" + path + "`");
  try {
    return universe_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& ex) {
    throw PolicyError("universe file `" + path + "`: " + ex.what());
  }
}

namespace detail {

/// All full assignments of `names` over their domains.
inline std::vector<EvalContext> assignments(const std::map<std::string, std::vector<Value>>& names) {
  std::vector<EvalContext> out{EvalContext{}};
  for (const auto& [n, dom] : names) {
    std::vector<EvalContext> next;
    for (const auto& base : out) {
      for (const auto& v : dom) {
        auto c = base;
        c[n] = v;
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
  return a * b;
}

inline std::uint64_t choose_multiset(std::uint64_t n, std::uint64_t k) {
  // C(n + k - 1, k)
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = sat_mul(r, n + k - i);
    r /= i;
  }
  return r;
}

}  // namespace detail

/// Number of systems for_each_system would visit.
inline std::uint64_t universe_size(const UniverseBounds& u) {
  const std::uint64_t states = detail::assignments(u.attributes).size();
  const std::uint64_t labels = detail::assignments(u.parameters).size();
  std::uint64_t total = 0;
  for (std::uint64_t n = 0; n <= u.max_objects; ++n) {
    for (std::uint64_t t = 1; t <= u.max_instances; ++t) {
      std::uint64_t snaps = 1;
      for (std::uint64_t i = 0; i < n * t; ++i) snaps = detail::sat_mul(snaps, states);
      const std::uint64_t kinds = n * n * t * labels;
      std::uint64_t evs = 0;
      for (std::uint64_t k = 0; k <= u.max_events; ++k) evs += detail::choose_multiset(kinds, k);
      total += detail::sat_mul(snaps, evs);
      if (total >= UINT64_MAX / 2) return UINT64_MAX;
    }
  }
  return total;
}

/// Visit every system within `u`: object counts 0..max_objects, instance
/// counts 1..max_instances, every attribute state per snapshot and every
/// multiset of at most max_events events (self-loops included).
inline void for_each_system(const UniverseBounds& u, const std::function<void(const SystemGraph&)>& visit) {
  const auto n_systems = universe_size(u);
  if (n_systems > u.ceiling) {
    throw CeilingExceeded("universe holds " + std::to_string(n_systems) + " systems, ceiling is " +
                          std::to_string(u.ceiling));
  }
  const auto states = detail::assignments(u.attributes);
  const auto labels = detail::assignments(u.parameters);

  for (std::size_t n = 0; n <= u.max_objects; ++n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("o" + std::to_string(i + 1));
    for (Time T = 1; T <= u.max_instances; ++T) {
      struct Kind {
        Time t;
        std::size_t src, dest, label;
      };
      std::vector<Kind> kinds;
      for (Time t = 1; t <= T; ++t) {
        for (std::size_t s = 0; s < n; ++s) {
          for (std::size_t d = 0; d < n; ++d) {
            for (std::size_t l = 0; l < labels.size(); ++l) kinds.push_back({t, s, d, l});
          }
        }
      }
      const std::size_t slots = n * T;
      std::vector<std::size_t> state(slots, 0);
      for (;;) {
        // Events as non-decreasing index sequences over `kinds`.
        std::vector<std::size_t> chosen;
        std::function<void(std::size_t)> pick = [&](std::size_t from) {
          TraceIngestor in;
          std::vector<std::size_t> order = chosen;  // already sorted by time
          std::size_t next = 0;
          for (Time t = 1; t <= T; ++t) {
            for (std::size_t o = 0; o < n; ++o) in.add_object(t, {ids[o], states[state[o * T + (t - 1)]]});
            while (next < order.size() && kinds[order[next]].t == t) {
              const auto& k = kinds[order[next++]];
              in.add_event(t, {ids[k.src], ids[k.dest], labels[k.label]});
            }
          }
          visit(in.graph());
          if (chosen.size() == u.max_events) return;
          for (std::size_t i = from; i < kinds.size(); ++i) {
            chosen.push_back(i);
            pick(i);
            chosen.pop_back();
          }
        };
        pick(0);
        // Next attribute state vector.
        std::size_t pos = 0;
        while (pos < slots && ++state[pos] == states.size()) state[pos++] = 0;
        if (pos == slots) break;
      }
    }
  }
}

enum class Coverage { Greater, Lesser, Equal, Incomparable };

inline const char* to_string(Coverage c) {
  switch (c) {
    case Coverage::Greater: return "greater";
    case Coverage::Lesser: return "lesser";
    case Coverage::Equal: return "equal";
    case Coverage::Incomparable: return "incomparable";
  }
  return "?";
}

namespace detail {

inline std::set<std::tuple<std::map<std::string, std::size_t>, std::map<std::string, SnapshotKey>, Bindings>>
coverage_set(const PatternMatcher& m, const SystemGraph& g) {
  std::set<std::tuple<std::map<std::string, std::size_t>, std::map<std::string, SnapshotKey>, Bindings>> out;
  for (auto& x : m.find_all(g)) out.emplace(std::move(x.edges), std::move(x.isolated), std::move(x.bindings));
  return out;
}

}  // namespace detail

/// Compare the match sets of two pattern graphs on every system in `u`.
/// `greater` means g1 matches wherever g2 does and somewhere more. Variables
/// a pattern leaves unbound range over the universe's values.
inline Coverage coverage_compare(const PatternGraph& g1, const PatternGraph& g2, const UniverseBounds& u) {
  MatchOptions opts{std::numeric_limits<std::size_t>::max(), u.all_values()};
  PatternMatcher m1(g1, "g1", opts), m2(g2, "g2", opts);
  bool one_has_more = false, two_has_more = false;
  for_each_system(u, [&](const SystemGraph& g) {
    if (one_has_more && two_has_more) return;
    auto s1 = detail::coverage_set(m1, g);
    auto s2 = detail::coverage_set(m2, g);
    one_has_more = one_has_more || !std::includes(s2.begin(), s2.end(), s1.begin(), s1.end());
    two_has_more = two_has_more || !std::includes(s1.begin(), s1.end(), s2.begin(), s2.end());
  });
  if (one_has_more && two_has_more) return Coverage::Incomparable;
  if (one_has_more) return Coverage::Greater;
  if (two_has_more) return Coverage::Lesser;
  return Coverage::Equal;
}

/// Whether `p1` enforces `p2` within `u`: a domain at least as broad and a
/// requirement at most as broad.
inline bool contains(const PolicyGraph& p1, const PolicyGraph& p2, const UniverseBounds& u) {
  const auto d = coverage_compare(domain_of(p1), domain_of(p2), u);
  if (d != Coverage::Greater && d != Coverage::Equal) return false;
  const auto r = coverage_compare(requirement_of(p1), requirement_of(p2), u);
  return r == Coverage::Lesser || r == Coverage::Equal;
}

}  // namespace lasco
