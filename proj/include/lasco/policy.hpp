#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lasco/errors.hpp"
#include "lasco/expr.hpp"
#include "lasco/predicate_parser.hpp"

namespace lasco {

struct PolicyEdge {
  std::string id;
  std::string src;
  std::string dest;

  friend bool operator==(const PolicyEdge&, const PolicyEdge&) = default;
};

/// Directed graph with named nodes and named (possibly parallel) edges.
/// Node and edge ids share one namespace.
struct BasicGraph {
  std::vector<std::string> nodes;
  std::vector<PolicyEdge> edges;

  bool has_node(const std::string& n) const {
    return std::find(nodes.begin(), nodes.end(), n) != nodes.end();
  }

  bool isolated(const std::string& n) const {
    return std::none_of(edges.begin(), edges.end(),
                        [&](const PolicyEdge& e) { return e.src == n || e.dest == n; });
  }

  std::vector<std::string> isolated_nodes() const {
    std::vector<std::string> out;
    for (const auto& n : nodes) {
      if (isolated(n)) out.push_back(n);
    }
    return out;
  }

  /// Node ids then edge ids, in declaration order.
  std::vector<std::string> elements() const {
    std::vector<std::string> out = nodes;
    for (const auto& e : edges) out.push_back(e.id);
    return out;
  }

  friend bool operator==(const BasicGraph&, const BasicGraph&) = default;
};

using PredicateMap = std::map<std::string, Expr>;

/// A policy: basic graph, domain predicates, requirement predicates and the
/// variables they mention.
struct PolicyGraph {
  std::string name;
  BasicGraph graph;
  PredicateMap domain;
  PredicateMap req;
  std::set<std::string> vars;

  /// Fill missing predicates with `true` and recompute `vars`.
  static PolicyGraph make(std::string name, BasicGraph graph, PredicateMap domain, PredicateMap req) {
    PolicyGraph p{std::move(name), std::move(graph), std::move(domain), std::move(req), {}};
    for (const auto& id : p.graph.elements()) {
      p.domain.try_emplace(id, Expr::truth(true));
      p.req.try_emplace(id, Expr::truth(true));
    }
    p.refresh_vars();
    return p;
  }

  void refresh_vars() {
    vars.clear();
    for (const auto* m : {&domain, &req}) {
      for (const auto& [id, e] : *m) vars.merge(vars_of(e));
    }
  }

  friend bool operator==(const PolicyGraph&, const PolicyGraph&) = default;
};

/// One half of a policy: graph, one predicate per element, variables.
struct PatternGraph {
  BasicGraph graph;
  PredicateMap pred;
  std::set<std::string> vars;
};

inline PatternGraph domain_of(const PolicyGraph& p) { return {p.graph, p.domain, p.vars}; }
inline PatternGraph requirement_of(const PolicyGraph& p) { return {p.graph, p.req, p.vars}; }

// --- text format --------------------------------------------------------------

namespace detail {

inline bool is_ident(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

struct Clause {
  std::string keyword;  // "domain" or "req"
  std::size_t body_start;
  std::size_t body_end;
};

/// Locate `domain:` / `req:` clause markers outside string literals.
inline std::vector<Clause> find_clauses(std::string_view line, std::size_t& header_end) {
  std::vector<Clause> out;
  bool in_string = false;
  header_end = line.size();
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
      continue;
    }
    if (i > 0 && !std::isspace(static_cast<unsigned char>(line[i - 1]))) continue;
    for (std::string_view kw : {std::string_view("domain"), std::string_view("req")}) {
      if (line.substr(i, kw.size()) != kw) continue;
      std::size_t j = i + kw.size();
      while (j < line.size() && line[j] == ' ') ++j;
      if (j < line.size() && line[j] == ':') {
        if (!out.empty()) out.back().body_end = i;
        else header_end = i;
        out.push_back({std::string(kw), j + 1, line.size()});
        i = j;
        break;
      }
    }
  }
  return out;
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace detail

/// Parse every `policy <Name> { ... }` block in `text`.
///
///   policy <Name> {
///     node <id> [domain: <pred>] [req: <pred>]
///     edge <id>: <src> -> <dest> [domain: <pred>] [req: <pred>]
///   }
///
/// Lines starting with `#` are comments.
inline std::vector<PolicyGraph> parse_policies(std::string_view text) {
  std::vector<PolicyGraph> out;
  std::optional<std::string> name;
  BasicGraph graph;
  PredicateMap domain, req;
  std::set<std::string> ids;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') {
      if (nl == text.size()) break;
      continue;
    }
    auto col = [&](std::size_t offset) { return offset + 1; };

    std::size_t header_end = 0;
    auto clauses = detail::find_clauses(line, header_end);
    auto words = detail::split_words(line.substr(0, header_end));
    const std::string& head = words.front();

    if (!name) {
      if (head != "policy" || words.size() < 2) throw ParseError(line_no, col(first), "expected `policy <Name> {`");
      std::string n = words[1];
      bool brace = words.size() == 3 && words[2] == "{";
      if (words.size() == 2 && n.size() > 1 && n.back() == '{') {
        n.pop_back();
        brace = true;
      }
      if (!brace || !clauses.empty()) throw ParseError(line_no, col(first), "expected `policy <Name> {`");
      if (!detail::is_ident(n)) throw ParseError(line_no, col(first), "bad policy name `" + n + "`");
      for (const auto& p : out) {
        if (p.name == n) throw ParseError(line_no, col(first), "duplicate policy name `" + n + "`");
      }
      name = n;
      graph = {};
      domain.clear();
      req.clear();
      ids.clear();
    } else if (head == "}") {
      if (words.size() != 1 || !clauses.empty()) throw ParseError(line_no, col(first), "unexpected text after `}`");
      out.push_back(PolicyGraph::make(*name, graph, domain, req));
      name.reset();
    } else if (head == "node" || head == "edge") {
      std::string id;
      if (head == "node") {
        if (words.size() != 2) throw ParseError(line_no, col(first), "expected `node <id>`");
        id = words[1];
      } else {
        // edge <id>: <src> -> <dest>, with flexible spacing around ':' and '->'.
        std::string joined;
        for (std::size_t i = 1; i < words.size(); ++i) joined += words[i] + " ";
        std::size_t colon = joined.find(':');
        std::size_t arrow = joined.find("->");
        if (colon == std::string::npos || arrow == std::string::npos || arrow < colon) {
          throw ParseError(line_no, col(first), "expected `edge <id>: <src> -> <dest>`");
        }
        auto trim = [](std::string s) {
          s.erase(0, s.find_first_not_of(' '));
          s.erase(s.find_last_not_of(' ') + 1);
          return s;
        };
        id = trim(joined.substr(0, colon));
        PolicyEdge e{id, trim(joined.substr(colon + 1, arrow - colon - 1)), trim(joined.substr(arrow + 2))};
        for (const auto* end : {&e.src, &e.dest}) {
          if (!graph.has_node(*end)) {
            throw ParseError(line_no, col(first), "edge `" + id + "` endpoint `" + *end + "` is not a declared node");
          }
        }
        if (detail::is_ident(id)) graph.edges.push_back(e);
      }
      if (!detail::is_ident(id)) throw ParseError(line_no, col(first), "bad element id `" + id + "`");
      if (!ids.insert(id).second) throw ParseError(line_no, col(first), "duplicate node/edge id `" + id + "`");
      if (head == "node") graph.nodes.push_back(id);

      std::set<std::string> seen;
      for (const auto& c : clauses) {
        if (!seen.insert(c.keyword).second) {
          throw ParseError(line_no, col(c.body_start), "repeated `" + c.keyword + ":` clause");
        }
        if (c.keyword == "domain" && seen.count("req")) {
          throw ParseError(line_no, col(c.body_start), "`domain:` must precede `req:`");
        }
        auto body = line.substr(c.body_start, c.body_end - c.body_start);
        Expr e = parse_predicate(body, line_no, col(c.body_start));
        (c.keyword == "domain" ? domain : req)[id] = e;
      }
    } else {
      throw ParseError(line_no, col(first), "expected `node`, `edge` or `}` but found `" + head + "`");
    }
    if (nl == text.size()) break;
  }
  if (name) throw ParseError(line_no, 1, "policy `" + *name + "` is missing its closing `}`");
  return out;
}

/// Parse text holding exactly one policy block.
inline PolicyGraph parse_policy(std::string_view text) {
  auto ps = parse_policies(text);
  if (ps.size() != 1) throw ParseError(1, 1, "expected exactly one policy, found " + std::to_string(ps.size()));
  return std::move(ps.front());
}

inline std::string print_policy(const PolicyGraph& p) {
  std::string out = "policy " + p.name + " {\n";
  auto clauses = [&](const std::string& id) {
    std::string s;
    if (auto it = p.domain.find(id); it != p.domain.end() && !it->second.is_true()) {
      s += " domain: " + it->second.to_string();
    }
    if (auto it = p.req.find(id); it != p.req.end() && !it->second.is_true()) {
      s += " req: " + it->second.to_string();
    }
    return s;
  };
  for (const auto& n : p.graph.nodes) out += "  node " + n + clauses(n) + "\n";
  for (const auto& e : p.graph.edges) {
    out += "  edge " + e.id + ": " + e.src + " -> " + e.dest + clauses(e.id) + "\n";
  }
  return out + "}\n";
}

inline std::string print_policies(const std::vector<PolicyGraph>& ps) {
  std::string out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out += "\n";
    out += print_policy(ps[i]);
  }
  return out;
}

// --- well-formedness ------------------------------------------------------------

struct WellFormednessError {
  std::string element;
  std::string rule;  // "R1" or "R2"
  std::string message;

  friend bool operator==(const WellFormednessError&, const WellFormednessError&) = default;
};

namespace detail {

/// True when `e` has a conjunct `$v = E` / `E = $v` reachable through `&&`
/// only, with E free of variables.
inline bool has_binding_site(const Expr& e, const std::string& v) {
  if (e.op() == Op::And) return has_binding_site(e.lhs(), v) || has_binding_site(e.rhs(), v);
  if (e.op() != Op::Eq) return false;
  auto binds = [&](const Expr& side, const Expr& other) {
    return side.op() == Op::Var && side.name() == v && vars_of(other).empty();
  };
  return binds(e.lhs(), e.rhs()) || binds(e.rhs(), e.lhs());
}

}  // namespace detail

/// Checks the two predicate restrictions:
///   R1: every variable is bound by some domain conjunct `$v = E` (E variable-free)
///       that sits under no `||` or `!`;
///   R2: node requirement predicates do not reference attributes.
inline std::vector<WellFormednessError> validate_policy(const PolicyGraph& p) {
  std::vector<WellFormednessError> errors;
  const auto elements = p.graph.elements();
  for (const auto& v : p.vars) {
    bool bound = std::any_of(elements.begin(), elements.end(),
                             [&](const std::string& id) { return detail::has_binding_site(p.domain.at(id), v); });
    if (bound) continue;
    std::string where;
    for (const auto* m : {&p.domain, &p.req}) {
      for (const auto& id : elements) {
        if (where.empty() && vars_of(m->at(id)).count(v)) where = id;
      }
    }
    errors.push_back({where, "R1",
                      "variable $" + v + " is never bound by a domain equality outside a disjunction or negation"});
  }
  for (const auto& n : p.graph.nodes) {
    auto attrs = attrs_of(p.req.at(n));
    if (!attrs.empty()) {
      errors.push_back({n, "R2", "node requirement references attribute `" + *attrs.begin() + "`"});
    }
  }
  return errors;
}

}  // namespace lasco
