#pragma once

#include <future>
#include <string>
#include <vector>

#include "lasco/matcher.hpp"

namespace lasco {

/// Every domain match of `p` in `g`.
inline std::vector<Match> find_matches(const PolicyGraph& p, const SystemGraph& g,
                                       std::size_t cap = kDefaultMatchCap) {
  return PatternMatcher(domain_of(p), p.name, MatchOptions{cap, std::nullopt}).find_all(g);
}

struct RequirementResult {
  bool satisfied = true;
  std::vector<std::string> failing;  // element ids in declaration order
};

namespace detail {

inline bool holds(const Expr& pred, const EvalContext& ctx, const Bindings& b) {
  return reduce_cond(sat_pred(pred, ctx, b)).condition.is_true();
}

}  // namespace detail

/// Evaluate every requirement predicate of `p` against the elements `m`
/// mapped to, under `m`'s bindings. A node touched by several edges is
/// checked against its snapshot at each of those events.
inline RequirementResult check_requirement(const PolicyGraph& p, const Match& m, const SystemGraph& g) {
  RequirementResult r;
  std::set<std::string> failed;
  for (const auto& e : p.graph.edges) {
    const std::size_t ev = m.edges.at(e.id);
    if (!detail::holds(p.req.at(e.id), g.events()[ev].params, m.bindings)) failed.insert(e.id);
    if (!detail::holds(p.req.at(e.src), g.src_attr(ev), m.bindings)) failed.insert(e.src);
    if (!detail::holds(p.req.at(e.dest), g.dest_attr(ev), m.bindings)) failed.insert(e.dest);
  }
  for (const auto& [node, key] : m.isolated) {
    const auto* snap = g.find(key.id, key.time);
    if (snap == nullptr || !detail::holds(p.req.at(node), snap->attrs, m.bindings)) failed.insert(node);
  }
  for (const auto& id : p.graph.elements()) {
    if (failed.count(id)) r.failing.push_back(id);
  }
  r.satisfied = r.failing.empty();
  return r;
}

struct Witness {
  Match match;
  bool satisfied = true;
  std::vector<std::string> failing;
};

/// Upheld iff every witness (one per domain match) is satisfied.
struct Verdict {
  std::string policy;
  bool upheld = true;
  std::vector<Witness> witnesses;

  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& w : witnesses) n += w.satisfied ? 0 : 1;
    return n;
  }
};

inline Verdict verdict(const PolicyGraph& p, const SystemGraph& g, std::size_t cap = kDefaultMatchCap) {
  Verdict v{p.name, true, {}};
  for (auto& m : find_matches(p, g, cap)) {
    auto r = check_requirement(p, m, g);
    v.upheld = v.upheld && r.satisfied;
    v.witnesses.push_back({std::move(m), r.satisfied, std::move(r.failing)});
  }
  return v;
}

/// A policy set is upheld iff each member is.
struct ComposedVerdict {
  bool upheld = true;
  std::vector<Verdict> verdicts;
};

inline ComposedVerdict verdict_all(const std::vector<PolicyGraph>& ps, const SystemGraph& g,
                                   std::size_t cap = kDefaultMatchCap, bool parallel = false) {
  ComposedVerdict out;
  if (parallel) {
    std::vector<std::future<Verdict>> jobs;
    for (const auto& p : ps) {
      jobs.push_back(std::async(std::launch::async, [&p, &g, cap] { return verdict(p, g, cap); }));
    }
    for (auto& j : jobs) out.verdicts.push_back(j.get());
  } else {
    for (const auto& p : ps) out.verdicts.push_back(verdict(p, g, cap));
  }
  for (const auto& v : out.verdicts) out.upheld = out.upheld && v.upheld;
  return out;
}

}  // namespace lasco
