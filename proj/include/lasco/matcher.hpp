#pragma once

#include <algorithm>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "lasco/conditions.hpp"
#include "lasco/policy.hpp"
#include "lasco/system.hpp"

namespace lasco {

inline constexpr std::size_t kDefaultMatchCap = 100000;

/// A policy-to-system match: where the domain applies and with which bindings.
struct Match {
  std::string policy;
  std::map<std::string, std::size_t> edges;     // policy edge -> event index
  std::map<std::string, SnapshotKey> isolated;  // isolated policy node -> object snapshot
  Bindings bindings;

  friend bool operator==(const Match& a, const Match& b) {
    return std::tie(a.policy, a.edges, a.isolated, a.bindings) ==
           std::tie(b.policy, b.edges, b.isolated, b.bindings);
  }
  friend bool operator<(const Match& a, const Match& b) {
    return std::tie(a.policy, a.edges, a.isolated, a.bindings) <
           std::tie(b.policy, b.edges, b.isolated, b.bindings);
  }
};

inline VariableConditions match_node(const Expr& p, const EvalContext& attrs, const Bindings& b) {
  return sat_pred(p, attrs, b);
}

inline VariableConditions match_edge(const Expr& p, const EvalContext& params, const Bindings& b) {
  return sat_pred(p, params, b);
}

/// Whether pattern `pg` matches `g` under the given edge/isolated-node
/// mappings and complete bindings `b`.
inline bool match_graph(const PatternGraph& pg, const std::map<std::string, std::size_t>& edge_map,
                        const std::map<std::string, SnapshotKey>& iso_map, const SystemGraph& g,
                        const Bindings& b) {
  for (const auto& e : pg.graph.edges) {
    auto it = edge_map.find(e.id);
    if (it == edge_map.end() || it->second >= g.events().size()) return false;
    const auto& ev = g.events()[it->second];
    auto c = merge_conds({match_edge(pg.pred.at(e.id), ev.params, b),
                          match_node(pg.pred.at(e.src), g.src_attr(it->second), b),
                          match_node(pg.pred.at(e.dest), g.dest_attr(it->second), b)});
    if (!c.condition.is_true()) return false;
  }
  for (const auto& n : pg.graph.isolated_nodes()) {
    auto it = iso_map.find(n);
    if (it == iso_map.end()) return false;
    const auto* snap = g.find(it->second.id, it->second.time);
    if (snap == nullptr) return false;
    if (!reduce_cond(match_node(pg.pred.at(n), snap->attrs, b)).condition.is_true()) return false;
  }
  return true;
}

/// Search options for PatternMatcher.
struct MatchOptions {
  std::size_t cap = kDefaultMatchCap;
  /// When set, variables left unbound after matching are enumerated over
  /// these values instead of rejecting the candidate, and ill-typed
  /// comparisons count as "not satisfied" rather than raising FoldError.
  /// Used for bounded-universe coverage, where patterns need not obey R1.
  std::optional<std::vector<Value>> free_values;
};

/// Backtracking matcher for one pattern graph.
///
/// Edges are assigned events in order of increasing candidate count while
/// merged variable conditions are carried along; a branch is cut as soon as
/// its condition folds to false. Bindings come only from equalities forced
/// in the conditions, never from guessing values.
class PatternMatcher {
 public:
  /// Edges assigned so far and the object chosen for each touched node.
  struct Partial {
    std::map<std::string, std::size_t> edges;
    std::map<std::string, std::string> objects;
    VariableConditions cond;
  };

  PatternMatcher(PatternGraph pattern, std::string policy, MatchOptions opts = {})
      : pattern_(std::move(pattern)), policy_(std::move(policy)), opts_(std::move(opts)) {
    isolated_ = pattern_.graph.isolated_nodes();
  }

  const PatternGraph& pattern() const { return pattern_; }
  const std::vector<std::string>& isolated_nodes() const { return isolated_; }
  bool has_isolated() const { return !isolated_.empty(); }

  /// Extend `p` by mapping policy edge `e` to event `event`.
  std::optional<Partial> assign_edge(const Partial& p, const PolicyEdge& e, std::size_t event,
                                     const SystemGraph& g) const {
    for (const auto& [id, used] : p.edges) {
      if (used == event) return std::nullopt;
    }
    const auto& ev = g.events()[event];
    Partial next{p.edges, p.objects, {}};
    if (!bind_object(next.objects, e.src, ev.src) || !bind_object(next.objects, e.dest, ev.dest)) {
      return std::nullopt;
    }
    const Bindings& b = p.cond.bindings;
    auto merged = guarded([&] {
      return merge_conds({p.cond, match_edge(pattern_.pred.at(e.id), ev.params, b),
                          match_node(pattern_.pred.at(e.src), g.src_attr(event), b),
                          match_node(pattern_.pred.at(e.dest), g.dest_attr(event), b)});
    });
    if (!merged || merged->condition.is_false()) return std::nullopt;
    next.cond = std::move(*merged);
    next.edges.emplace(e.id, event);
    return next;
  }

  /// Map the isolated nodes of an edge-complete partial onto snapshots and
  /// emit every resulting match. With `must_touch`, only assignments using
  /// at least one of those snapshots are emitted.
  void complete(const Partial& p, const SystemGraph& g, const std::set<SnapshotKey>* must_touch,
                const std::function<void(Match)>& emit) const {
    std::map<std::string, SnapshotKey> iso;
    auto objects = p.objects;
    complete_rec(p, p.cond, objects, iso, 0, false, g, must_touch, emit);
  }

  /// Every match of the pattern in `g`. Throws MatchCapExceeded past the cap.
  std::vector<Match> find_all(const SystemGraph& g) const {
    std::vector<Match> out;
    auto emit = [&](Match m) {
      if (out.size() >= opts_.cap) {
        throw MatchCapExceeded("policy `" + policy_ + "` exceeds the match cap of " + std::to_string(opts_.cap));
      }
      out.push_back(std::move(m));
    };

    // Candidate events per edge, narrowed by the event index then by the
    // edge and endpoint predicates evaluated without bindings.
    EventIndex index(g);
    std::vector<std::pair<const PolicyEdge*, std::vector<std::size_t>>> order;
    for (const auto& e : pattern_.graph.edges) {
      std::vector<std::size_t> cands;
      for (std::size_t i : index.candidates(pattern_.pred.at(e.id))) {
        Partial empty;
        if (assign_edge(empty, e, i, g)) cands.push_back(i);
      }
      if (cands.empty()) return out;
      order.emplace_back(&e, std::move(cands));
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.second.size() < b.second.size(); });

    std::function<void(const Partial&, std::size_t)> extend = [&](const Partial& p, std::size_t depth) {
      if (depth == order.size()) {
        complete(p, g, nullptr, emit);
        return;
      }
      for (std::size_t ev : order[depth].second) {
        if (auto next = assign_edge(p, *order[depth].first, ev, g)) extend(*next, depth + 1);
      }
    };
    extend(Partial{}, 0);
    return out;
  }

 private:
  /// Events keyed by (parameter, constant) so an edge predicate with a
  /// top-level `param = k` conjunct only looks at matching events.
  class EventIndex {
   public:
    explicit EventIndex(const SystemGraph& g) : size_(g.events().size()) {
      for (std::size_t i = 0; i < g.events().size(); ++i) {
        for (const auto& [name, v] : g.events()[i].params) by_param_[{name, v}].push_back(i);
      }
    }

    std::vector<std::size_t> candidates(const Expr& pred) const {
      if (auto key = indexable(pred)) {
        auto it = by_param_.find(*key);
        return it == by_param_.end() ? std::vector<std::size_t>{} : it->second;
      }
      std::vector<std::size_t> all(size_);
      for (std::size_t i = 0; i < size_; ++i) all[i] = i;
      return all;
    }

   private:
    static std::optional<std::pair<std::string, Value>> indexable(const Expr& e) {
      if (e.op() == Op::And) {
        if (auto k = indexable(e.lhs())) return k;
        return indexable(e.rhs());
      }
      if (e.op() != Op::Eq) return std::nullopt;
      if (e.lhs().op() == Op::Attr && e.rhs().is_const()) return std::make_pair(e.lhs().name(), e.rhs().value());
      if (e.rhs().op() == Op::Attr && e.lhs().is_const()) return std::make_pair(e.rhs().name(), e.lhs().value());
      return std::nullopt;
    }

    std::size_t size_;
    std::map<std::pair<std::string, Value>, std::vector<std::size_t>> by_param_;
  };

  template <class F>
  std::optional<VariableConditions> guarded(F&& f) const {
    if (!opts_.free_values) return f();
    try {
      return f();
    } catch (const FoldError&) {
      return std::nullopt;
    }
  }

  /// Node-to-object assignment stays a function and stays injective.
  static bool bind_object(std::map<std::string, std::string>& objects, const std::string& node,
                          const std::string& object) {
    auto it = objects.find(node);
    if (it != objects.end()) return it->second == object;
    for (const auto& [n, o] : objects) {
      if (o == object) return false;
    }
    objects.emplace(node, object);
    return true;
  }

  void complete_rec(const Partial& p, const VariableConditions& cond, std::map<std::string, std::string>& objects,
                    std::map<std::string, SnapshotKey>& iso, std::size_t k, bool touched, const SystemGraph& g,
                    const std::set<SnapshotKey>* must_touch, const std::function<void(Match)>& emit) const {
    if (k == isolated_.size()) {
      if (must_touch && !touched) return;
      finish(p, cond, iso, emit);
      return;
    }
    const std::string& node = isolated_[k];
    const Expr& pred = pattern_.pred.at(node);
    for (const auto& [key, snap] : g.snapshots()) {
      if (!bind_object(objects, node, key.id)) continue;
      auto merged = guarded([&] { return merge_conds(cond, match_node(pred, snap.attrs, cond.bindings)); });
      if (merged && !merged->condition.is_false()) {
        iso[node] = key;
        const bool hit = touched || (must_touch != nullptr && must_touch->count(key) != 0);
        complete_rec(p, *merged, objects, iso, k + 1, hit, g, must_touch, emit);
        iso.erase(node);
      }
      objects.erase(node);
    }
  }

  /// Emit the match once every variable is bound and the condition is true.
  void finish(const Partial& p, const VariableConditions& cond, const std::map<std::string, SnapshotKey>& iso,
              const std::function<void(Match)>& emit) const {
    std::vector<std::string> unbound;
    for (const auto& v : pattern_.vars) {
      if (!cond.bindings.count(v)) unbound.push_back(v);
    }
    if (unbound.empty()) {
      if (cond.condition.is_true()) emit(Match{policy_, p.edges, iso, cond.bindings});
      return;
    }
    if (opts_.free_values) enumerate_free(p, cond, unbound, 0, iso, emit);
  }

  void enumerate_free(const Partial& p, const VariableConditions& cond, const std::vector<std::string>& unbound,
                      std::size_t k, const std::map<std::string, SnapshotKey>& iso,
                      const std::function<void(Match)>& emit) const {
    if (k == unbound.size()) {
      if (cond.condition.is_true()) emit(Match{policy_, p.edges, iso, cond.bindings});
      return;
    }
    if (cond.bindings.count(unbound[k])) {
      enumerate_free(p, cond, unbound, k + 1, iso, emit);
      return;
    }
    for (const auto& v : *opts_.free_values) {
      Bindings b = cond.bindings;
      b.emplace(unbound[k], v);
      auto next = guarded([&] { return reduce_cond({std::move(b), cond.condition}); });
      if (next && !next->condition.is_false()) enumerate_free(p, *next, unbound, k + 1, iso, emit);
    }
  }

  PatternGraph pattern_;
  std::string policy_;
  MatchOptions opts_;
  std::vector<std::string> isolated_;
};

}  // namespace lasco
