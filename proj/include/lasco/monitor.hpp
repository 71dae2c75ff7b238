#pragma once

#include <set>
#include <string>
#include <vector>

#include "lasco/verdict.hpp"

namespace lasco {

/// Answer for one pending event.
struct Decision {
  Time time = 0;
  std::string src;
  std::string dest;
  bool allow = true;
  std::vector<std::string> policies;  // policies the event would violate

  /// `<time>\t<src>-><dest>\t<allow|deny>\t<policy or ->`
  std::string line() const {
    std::string who;
    for (const auto& p : policies) who += (who.empty() ? "" : ",") + p;
    return std::to_string(time) + "\t" + src + "->" + dest + "\t" + (allow ? "allow" : "deny") + "\t" +
           (who.empty() ? "-" : who);
  }
};

/// Streaming enforcement. Each pending event is checked only against the
/// matches it takes part in; partial edge assignments are kept between
/// events so a new event extends them instead of re-searching history.
///
/// Matches that involve no new event (an isolated node meeting a fresh
/// snapshot) cannot be blocked, so their failures are recorded and
/// reported through upheld() only.
class Monitor {
 public:
  explicit Monitor(std::vector<PolicyGraph> policies) {
    for (auto& p : policies) {
      State s{p, PatternMatcher(domain_of(p), p.name), {}, {}, false};
      if (p.graph.edges.empty()) s.complete.push_back({});
      states_.push_back(std::move(s));
    }
  }

  const SystemGraph& graph() const { return ingest_.graph(); }

  /// Feed one record. Object records yield no decision.
  std::optional<Decision> step(const TraceRecord& r) {
    if (!r.is_event()) {
      ingest_.add_object(r.time, r.object());
      const SnapshotKey key{r.object().id, r.time};
      check_state_only({key});
      return std::nullopt;
    }

    const auto& e = r.event();
    auto effect = ingest_.add_event(r.time, e);
    const SystemGraph& g = ingest_.graph();
    const std::size_t idx = g.events().size() - 1;

    Decision d{r.time, e.src, e.dest, true, {}};
    std::vector<std::vector<PatternMatcher::Partial>> fresh_partials(states_.size());
    std::vector<std::vector<PatternMatcher::Partial>> fresh_complete(states_.size());
    try {
      for (std::size_t i = 0; i < states_.size(); ++i) {
        auto& s = states_[i];
        bool failed = false;
        extend_with(s, idx, g, fresh_partials[i], fresh_complete[i]);
        for (const auto& p : fresh_complete[i]) {
          s.matcher.complete(p, g, nullptr, [&](Match m) {
            if (!check_requirement(s.policy, m, g).satisfied) failed = true;
          });
        }
        if (failed) d.policies.push_back(s.policy.name);
      }
    } catch (...) {
      ingest_.rollback_event(effect);
      throw;
    }

    if (!d.policies.empty()) {
      d.allow = false;
      ingest_.rollback_event(effect);
      return d;
    }
    for (std::size_t i = 0; i < states_.size(); ++i) {
      auto& s = states_[i];
      auto& np = fresh_partials[i];
      s.partials.insert(s.partials.end(), std::make_move_iterator(np.begin()), std::make_move_iterator(np.end()));
    }
    if (!effect.carried.empty()) {
      check_state_only(std::set<SnapshotKey>(effect.carried.begin(), effect.carried.end()));
    }
    for (std::size_t i = 0; i < states_.size(); ++i) {
      auto& s = states_[i];
      if (!s.matcher.has_isolated()) continue;
      auto& nc = fresh_complete[i];
      s.complete.insert(s.complete.end(), std::make_move_iterator(nc.begin()), std::make_move_iterator(nc.end()));
    }
    return d;
  }

  /// False once an allowed history contains a failing match of policy `i`.
  bool upheld(std::size_t i) const { return !states_.at(i).violated; }
  bool upheld() const {
    for (const auto& s : states_) {
      if (s.violated) return false;
    }
    return true;
  }
  std::size_t size() const { return states_.size(); }
  const PolicyGraph& policy(std::size_t i) const { return states_.at(i).policy; }

 private:
  struct State {
    PolicyGraph policy;
    PatternMatcher matcher;
    std::vector<PatternMatcher::Partial> partials;  // some but not all edges assigned
    std::vector<PatternMatcher::Partial> complete;  // all edges assigned, kept only with isolated nodes
    bool violated = false;
  };

  /// New partials obtained by mapping some unassigned edge to event `idx`.
  static void extend_with(const State& s, std::size_t idx, const SystemGraph& g,
                          std::vector<PatternMatcher::Partial>& partial_out,
                          std::vector<PatternMatcher::Partial>& complete_out) {
    const auto& edges = s.policy.graph.edges;
    auto try_from = [&](const PatternMatcher::Partial& p) {
      for (const auto& e : edges) {
        if (p.edges.count(e.id)) continue;
        auto next = s.matcher.assign_edge(p, e, idx, g);
        if (!next) continue;
        if (next->edges.size() == edges.size()) {
          complete_out.push_back(std::move(*next));
        } else {
          partial_out.push_back(std::move(*next));
        }
      }
    };
    try_from(PatternMatcher::Partial{});
    for (const auto& p : s.partials) try_from(p);
  }

  /// Matches built from stored complete partials whose isolated nodes use
  /// one of `touched`. They involve no pending event and are only recorded.
  void check_state_only(const std::set<SnapshotKey>& touched) {
    const SystemGraph& g = ingest_.graph();
    for (auto& s : states_) {
      if (!s.matcher.has_isolated()) continue;
      for (const auto& p : s.complete) {
        s.matcher.complete(p, g, &touched, [&](Match m) {
          if (!check_requirement(s.policy, m, g).satisfied) s.violated = true;
        });
      }
    }
  }

  TraceIngestor ingest_;
  std::vector<State> states_;
};

}  // namespace lasco
