#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "generators.hpp"
#include "lasco/corpus.hpp"
#include "lasco/monitor.hpp"
#include "oracle.hpp"

using namespace lasco;

namespace {

std::string corpus(const std::string& rel) { return std::string(LASCO_CORPUS_DIR) + "/" + rel; }

PolicyGraph policy(const std::string& file) { return parse_policy(read_file(corpus("policies/" + file))); }

std::vector<TraceRecord> records(const std::string& file) {
  std::ifstream in(corpus("traces/" + file));
  return read_trace(in);
}

SystemGraph trace(const std::string& file) { return ingest_trace(records(file)); }

std::set<oracle::MatchTuple> tuples(const std::vector<Match>& ms) {
  std::set<oracle::MatchTuple> out;
  for (const auto& m : ms) out.emplace(m.edges, m.isolated, m.bindings);
  return out;
}

}  // namespace

TEST(MatchPredicates, NodeAndEdge) {
  EvalContext john{{"id", Value("john")}, {"type", Value("user")}, {"sec_level", Value(0)}};
  EXPECT_EQ(match_node(parse_predicate(R"(type="user" && sec_level=$UL)"), john, {}),
            (VariableConditions{{}, parse_predicate("0 = $UL")}));
  EXPECT_EQ(match_edge(parse_predicate(R"(method="read")"), {{"method", Value("read")}, {"time", Value(1)}}, {}),
            (VariableConditions{{}, Expr::truth(true)}));
  EXPECT_EQ(match_node(Expr::truth(true), john, {}), (VariableConditions{{}, Expr::truth(true)}));
}

TEST(MatchGraph, PatternOnLevels) {
  auto p = policy("simple_security.lasco");
  auto g = trace("levels.jsonl");
  EXPECT_TRUE(match_graph(domain_of(p), {{"read", 0}}, {}, g, {{"UL", Value(0)}, {"FL", Value(0)}}));
  EXPECT_FALSE(match_graph(domain_of(p), {{"read", 0}}, {}, g, {{"UL", Value(0)}, {"FL", Value(2)}}));
  EXPECT_FALSE(match_graph(requirement_of(p), {{"read", 1}}, {}, g, {{"UL", Value(0)}, {"FL", Value(2)}}));
  EXPECT_TRUE(match_graph(requirement_of(p), {{"read", 0}}, {}, g, {{"UL", Value(0)}, {"FL", Value(0)}}));
  EXPECT_TRUE(match_graph(PatternGraph{}, {}, {}, g, {}));
}

TEST(FindMatches, SimpleSecurityLevels) {
  auto p = policy("simple_security.lasco");
  auto g = trace("levels.jsonl");
  auto ms = find_matches(p, g);
  ASSERT_EQ(ms.size(), 2u);
  std::set<std::size_t> events;
  for (const auto& m : ms) events.insert(m.edges.at("read"));
  EXPECT_EQ(events, (std::set<std::size_t>{0, 1}));  // jane's write never matches
  for (const auto& m : ms) {
    if (m.edges.at("read") == 0) {
      EXPECT_EQ(m.bindings, (Bindings{{"UL", Value(0)}, {"FL", Value(0)}}));
      EXPECT_TRUE(check_requirement(p, m, g).satisfied);
    } else {
      EXPECT_EQ(m.bindings, (Bindings{{"UL", Value(0)}, {"FL", Value(2)}}));
      auto r = check_requirement(p, m, g);
      EXPECT_FALSE(r.satisfied);
      EXPECT_EQ(r.failing, (std::vector<std::string>{"read"}));
    }
  }
}

TEST(FindMatches, EmptySystem) {
  EXPECT_TRUE(find_matches(policy("simple_security.lasco"), SystemGraph{}).empty());
  // A policy without elements matches every system once, vacuously.
  auto empty = PolicyGraph::make("E", {}, {}, {});
  EXPECT_EQ(find_matches(empty, SystemGraph{}).size(), 1u);
}

TEST(FindMatches, CountingPolicy) {
  auto p = policy("image_quota.lasco");
  EXPECT_TRUE(find_matches(p, trace("quota_3.jsonl")).empty());
  auto g = trace("quota_4.jsonl");
  auto ms = find_matches(p, g);
  EXPECT_EQ(ms.size(), 24u);  // 4! assignments of 4 retrieves to 4 parallel edges
  EXPECT_EQ(tuples(ms), oracle::find_matches(p, g).matches);
}

TEST(FindMatches, IsolatedNodePerInstance) {
  auto p = policy("passwd.lasco");
  auto g = trace("passwd_violated.jsonl");
  auto ms = find_matches(p, g);
  ASSERT_EQ(ms.size(), 2u);  // /etc/passwd at t=0 and t=2
  auto v = verdict(p, g);
  EXPECT_FALSE(v.upheld);
  EXPECT_EQ(v.failures(), 1u);
}

TEST(FindMatches, NodeMappingIsInjective) {
  auto p = parse_policy(R"(policy Two {
  node a
  node b
  edge e: a -> b
})");
  auto g = ingest_trace({{0, ObjectRecord{"x", {}}}, {0, EventRecord{"x", "x", {}}}});
  EXPECT_TRUE(find_matches(p, g).empty());
  auto loop = parse_policy("policy L {\n node a\n edge e: a -> a\n}");
  EXPECT_EQ(find_matches(loop, g).size(), 1u);
}

TEST(FindMatches, EdgeMappingIsInjective) {
  auto p = parse_policy("policy Two {\n node a\n node b\n edge e1: a -> b\n edge e2: a -> b\n}");
  auto one = ingest_trace({{0, ObjectRecord{"x", {}}}, {0, ObjectRecord{"y", {}}}, {0, EventRecord{"x", "y", {}}}});
  EXPECT_TRUE(find_matches(p, one).empty());
}

TEST(FindMatches, CapExceeded) {
  auto p = policy("image_quota.lasco");
  EXPECT_THROW(find_matches(p, trace("quota_4.jsonl"), 10), MatchCapExceeded);
  EXPECT_NO_THROW(find_matches(p, trace("quota_4.jsonl"), 24));
}

TEST(FindMatches, FoldErrorsPropagate) {
  auto p = parse_policy("policy T {\n node n domain: name < 3\n}");
  auto g = ingest_trace({{0, ObjectRecord{"x", {{"name", Value("q")}}}}});
  EXPECT_THROW(find_matches(p, g), FoldError);
}

TEST(FindMatches, AgreesWithOracleOnCorpus) {
  const std::pair<const char*, const char*> cases[] = {
      {"simple_security.lasco", "levels.jsonl"},       {"chinese_wall.lasco", "wall_violated.jsonl"},
      {"chinese_wall.lasco", "wall_upheld.jsonl"},   {"separation_of_duty.lasco", "duty_violated.jsonl"},
      {"exam.lasco", "exam_violated.jsonl"},         {"exam.lasco", "exam_upheld.jsonl"},
      {"rbac.lasco", "rbac_violated.jsonl"},         {"negative_acm_alt.lasco", "acm_upheld.jsonl"},
      {"passwd.lasco", "passwd_violated.jsonl"},     {"attribute_acl.lasco", "acl_violated.jsonl"},
  };
  for (const auto& [pf, tf] : cases) {
    auto p = policy(pf);
    auto g = trace(tf);
    auto want = oracle::find_matches(p, g);
    EXPECT_EQ(tuples(find_matches(p, g)), want.matches) << pf << " on " << tf;
    EXPECT_TRUE(want.unique_bindings);
    EXPECT_EQ(verdict(p, g).upheld, oracle::upheld(p, g)) << pf << " on " << tf;
  }
}

TEST(Verdict, Levels) {
  auto v = verdict(policy("simple_security.lasco"), trace("levels.jsonl"));
  EXPECT_FALSE(v.upheld);
  EXPECT_EQ(v.witnesses.size(), 2u);
  EXPECT_EQ(v.failures(), 1u);
}

TEST(Verdict, ComposedAndEmpty) {
  auto g = trace("levels.jsonl");
  std::vector<PolicyGraph> set{policy("simple_security.lasco"), policy("passwd.lasco")};
  auto cv = verdict_all(set, g);
  EXPECT_FALSE(cv.upheld);
  EXPECT_FALSE(cv.verdicts[0].upheld);
  EXPECT_TRUE(cv.verdicts[1].upheld);
  EXPECT_TRUE(cv.verdicts[1].witnesses.empty());
  auto par = verdict_all(set, g, kDefaultMatchCap, true);
  EXPECT_EQ(par.upheld, cv.upheld);
  EXPECT_EQ(par.verdicts[0].witnesses.size(), cv.verdicts[0].witnesses.size());
  EXPECT_TRUE(verdict_all({}, g).upheld);
}

TEST(Verdict, AllTrueRequirementsAlwaysSatisfied) {
  auto p = policy("simple_security.lasco");
  p.req["read"] = Expr::truth(true);
  auto g = trace("levels.jsonl");
  for (const auto& m : find_matches(p, g)) {
    auto r = check_requirement(p, m, g);
    EXPECT_TRUE(r.satisfied);
    EXPECT_TRUE(r.failing.empty());
  }
}

TEST(Verdict, NodeRequirementCheckedAtEveryIncidentEvent) {
  auto p = parse_policy(R"(policy P {
  node u domain: k = $K req: $K != 9
  node v
  edge e1: u -> v domain: m = 1
  edge e2: v -> u domain: m = 2
})");
  auto g = ingest_trace({{0, ObjectRecord{"x", {{"k", Value(1)}}}},
                         {0, ObjectRecord{"y", {}}},
                         {1, EventRecord{"x", "y", {{"m", Value(1)}}}},
                         {2, EventRecord{"y", "x", {{"m", Value(2)}}}}});
  auto v = verdict(p, g);
  EXPECT_EQ(v.witnesses.size(), 1u);
  EXPECT_TRUE(v.upheld);
  auto g2 = ingest_trace({{0, ObjectRecord{"x", {{"k", Value(1)}}}},
                          {0, ObjectRecord{"y", {}}},
                          {1, EventRecord{"x", "y", {{"m", Value(1)}}}},
                          {2, ObjectRecord{"x", {{"k", Value(9)}}}},
                          {2, EventRecord{"y", "x", {{"m", Value(2)}}}}});
  // k differs between the two incident events, so $K cannot be bound consistently.
  EXPECT_TRUE(find_matches(p, g2).empty());
}

TEST(Monitor, LevelsStream) {
  Monitor m({policy("simple_security.lasco")});
  std::vector<std::string> lines;
  for (const auto& r : records("levels.jsonl")) {
    if (auto d = m.step(r)) lines.push_back(d->line());
  }
  EXPECT_EQ(lines, (std::vector<std::string>{"1\tjohn->a\tallow\t-", "2\tjohn->b\tdeny\tSimpleSecurity",
                                             "3\tjane->b\tallow\t-"}));
  EXPECT_EQ(m.graph().events().size(), 2u);  // the denied read is not part of history
  EXPECT_TRUE(m.upheld());
}

TEST(Monitor, UnmatchedEventAllowed) {
  Monitor m({policy("atm.lasco")});
  m.step({0, ObjectRecord{"x", {}}});
  auto d = m.step({1, EventRecord{"x", "x", {{"method", Value("noop")}}}});
  ASSERT_TRUE(d);
  EXPECT_TRUE(d->allow);
}

TEST(Monitor, FourthRetrieveDenied) {
  Monitor m({policy("image_quota.lasco")});
  std::vector<bool> allowed;
  auto recs = records("quota_4.jsonl");
  recs.push_back({5, EventRecord{"cust", "img", {{"method", Value("retrieve")}}}});
  for (const auto& r : recs) {
    if (auto d = m.step(r)) allowed.push_back(d->allow);
  }
  EXPECT_EQ(allowed, (std::vector<bool>{true, true, true, false, false}));
}

TEST(Monitor, RollbackRestoresCarriedSnapshots) {
  Monitor m({policy("atm.lasco")});
  m.step({0, ObjectRecord{"t", {}}});
  m.step({0, ObjectRecord{"d", {{"class", Value("dispenser")}}}});
  auto d = m.step({3, EventRecord{"t", "d", {{"method", Value("dispense")}, {"amount", Value(900)}}}});
  EXPECT_FALSE(d->allow);
  EXPECT_EQ(m.graph().find("d", 3), nullptr);
  // Restating the object at t=3 is legal because the denied event left no trace.
  EXPECT_NO_THROW(m.step({3, ObjectRecord{"d", {{"class", Value("dispenser")}}}}));
}

TEST(Monitor, StateOnlyViolationIsRecorded) {
  Monitor m({policy("passwd.lasco")});
  for (const auto& r : records("passwd_violated.jsonl")) EXPECT_FALSE(m.step(r).has_value());
  EXPECT_FALSE(m.upheld());
  Monitor ok({policy("passwd.lasco")});
  for (const auto& r : records("passwd_upheld.jsonl")) ok.step(r);
  EXPECT_TRUE(ok.upheld());
}

TEST(Monitor, IngestErrorLeavesStateIntact) {
  Monitor m({policy("atm.lasco")});
  m.step({1, ObjectRecord{"x", {}}});
  EXPECT_THROW(m.step({2, EventRecord{"x", "ghost", {}}}), IngestError);
  EXPECT_THROW(m.step({0, EventRecord{"x", "x", {}}}), IngestError);
  EXPECT_NO_THROW(m.step({2, EventRecord{"x", "x", {}}}));
}

TEST(Monitor, CorpusAgreesWithBatch) {
  for (const auto& c : load_manifest(LASCO_CORPUS_DIR)) {
    auto ps = parse_policies(read_file(corpus(c.policy)));
    Monitor m(ps);
    bool denied = false;
    for (const auto& r : records(c.trace.substr(std::string("traces/").size()))) {
      if (auto d = m.step(r)) denied = denied || !d->allow;
    }
    // Whatever got denied, the committed history must satisfy the policies.
    EXPECT_EQ(m.upheld(), verdict_all(ps, m.graph()).upheld) << c.name;
    if (!denied) {
      EXPECT_EQ(m.upheld(), c.expect_upheld) << c.name;
    } else {
      EXPECT_FALSE(c.expect_upheld) << c.name;
    }
  }
}

TEST(Properties, OrderIndependenceWithinInstance) {
  std::mt19937 rng(29);
  auto family = gen::fixed_family();
  for (int i = 0; i < 150; ++i) {
    auto recs = gen::random_trace(rng);
    // Shuffle events sharing an instance; object records stay in front.
    auto shuffled = recs;
    for (std::size_t a = 0; a < shuffled.size();) {
      std::size_t b = a;
      while (b < shuffled.size() && shuffled[b].time == shuffled[a].time) ++b;
      auto first_event = std::stable_partition(shuffled.begin() + a, shuffled.begin() + b,
                                               [](const TraceRecord& r) { return !r.is_event(); });
      std::shuffle(first_event, shuffled.begin() + b, rng);
      a = b;
    }
    auto g1 = ingest_trace(recs);
    auto g2 = ingest_trace(shuffled);
    for (const auto& p : family) {
      // Compare matches by event content, since indices move.
      auto sig = [&](const SystemGraph& g) {
        std::multiset<std::string> out;
        for (const auto& m : find_matches(p, g)) {
          std::string s;
          for (const auto& [id, ev] : m.edges) {
            const auto& e = g.events()[ev];
            s += id + "=" + e.src + ">" + e.dest + "@" + std::to_string(e.time) + context_to_json(e.params).dump() + ";";
          }
          for (const auto& [id, k] : m.isolated) s += id + "=" + k.id + "@" + std::to_string(k.time) + ";";
          s += context_to_json(m.bindings).dump();
          out.insert(s);
        }
        return out;
      };
      EXPECT_EQ(sig(g1), sig(g2)) << p.name;
    }
  }
}

TEST(Properties, BindingUniqueness) {
  std::mt19937 rng(31);
  auto family = gen::fixed_family();
  for (int i = 0; i < 100; ++i) {
    auto g = ingest_trace(gen::random_trace(rng, 3, 3));
    for (const auto& p : family) {
      std::map<std::pair<std::map<std::string, std::size_t>, std::map<std::string, SnapshotKey>>, int> seen;
      for (const auto& m : find_matches(p, g)) EXPECT_EQ(++seen[std::make_pair(m.edges, m.isolated)], 1) << p.name;
    }
  }
}
