#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "generators.hpp"
#include "lasco/system.hpp"

using namespace lasco;

namespace {

TraceRecord obj(Time t, std::string id, EvalContext a) { return {t, ObjectRecord{std::move(id), std::move(a)}}; }
TraceRecord ev(Time t, std::string s, std::string d, EvalContext p) {
  return {t, EventRecord{std::move(s), std::move(d), std::move(p)}};
}

std::vector<TraceRecord> levels() {
  return {obj(0, "john", {{"type", Value("user")}, {"sec_level", Value(0)}, {"name", Value("john")}}),
          obj(0, "jane", {{"type", Value("user")}, {"sec_level", Value(2)}, {"name", Value("jane")}}),
          obj(0, "a", {{"type", Value("file")}, {"sec_level", Value(0)}, {"name", Value("a")}}),
          obj(0, "b", {{"type", Value("file")}, {"sec_level", Value(2)}, {"name", Value("b")}}),
          ev(1, "john", "a", {{"method", Value("read")}}),
          ev(2, "john", "b", {{"method", Value("read")}}),
          ev(3, "jane", "b", {{"method", Value("write")}})};
}

}  // namespace

TEST(Ingest, Levels) {
  auto g = ingest_trace(levels());
  EXPECT_EQ(g.object_ids().size(), 4u);
  EXPECT_EQ(g.events().size(), 3u);
  EXPECT_EQ(g.horizon(), 3u);
  EvalContext john{{"id", Value("john")}, {"type", Value("user")}, {"sec_level", Value(0)}, {"name", Value("john")}};
  EXPECT_EQ(g.src_attr(0), john);
  EXPECT_EQ(g.dest_attr(0).at("name"), Value("a"));
  for (const auto& e : g.events()) EXPECT_EQ(e.params.at("time"), Value(static_cast<double>(e.time)));
}

TEST(Ingest, Empty) {
  auto g = ingest_trace({});
  EXPECT_TRUE(g.snapshots().empty());
  EXPECT_TRUE(g.events().empty());
  EXPECT_EQ(g.horizon(), 0u);
}

TEST(Ingest, LatestSnapshotAtEventTime) {
  auto g = ingest_trace({obj(1, "x", {{"v", Value(1)}}), obj(3, "x", {{"v", Value(3)}}), ev(3, "x", "x", {})});
  EXPECT_EQ(g.src_attr(0).at("v"), Value(3));
  EXPECT_EQ(g.src_attr(0), g.dest_attr(0));  // self loop
}

TEST(Ingest, CarryForward) {
  auto g = ingest_trace({obj(1, "x", {{"v", Value(1)}}), obj(1, "y", {}), ev(4, "x", "y", {})});
  ASSERT_NE(g.find("x", 4), nullptr);
  EXPECT_EQ(g.src_attr(0).at("v"), Value(1));
  EXPECT_EQ(g.find("x", 4)->time, 4u);
  EXPECT_EQ(g.find("x", 2), nullptr);
}

TEST(Ingest, Errors) {
  EXPECT_THROW(ingest_trace({ev(0, "ghost", "ghost", {})}), IngestError);
  EXPECT_THROW(ingest_trace({obj(2, "x", {}), obj(1, "y", {})}), IngestError);
  EXPECT_THROW(ingest_trace({obj(0, "x", {}), ev(0, "x", "x", {{"time", Value(0)}})}), IngestError);
  EXPECT_THROW(ingest_trace({obj(0, "x", {{"id", Value("y")}})}), IngestError);
  EXPECT_THROW(ingest_trace({obj(0, "x", {}), obj(0, "x", {})}), IngestError);
  // A snapshot carried forward by an event cannot be restated at the same instance.
  EXPECT_THROW(ingest_trace({obj(0, "x", {}), ev(1, "x", "x", {}), obj(1, "x", {})}), IngestError);
  EXPECT_NO_THROW(ingest_trace({obj(0, "x", {{"id", Value("x")}})}));
}

TEST(Ingest, IdenticalEventsAreDistinct) {
  auto g = ingest_trace({obj(0, "x", {}), ev(0, "x", "x", {}), ev(0, "x", "x", {})});
  EXPECT_EQ(g.events().size(), 2u);
}

TEST(Ingest, Rollback) {
  TraceIngestor in;
  in.add_object(0, {"x", {}});
  in.add_object(0, {"y", {}});
  const SystemGraph before = in.graph();
  auto eff = in.add_event(2, {"x", "y", {}});
  EXPECT_EQ(eff.carried.size(), 2u);
  in.rollback_event(eff);
  EXPECT_EQ(in.graph().snapshots(), before.snapshots());
  EXPECT_EQ(in.graph().events(), before.events());
  in.add_object(2, {"x", {{"k", Value(1)}}});  // no longer a duplicate
  in.add_event(2, {"x", "y", {}});
  EXPECT_EQ(in.graph().src_attr(0).at("k"), Value(1));
}

TEST(TraceFormat, ParsesRecords) {
  std::istringstream in(R"(# comment
{"t":0,"object":{"id":"u","attrs":{"roles":["a","b","a"],"ok":true,"n":1.5}}}

{"t":1,"event":{"src":"u","dest":"u","params":{"m":"x"}}}
{"t":1,"event":{"src":"u","dest":"u"}}
)");
  auto recs = read_trace(in);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].object().attrs.at("roles"), Value::set({Value("a"), Value("b")}));
  EXPECT_EQ(recs[0].object().attrs.at("ok"), Value(true));
  EXPECT_TRUE(recs[1].is_event());
  EXPECT_TRUE(recs[2].event().params.empty());
}

TEST(TraceFormat, RejectsMalformed) {
  for (const char* bad : {R"({"t":-1,"object":{"id":"u"}})", R"({"object":{"id":"u"}})", R"({"t":0})",
                          R"({"t":0,"object":{"id":"u"},"event":{"src":"u","dest":"u"}})",
                          R"({"t":0,"object":{"attrs":{}}})", R"({"t":0,"event":{"src":"u"}})",
                          R"({"t":0,"object":{"id":"u","attrs":{"x":null}}})", R"(not json)", R"([1])"}) {
    EXPECT_THROW(parse_trace_line(bad, 7), IngestError) << bad;
  }
}

TEST(TraceFormat, RoundTrip) {
  std::mt19937 rng(3);
  for (int i = 0; i < 300; ++i) {
    auto g = ingest_trace(gen::random_trace(rng));
    std::stringstream ss;
    write_trace(ss, g);
    auto again = ingest_trace(read_trace(ss));
    EXPECT_EQ(again, g);
  }
  auto g = ingest_trace(levels());
  std::stringstream ss;
  write_trace(ss, g);
  EXPECT_EQ(ingest_trace(read_trace(ss)), g);
}

TEST(Properties, TimeParameterAlwaysPresent) {
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto g = ingest_trace(gen::random_trace(rng));
    for (std::size_t k = 0; k < g.events().size(); ++k) {
      const auto& e = g.events()[k];
      EXPECT_EQ(e.params.at("time"), Value(static_cast<double>(e.time)));
      EXPECT_NO_THROW(g.src_attr(k));
      EXPECT_NO_THROW(g.dest_attr(k));
    }
  }
}
