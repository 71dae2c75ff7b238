#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lasco/errors.hpp"
#include "lasco/value.hpp"

namespace lasco {

/// Instance index. Externally supplied, not wall-clock.
using Time = std::uint64_t;

inline constexpr const char* kTimeParam = "time";
inline constexpr const char* kIdAttr = "id";

struct SnapshotKey {
  std::string id;
  Time time = 0;

  friend bool operator==(const SnapshotKey&, const SnapshotKey&) = default;
  friend bool operator<(const SnapshotKey& a, const SnapshotKey& b) {
    return std::tie(a.id, a.time) < std::tie(b.id, b.time);
  }
};

/// Attribute values of one object at one instance. `attrs` always holds `id`.
struct ObjectSnapshot {
  std::string id;
  EvalContext attrs;
  Time time = 0;

  friend bool operator==(const ObjectSnapshot&, const ObjectSnapshot&) = default;
};

/// An event edge. `params` always holds the injected `time` parameter.
struct SystemEvent {
  std::string src;
  std::string dest;
  EvalContext params;
  Time time = 0;

  friend bool operator==(const SystemEvent&, const SystemEvent&) = default;
};

struct ObjectRecord {
  std::string id;
  EvalContext attrs;
};

struct EventRecord {
  std::string src;
  std::string dest;
  EvalContext params;
};

/// One line of a trace: an object snapshot or an event at instance `time`.
struct TraceRecord {
  Time time = 0;
  std::variant<ObjectRecord, EventRecord> body;

  bool is_event() const { return std::holds_alternative<EventRecord>(body); }
  const EventRecord& event() const { return std::get<EventRecord>(body); }
  const ObjectRecord& object() const { return std::get<ObjectRecord>(body); }
};

/// Overlay of all system instances: per-instance object snapshots plus
/// time-stamped events, ordered by (time, ingestion order).
class SystemGraph {
 public:
  const std::map<SnapshotKey, ObjectSnapshot>& snapshots() const { return snapshots_; }
  const std::vector<SystemEvent>& events() const { return events_; }
  Time horizon() const { return horizon_; }

  std::set<std::string> object_ids() const {
    std::set<std::string> ids;
    for (const auto& [key, snap] : snapshots_) ids.insert(key.id);
    return ids;
  }

  const ObjectSnapshot* find(const std::string& id, Time t) const {
    auto it = snapshots_.find({id, t});
    return it == snapshots_.end() ? nullptr : &it->second;
  }

  const EvalContext& src_attr(std::size_t event) const {
    const auto& e = events_.at(event);
    return snapshots_.at({e.src, e.time}).attrs;
  }
  const EvalContext& dest_attr(std::size_t event) const {
    const auto& e = events_.at(event);
    return snapshots_.at({e.dest, e.time}).attrs;
  }

  friend bool operator==(const SystemGraph&, const SystemGraph&) = default;

 private:
  friend class TraceIngestor;

  std::map<SnapshotKey, ObjectSnapshot> snapshots_;
  std::vector<SystemEvent> events_;
  Time horizon_ = 0;
};

/// Builds a SystemGraph record by record. An event that references an
/// object without a snapshot at its instance reuses the object's latest
/// earlier snapshot, copied forward to that instance.
class TraceIngestor {
 public:
  /// Snapshots created to satisfy an event, so a tentative event can be undone.
  struct EventEffect {
    std::vector<SnapshotKey> carried;
  };

  const SystemGraph& graph() const { return graph_; }
  SystemGraph take() && { return std::move(graph_); }

  void add(const TraceRecord& r) {
    if (r.is_event()) {
      add_event(r.time, r.event());
    } else {
      add_object(r.time, r.object());
    }
  }

  void add_object(Time t, const ObjectRecord& o) {
    advance(t);
    if (o.id.empty()) throw IngestError("object record without id");
    EvalContext attrs = o.attrs;
    auto it = attrs.find(kIdAttr);
    if (it == attrs.end()) {
      attrs.emplace(kIdAttr, Value(o.id));
    } else if (it->second != Value(o.id)) {
      throw IngestError("object `" + o.id + "` carries mismatching `id` attribute " + it->second.to_string());
    }
    SnapshotKey key{o.id, t};
    if (graph_.snapshots_.count(key) != 0) {
      throw IngestError("duplicate snapshot of `" + o.id + "` at instance " + std::to_string(t));
    }
    graph_.snapshots_.emplace(key, ObjectSnapshot{o.id, std::move(attrs), t});
    latest_[o.id] = t;
  }

  EventEffect add_event(Time t, const EventRecord& e) {
    if (e.params.count(kTimeParam) != 0) {
      throw IngestError("event " + e.src + "->" + e.dest + " supplies reserved parameter `time`");
    }
    for (const auto* id : {&e.src, &e.dest}) {
      if (latest_.count(*id) == 0) throw IngestError("event references unknown object `" + *id + "`");
    }
    advance(t);
    EventEffect effect;
    for (const auto* id : {&e.src, &e.dest}) {
      SnapshotKey key{*id, t};
      if (graph_.snapshots_.count(key) != 0) continue;
      ObjectSnapshot carried = graph_.snapshots_.at({*id, latest_.at(*id)});
      carried.time = t;
      graph_.snapshots_.emplace(key, std::move(carried));
      effect.carried.push_back(key);
      previous_latest_[*id] = latest_.at(*id);
      latest_[*id] = t;
    }
    SystemEvent ev{e.src, e.dest, e.params, t};
    ev.params.emplace(kTimeParam, Value(static_cast<double>(t)));
    graph_.events_.push_back(std::move(ev));
    return effect;
  }

  /// Undo the most recent add_event. Only valid directly after it.
  void rollback_event(const EventEffect& effect) {
    graph_.events_.pop_back();
    for (const auto& key : effect.carried) {
      graph_.snapshots_.erase(key);
      latest_[key.id] = previous_latest_.at(key.id);
    }
  }

 private:
  void advance(Time t) {
    if (started_ && t < now_) {
      throw IngestError("time decreases from " + std::to_string(now_) + " to " + std::to_string(t));
    }
    started_ = true;
    now_ = t;
    graph_.horizon_ = std::max(graph_.horizon_, t);
  }

  SystemGraph graph_;
  std::map<std::string, Time> latest_;
  std::map<std::string, Time> previous_latest_;
  Time now_ = 0;
  bool started_ = false;
};

inline SystemGraph ingest_trace(const std::vector<TraceRecord>& records) {
  TraceIngestor in;
  for (const auto& r : records) in.add(r);
  return std::move(in).take();
}

// --- JSON Lines trace format ------------------------------------------------

inline Value value_from_json(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::string: return Value(j.get<std::string>());
    case nlohmann::json::value_t::boolean: return Value(j.get<bool>());
    case nlohmann::json::value_t::number_integer:
    case nlohmann::json::value_t::number_unsigned:
    case nlohmann::json::value_t::number_float: return Value(j.get<double>());
    case nlohmann::json::value_t::array: {
      std::vector<Value> members;
      for (const auto& m : j) members.push_back(value_from_json(m));
      return Value::set(std::move(members));
    }
    default:
      throw IngestError("unsupported value " + j.dump());
  }
}

inline nlohmann::json value_to_json(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Text: return v.text();
    case Value::Kind::Flag: return v.flag();
    case Value::Kind::Num: {
      double n = v.num();
      if (n == std::floor(n) && std::fabs(n) < 9e15) return static_cast<std::int64_t>(n);
      return n;
    }
    case Value::Kind::Set: {
      auto arr = nlohmann::json::array();
      for (const auto& m : v.members()) arr.push_back(value_to_json(m));
      return arr;
    }
  }
  return nullptr;
}

inline EvalContext context_from_json(const nlohmann::json& j) {
  EvalContext ctx;
  if (j.is_null()) return ctx;
  if (!j.is_object()) throw IngestError("expected an object of name/value pairs, got " + j.dump());
  for (const auto& [name, v] : j.items()) ctx.emplace(name, value_from_json(v));
  return ctx;
}

inline nlohmann::json context_to_json(const EvalContext& ctx) {
  auto j = nlohmann::json::object();
  for (const auto& [name, v] : ctx) j[name] = value_to_json(v);
  return j;
}

inline TraceRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw IngestError("trace record is not a JSON object");
  if (!j.contains("t") || !j["t"].is_number_unsigned()) {
    throw IngestError("trace record needs a natural number `t`");
  }
  TraceRecord r;
  r.time = j["t"].get<Time>();
  const bool has_obj = j.contains("object");
  const bool has_ev = j.contains("event");
  if (has_obj == has_ev) throw IngestError("trace record must hold exactly one of `object` or `event`");
  if (has_obj) {
    const auto& o = j["object"];
    if (!o.is_object() || !o.contains("id") || !o["id"].is_string()) {
      throw IngestError("object record needs a string `id`");
    }
    r.body = ObjectRecord{o["id"].get<std::string>(), context_from_json(o.value("attrs", nlohmann::json()))};
  } else {
    const auto& e = j["event"];
    if (!e.is_object() || !e.contains("src") || !e.contains("dest") || !e["src"].is_string() ||
        !e["dest"].is_string()) {
      throw IngestError("event record needs string `src` and `dest`");
    }
    r.body = EventRecord{e["src"].get<std::string>(), e["dest"].get<std::string>(),
                         context_from_json(e.value("params", nlohmann::json()))};
  }
  return r;
}

inline nlohmann::json record_to_json(const TraceRecord& r) {
  nlohmann::json j;
  j["t"] = r.time;
  if (r.is_event()) {
    const auto& e = r.event();
    j["event"] = {{"src", e.src}, {"dest", e.dest}, {"params", context_to_json(e.params)}};
  } else {
    const auto& o = r.object();
    j["object"] = {{"id", o.id}, {"attrs", context_to_json(o.attrs)}};
  }
  return j;
}

/// Parse one JSON Lines record; `line` is used in error messages only.
inline TraceRecord parse_trace_line(const std::string& text, std::size_t line = 0) {
  try {
    return record_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& ex) {
    throw IngestError("line " + std::to_string(line) + ": " + ex.what());
  } catch (const IngestError& ex) {
    throw IngestError("line " + std::to_string(line) + ": " + ex.what());
  }
}

inline std::vector<TraceRecord> read_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos || text[first] == '#') continue;  // blank or comment
    out.push_back(parse_trace_line(text, line));
  }
  return out;
}

/// Records that rebuild `g` exactly: per instance, its snapshots then its events.
inline std::vector<TraceRecord> to_records(const SystemGraph& g) {
  std::map<Time, std::vector<const ObjectSnapshot*>> by_time;
  for (const auto& [key, snap] : g.snapshots()) by_time[key.time].push_back(&snap);
  std::vector<TraceRecord> out;
  std::size_t next_event = 0;
  const auto& events = g.events();
  auto flush_events_before = [&](std::optional<Time> limit) {
    while (next_event < events.size() && (!limit || events[next_event].time < *limit)) {
      const auto& e = events[next_event++];
      EvalContext params = e.params;
      params.erase(kTimeParam);
      out.push_back({e.time, EventRecord{e.src, e.dest, std::move(params)}});
    }
  };
  for (const auto& [t, snaps] : by_time) {
    flush_events_before(t);
    for (const auto* s : snaps) out.push_back({t, ObjectRecord{s->id, s->attrs}});
  }
  flush_events_before(std::nullopt);
  return out;
}

inline void write_trace(std::ostream& os, const SystemGraph& g) {
  for (const auto& r : to_records(g)) os << record_to_json(r).dump() << "\n";
}

}  // namespace lasco
