#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "lasco/verdict.hpp"

namespace lasco {

struct EdgeRef {
  std::size_t event = 0;
  Time time = 0;
  std::string src;
  std::string dest;

  friend bool operator==(const EdgeRef&, const EdgeRef&) = default;
};

/// An object a policy node maps to. `time` is set for isolated nodes only;
/// other nodes are seen at the time of each incident edge.
struct NodeRef {
  std::string object;
  std::optional<Time> time;

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct WitnessRecord {
  std::string policy;
  bool satisfied = true;
  std::map<std::string, EdgeRef> edges;
  std::map<std::string, NodeRef> nodes;
  Bindings bindings;
  std::vector<std::string> failing;

  friend bool operator==(const WitnessRecord&, const WitnessRecord&) = default;
};

struct PolicySummary {
  std::string policy;
  bool upheld = true;
  std::size_t matches = 0;
  std::size_t failing = 0;

  friend bool operator==(const PolicySummary&, const PolicySummary&) = default;
};

struct Report {
  std::vector<WitnessRecord> witnesses;
  std::vector<PolicySummary> policies;
  bool upheld = true;
  double elapsed_ms = 0;

  friend bool operator==(const Report&, const Report&) = default;
};

inline WitnessRecord witness_record(const PolicyGraph& p, const Witness& w, const SystemGraph& g) {
  WitnessRecord r{p.name, w.satisfied, {}, {}, w.match.bindings, w.failing};
  for (const auto& e : p.graph.edges) {
    const std::size_t i = w.match.edges.at(e.id);
    const auto& ev = g.events()[i];
    r.edges[e.id] = {i, ev.time, ev.src, ev.dest};
    r.nodes[e.src] = {ev.src, std::nullopt};
    r.nodes[e.dest] = {ev.dest, std::nullopt};
  }
  for (const auto& [node, key] : w.match.isolated) r.nodes[node] = {key.id, key.time};
  return r;
}

inline Report make_report(const std::vector<PolicyGraph>& ps, const ComposedVerdict& cv, const SystemGraph& g,
                          double elapsed_ms = 0) {
  Report r;
  r.upheld = cv.upheld;
  r.elapsed_ms = elapsed_ms;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& v = cv.verdicts[i];
    r.policies.push_back({v.policy, v.upheld, v.witnesses.size(), v.failures()});
    for (const auto& w : v.witnesses) r.witnesses.push_back(witness_record(ps[i], w, g));
  }
  return r;
}

// --- JSON Lines ---------------------------------------------------------------

inline nlohmann::json witness_to_json(const WitnessRecord& w) {
  nlohmann::json j;
  j["kind"] = "witness";
  j["policy"] = w.policy;
  j["satisfied"] = w.satisfied;
  j["edges"] = nlohmann::json::object();
  for (const auto& [id, e] : w.edges) {
    j["edges"][id] = {{"event", e.event}, {"time", e.time}, {"src", e.src}, {"dest", e.dest}};
  }
  j["nodes"] = nlohmann::json::object();
  for (const auto& [id, n] : w.nodes) {
    nlohmann::json x = {{"object", n.object}};
    if (n.time) x["time"] = *n.time;
    j["nodes"][id] = x;
  }
  j["bindings"] = context_to_json(w.bindings);
  j["failing"] = w.failing;
  return j;
}

inline WitnessRecord witness_from_json(const nlohmann::json& j) {
  WitnessRecord w;
  w.policy = j.at("policy").get<std::string>();
  w.satisfied = j.at("satisfied").get<bool>();
  for (const auto& [id, e] : j.at("edges").items()) {
    w.edges[id] = {e.at("event").get<std::size_t>(), e.at("time").get<Time>(), e.at("src").get<std::string>(),
                   e.at("dest").get<std::string>()};
  }
  for (const auto& [id, n] : j.at("nodes").items()) {
    NodeRef r{n.at("object").get<std::string>(), std::nullopt};
    if (n.contains("time")) r.time = n["time"].get<Time>();
    w.nodes[id] = r;
  }
  w.bindings = context_from_json(j.at("bindings"));
  w.failing = j.at("failing").get<std::vector<std::string>>();
  return w;
}

/// One witness record per line, then a single summary record.
inline void write_jsonl(std::ostream& os, const Report& r) {
  for (const auto& w : r.witnesses) os << witness_to_json(w).dump() << "\n";
  nlohmann::json s;
  s["kind"] = "summary";
  s["upheld"] = r.upheld;
  s["elapsed_ms"] = r.elapsed_ms;
  s["policies"] = nlohmann::json::array();
  for (const auto& p : r.policies) {
    s["policies"].push_back(
        {{"policy", p.policy}, {"upheld", p.upheld}, {"matches", p.matches}, {"failing", p.failing}});
  }
  os << s.dump() << "\n";
}

inline Report read_jsonl(std::istream& in) {
  Report r;
  std::string line;
  bool summary = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line);
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "witness") {
      r.witnesses.push_back(witness_from_json(j));
    } else if (kind == "summary") {
      summary = true;
      r.upheld = j.at("upheld").get<bool>();
      r.elapsed_ms = j.at("elapsed_ms").get<double>();
      for (const auto& p : j.at("policies")) {
        r.policies.push_back({p.at("policy").get<std::string>(), p.at("upheld").get<bool>(),
                              p.at("matches").get<std::size_t>(), p.at("failing").get<std::size_t>()});
      }
    } else {
      throw std::runtime_error("unknown report record kind `" + kind + "`");
    }
  }
  if (!summary) throw std::runtime_error("report has no summary record");
  return r;
}

// --- text ---------------------------------------------------------------------

namespace detail {

inline std::string bindings_text(const Bindings& b) {
  std::string s;
  for (const auto& [n, v] : b) s += (s.empty() ? "$" : " $") + n + "=" + v.to_string();
  return s.empty() ? "-" : s;
}

/// Witnesses that differ only by which policy edge took which event.
inline auto symmetry_class(const WitnessRecord& w) {
  std::multiset<std::size_t> events;
  for (const auto& [id, e] : w.edges) events.insert(e.event);
  std::multiset<std::tuple<std::string, std::optional<Time>>> objects;
  for (const auto& [id, n] : w.nodes) objects.emplace(n.object, n.time);
  return std::make_tuple(w.policy, w.satisfied, events, objects, w.bindings);
}

}  // namespace detail

inline std::string witness_text(const WitnessRecord& w) {
  std::string s = w.satisfied ? "  ok   " : "  FAIL ";
  std::string map;
  for (const auto& [id, e] : w.edges) {
    map += (map.empty() ? "" : ", ") + id + "=#" + std::to_string(e.event) + " " + e.src + "->" + e.dest + "@" +
           std::to_string(e.time);
  }
  for (const auto& [id, n] : w.nodes) {
    map += (map.empty() ? "" : ", ") + id + "=" + n.object;
    if (n.time) map += "@" + std::to_string(*n.time);
  }
  s += (map.empty() ? "(empty)" : map) + "  " + detail::bindings_text(w.bindings);
  if (!w.failing.empty()) {
    s += "  failing:";
    for (const auto& f : w.failing) s += " " + f;
  }
  return s;
}

/// Human-readable summary. Witnesses that are permutations of one another
/// over parallel policy edges are shown once with a count.
inline void write_text(std::ostream& os, const Report& r) {
  for (const auto& p : r.policies) {
    os << "policy " << p.policy << ": " << (p.upheld ? "upheld" : "violated") << " (" << p.matches << " match"
       << (p.matches == 1 ? "" : "es") << ", " << p.failing << " failing)\n";
    std::map<decltype(detail::symmetry_class(r.witnesses.front())), std::size_t> seen;
    std::vector<std::pair<const WitnessRecord*, decltype(seen)::key_type>> order;
    for (const auto& w : r.witnesses) {
      if (w.policy != p.policy) continue;
      auto key = detail::symmetry_class(w);
      if (seen[key]++ == 0) order.emplace_back(&w, key);
    }
    for (const auto& [w, key] : order) {
      os << witness_text(*w);
      if (seen[key] > 1) os << "  (x" << seen[key] << " symmetric)";
      os << "\n";
    }
  }
  os << "composed: " << (r.upheld ? "upheld" : "violated") << "\n";
}

}  // namespace lasco
