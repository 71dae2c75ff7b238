#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "lasco/algebra.hpp"
#include "lasco/corpus.hpp"
#include "lasco/monitor.hpp"
#include "lasco/report.hpp"

namespace lasco {

/// Process exit statuses. Every run ends with exactly one of these.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,       // bad flags, unreadable files
  kExitParse = 2,       // policy, predicate or trace syntax; trace invariants
  kExitInvalid = 3,     // R1/R2 violations, incompatible algebra operands
  kExitViolation = 4,   // some policy is violated (or an event was denied)
  kExitCap = 5,         // match cap or universe ceiling exceeded
  kExitCorpus = 6,      // corpus outcome differs from the manifest
  kExitEvaluation = 7,  // ill-typed predicate evaluation
};

struct RunConfig {
  std::vector<std::string> policy_files;
  std::string trace;  // file name, "-" for standard input, empty for none
  std::string mode = "check";
  std::string report = "text";
  std::size_t match_cap = kDefaultMatchCap;
  std::string universe;
  std::string op;
  std::vector<std::string> operands;
  std::string corpus_dir;
  bool parallel = false;
};

namespace detail {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::vector<PolicyGraph> load_policies(const RunConfig& c) {
  if (c.policy_files.empty()) throw UsageError("no policy files given (--policies)");
  std::vector<PolicyGraph> all;
  std::set<std::string> names;
  for (const auto& f : c.policy_files) {
    std::string text;
    try {
      text = read_file(f);
    } catch (const std::runtime_error& ex) {
      throw UsageError(ex.what());
    }
    try {
      for (auto& p : parse_policies(text)) {
        if (!names.insert(p.name).second) throw PolicyError("policy `" + p.name + "` is defined twice");
        all.push_back(std::move(p));
      }
    } catch (const ParseError& ex) {
      throw ParseError(ex.line(), ex.column(), f + ": " + std::string(ex.what()).substr(std::string(ex.what()).find(' ') + 1));
    }
  }
  return all;
}

inline SystemGraph load_trace(const RunConfig& c, std::istream& in) {
  if (c.trace.empty()) throw UsageError("no trace given (--trace)");
  if (c.trace == "-") return ingest_trace(read_trace(in));
  std::ifstream f(c.trace);
  if (!f) throw UsageError("cannot open `" + c.trace + "`");
  return ingest_trace(read_trace(f));
}

/// Prints every R1/R2 problem; true when all policies are well formed.
inline bool check_well_formed(const std::vector<PolicyGraph>& ps, std::ostream& err) {
  bool ok = true;
  for (const auto& p : ps) {
    for (const auto& e : validate_policy(p)) {
      err << p.name << ": " << e.rule << " " << e.element << ": " << e.message << "\n";
      ok = false;
    }
  }
  return ok;
}

inline const PolicyGraph& named(const std::vector<PolicyGraph>& ps, const std::string& n) {
  for (const auto& p : ps) {
    if (p.name == n) return p;
  }
  throw UsageError("no policy named `" + n + "`");
}

inline int run_check(const RunConfig& c, std::istream& in, std::ostream& out, std::ostream& err) {
  auto ps = load_policies(c);
  if (!check_well_formed(ps, err)) return kExitInvalid;
  auto g = load_trace(c, in);
  const auto start = std::chrono::steady_clock::now();
  auto cv = verdict_all(ps, g, c.match_cap, c.parallel);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  auto r = make_report(ps, cv, g, ms);
  if (c.report == "jsonl") {
    write_jsonl(out, r);
  } else {
    write_text(out, r);
  }
  return r.upheld ? kExitOk : kExitViolation;
}

inline int run_match(const RunConfig& c, std::istream& in, std::ostream& out, std::ostream& err) {
  auto ps = load_policies(c);
  if (!check_well_formed(ps, err)) return kExitInvalid;
  auto g = load_trace(c, in);
  for (const auto& p : ps) {
    auto ms = find_matches(p, g, c.match_cap);
    if (c.report != "jsonl") out << "policy " << p.name << ": " << ms.size() << " match" << (ms.size() == 1 ? "" : "es") << "\n";
    for (auto& m : ms) {
      auto w = witness_record(p, Witness{std::move(m), true, {}}, g);
      if (c.report == "jsonl") {
        auto j = witness_to_json(w);
        j["kind"] = "match";
        j.erase("satisfied");
        j.erase("failing");
        out << j.dump() << "\n";
      } else {
        out << "  " << witness_text(w).substr(7) << "\n";
      }
    }
  }
  return kExitOk;
}

inline int run_validate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  auto ps = load_policies(c);
  if (!check_well_formed(ps, err)) return kExitInvalid;
  for (const auto& p : ps) out << p.name << ": ok\n";
  return kExitOk;
}

inline int run_monitor(const RunConfig& c, std::istream& in, std::ostream& out, std::ostream& err) {
  if (c.trace != "-") throw UsageError("monitor mode reads the trace from standard input (--trace -)");
  auto ps = load_policies(c);
  if (!check_well_formed(ps, err)) return kExitInvalid;
  Monitor mon(ps);
  bool denied = false;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos || text[first] == '#') continue;
    if (auto d = mon.step(parse_trace_line(text, line))) {
      denied = denied || !d->allow;
      out << d->line() << std::endl;
    }
  }
  for (std::size_t i = 0; i < mon.size(); ++i) {
    if (!mon.upheld(i)) err << mon.policy(i).name << ": violated by object state\n";
  }
  return denied || !mon.upheld() ? kExitViolation : kExitOk;
}

inline int run_algebra(const RunConfig& c, std::istream& in, std::ostream& out, std::ostream& err) {
  auto ps = load_policies(c);
  if (!check_well_formed(ps, err)) return kExitInvalid;
  const auto& ops = c.operands;
  auto need = [&](std::size_t n) {
    if (ops.size() != n) {
      throw UsageError("--op " + c.op + " takes " + std::to_string(n) + " operand(s), got " + std::to_string(ops.size()));
    }
  };

  std::optional<PolicyExpr> expr;
  if (c.op == "nullify") {
    need(1);
    out << print_policy(nullify_graph(named(ps, ops[0])));
    expr = nullify(named(ps, ops[0]));
  } else if (c.op == "and") {
    need(2);
    const auto& a = named(ps, ops[0]);
    const auto& b = named(ps, ops[1]);
    expr = conjoin(a, b);
    if (same_domain(a, b)) {
      out << print_policy(conjoin_same_domain(a, b));
    } else {
      out << expr->to_string() << "\n";
    }
  } else if (c.op == "or") {
    need(2);
    expr = disjoin(named(ps, ops[0]), named(ps, ops[1]));
    out << expr->to_string() << "\n";
    if (mixes_domains(*expr)) out << "note: operands have different basic graphs; no match is shared\n";
  } else if (c.op == "reverse") {
    need(1);
    expr = reverse(named(ps, ops[0]));
    out << expr->to_string() << "\n";
    for (const auto& k : expr->kids) {
      if (k.kind == PolicyExpr::Kind::Atom) out << print_policy(*k.atom);
    }
  } else if (c.op == "contains") {
    need(2);
    if (c.universe.empty()) throw UsageError("--op contains needs --universe");
    const auto u = load_universe(c.universe);
    const bool r = contains(named(ps, ops[0]), named(ps, ops[1]), u);
    out << (r ? "true" : "false") << " (" << u.describe() << ")\n";
    return kExitOk;
  } else {
    throw UsageError("unknown --op `" + c.op + "` (and, or, reverse, contains, nullify)");
  }

  if (c.trace.empty()) return kExitOk;
  auto g = load_trace(c, in);
  const bool upheld = eval_policy_expr(*expr, g, c.match_cap);
  out << "verdict: " << (upheld ? "upheld" : "violated") << "\n";
  return upheld ? kExitOk : kExitViolation;
}

inline int run_corpus_mode(const RunConfig& c, std::ostream& out) {
  if (c.corpus_dir.empty()) throw UsageError("no corpus directory (--corpus)");
  std::size_t bad = 0;
  for (const auto& r : run_corpus(c.corpus_dir)) {
    out << r.line() << "\n";
    bad += r.ok() ? 0 : 1;
  }
  out << (bad == 0 ? "corpus: all cases agree\n" : "corpus: " + std::to_string(bad) + " mismatch(es)\n");
  return bad == 0 ? kExitOk : kExitCorpus;
}

}  // namespace detail

/// Execute one CLI run. Diagnostics go to `err`; the exit code is returned.
inline int run(const RunConfig& c, std::istream& in, std::ostream& out, std::ostream& err) {
  try {
    if (c.report != "text" && c.report != "jsonl") throw detail::UsageError("--report must be text or jsonl");
    if (c.mode == "check") return detail::run_check(c, in, out, err);
    if (c.mode == "match") return detail::run_match(c, in, out, err);
    if (c.mode == "validate") return detail::run_validate(c, out, err);
    if (c.mode == "monitor") return detail::run_monitor(c, in, out, err);
    if (c.mode == "algebra") return detail::run_algebra(c, in, out, err);
    if (c.mode == "corpus") return detail::run_corpus_mode(c, out);
    throw detail::UsageError("unknown mode `" + c.mode + "`");
  } catch (const detail::UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& ex) {
    err << "parse error: " << ex.what() << "\n";
    return kExitParse;
  } catch (const IngestError& ex) {
    err << "trace error: " << ex.what() << "\n";
    return kExitParse;
  } catch (const PolicyError& ex) {
    err << "policy error: " << ex.what() << "\n";
    return kExitInvalid;
  } catch (const MatchCapExceeded& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitCap;
  } catch (const CeilingExceeded& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitCap;
  } catch (const FoldError& ex) {
    err << "evaluation error: " << ex.what() << "\n";
    return kExitEvaluation;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace lasco
