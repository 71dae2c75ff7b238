#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lasco/verdict.hpp"

namespace lasco {

/// One manifest entry: a policy file, a fixture trace and the expected outcome.
struct CorpusCase {
  std::string name;
  std::string policy;  // paths relative to the corpus directory
  std::string trace;
  bool expect_upheld = true;
  std::optional<std::size_t> expect_matches;
};

struct CorpusResult {
  CorpusCase spec;
  bool upheld = true;
  std::size_t matches = 0;
  std::string error;

  bool ok() const {
    return error.empty() && upheld == spec.expect_upheld &&
           (!spec.expect_matches || *spec.expect_matches == matches);
  }

  std::string line() const {
    auto word = [](bool u) { return u ? "upheld" : "violated"; };
    std::string s = (ok() ? "ok    " : "FAIL  ") + spec.name + "  " + spec.policy + " on " + spec.trace +
                    ": expected " + word(spec.expect_upheld);
    if (spec.expect_matches) s += " with " + std::to_string(*spec.expect_matches) + " matches";
    if (!error.empty()) return s + ", error: " + error;
    return s + ", got " + word(upheld) + " with " + std::to_string(matches) + " matches";
  }
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open `" + p.string() + "`");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<CorpusCase> load_manifest(const std::filesystem::path& dir) {
  auto j = nlohmann::json::parse(read_file(dir / "manifest.json"));
  std::vector<CorpusCase> out;
  for (const auto& c : j.at("cases")) {
    CorpusCase k{c.at("name").get<std::string>(), c.at("policy").get<std::string>(),
                 c.at("trace").get<std::string>(), c.at("expect").get<std::string>() == "upheld", std::nullopt};
    if (c.contains("matches")) k.expect_matches = c["matches"].get<std::size_t>();
    out.push_back(std::move(k));
  }
  return out;
}

/// Run every manifest case. Errors are captured per case, never thrown.
inline std::vector<CorpusResult> run_corpus(const std::filesystem::path& dir) {
  std::vector<CorpusResult> out;
  for (auto& c : load_manifest(dir)) {
    CorpusResult r{c, true, 0, {}};
    try {
      auto policies = parse_policies(read_file(dir / c.policy));
      for (const auto& p : policies) {
        for (const auto& e : validate_policy(p)) r.error += e.rule + " " + e.element + ": " + e.message + "; ";
      }
      if (r.error.empty()) {
        std::ifstream tr(dir / c.trace);
        if (!tr) throw std::runtime_error("cannot open `" + c.trace + "`");
        auto g = ingest_trace(read_trace(tr));
        auto cv = verdict_all(policies, g);
        r.upheld = cv.upheld;
        for (const auto& v : cv.verdicts) r.matches += v.witnesses.size();
      }
    } catch (const std::exception& ex) {
      r.error = ex.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lasco
