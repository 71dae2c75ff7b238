// Command-line front end: check, match, validate, monitor, algebra, corpus.
#include <iostream>

#include "CLI11.hpp"
#include "lasco/cli.hpp"

#ifndef LASCO_DEFAULT_CORPUS
#define LASCO_DEFAULT_CORPUS ""
#endif

int main(int argc, char** argv) {
  lasco::RunConfig c;
  c.corpus_dir = LASCO_DEFAULT_CORPUS;

  CLI::App app{"Graph policy checker for event traces"};
  app.add_option("--policies", c.policy_files, "Policy files")->expected(1, -1);
  app.add_option("--trace", c.trace, "JSON Lines trace file, or - for standard input");
  app.add_option("--mode", c.mode, "check | match | validate | monitor | algebra | corpus")
      ->check(CLI::IsMember({"check", "match", "validate", "monitor", "algebra", "corpus"}));
  app.add_option("--report", c.report, "text | jsonl")->check(CLI::IsMember({"text", "jsonl"}));
  app.add_option("--match-cap", c.match_cap, "Maximum matches per policy")->check(CLI::PositiveNumber);
  app.add_option("--universe", c.universe, "Universe bounds file (JSON) for --op contains");
  app.add_option("--op", c.op, "Algebra operation: and | or | reverse | contains | nullify");
  app.add_option("--operands", c.operands, "Policy names the algebra operation applies to")->expected(1, -1);
  app.add_option("--corpus", c.corpus_dir, "Corpus directory holding manifest.json");
  app.add_flag("--parallel", c.parallel, "Evaluate policies concurrently in check mode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return lasco::kExitUsage;
  }
  return lasco::run(c, std::cin, std::cout, std::cerr);
}
