// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code 0 iff all pass.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "magwell/benchlib.hpp"

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  magwell::Config cfg = magwell::Config::defaults_for("report");
  std::vector<magwell::CriterionResult> rs = magwell::run_acceptance(cfg, "out", only);
  bool all = true;
  for (const auto& r : rs) all = all && r.pass;
  std::printf("%s\n", all ? "acceptance: ALL PASS" : "acceptance: FAILURES PRESENT");
  return all ? 0 : 1;
}
