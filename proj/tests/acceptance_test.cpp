// Runs every acceptance criterion once (plus the determinism rerun) and prints one line each.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "pipret/acceptance.hpp"

int main(int argc, char** argv) {
  using namespace pipret::acceptance;
  Options opt;
  if (argc > 1) opt.master_seed = std::strtoull(argv[1], nullptr, 10);

  int failures = 0;
  run_all(opt, [&](const CriterionResult& r) {
    const bool in_budget = r.budget_seconds <= 0.0 || r.seconds <= r.budget_seconds;
    const bool ok = r.passed && in_budget;
    if (!ok) ++failures;
    std::string note;
    if (!r.passed) note = " " + r.details.dump();
    else if (!in_budget) note = " over runtime budget";
    if (r.budget_seconds > 0.0)
      std::printf("%s C%d %s (%.2f s / %.0f s)%s\n", ok ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                  r.budget_seconds, note.c_str());
    else
      std::printf("%s C%d %s (%.2f s)%s\n", ok ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds, note.c_str());
    std::fflush(stdout);
  });
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
