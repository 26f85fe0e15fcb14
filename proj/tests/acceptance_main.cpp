// Runs every acceptance criterion and prints one line per criterion.
// Exit status is nonzero if any criterion fails.
#include <cstdio>
#include <cstring>

#include "advtrade/acceptance.hpp"

int main(int argc, char** argv) {
  advtrade::AcceptanceOptions opts;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) opts.quick = true;
  }
  int failed = 0;
  advtrade::run_acceptance(opts, [&](const advtrade::CriterionResult& r) {
    std::printf("%s\n", r.summary_line().c_str());
    std::fflush(stdout);
    if (!r.passed) ++failed;
  });
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
