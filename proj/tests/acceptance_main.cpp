// Acceptance suite runner: one line per criterion.
//
// Plain mode exits 0 only if every criterion passes. With
// --expect-documented-state it exits 0 when the suite matches the recorded
// state of the repository: every criterion passes except the two
// documented reference-value discrepancies, which must fail for exactly
// the documented reason (an unexpected pass there is also an error, since
// it would mean the notes are stale).

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "wp/acceptance.hpp"

int main(int argc, char** argv) {
  std::uint64_t seed = 0;
  bool expect_documented = false;
  for (int a = 1; a < argc; ++a) {
    if (std::strcmp(argv[a], "--expect-documented-state") == 0) expect_documented = true;
    else seed = std::strtoull(argv[a], nullptr, 10);
  }

  const auto results = wp::run_acceptance(seed);
  int failed = 0, known = 0, unexpected = 0;
  double total = 0.0;
  for (const auto& r : results) {
    std::puts(wp::criterion_line(r).c_str());
    failed += r.pass ? 0 : 1;
    known += r.known_defect ? 1 : 0;
    if (!r.pass && !r.known_defect) ++unexpected;
    total += r.seconds;
  }
  std::printf("%d/%zu criteria passed (%d documented discrepancies), total %.1f s\n",
              static_cast<int>(results.size()) - failed, results.size(), known, total);

  if (expect_documented) return (unexpected == 0 && known == 2) ? 0 : 1;
  return failed == 0 ? 0 : 1;
}
