// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Usage: cguide_acceptance [criterion ids...]
#include "cguide/verify.hpp"

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));

  const cguide::VerifyConfig cfg;
  bool all = true;
  const auto results = cguide::run_verify(cfg, ids, [&](const cguide::CriterionResult& r) {
    std::cout << cguide::format_result(r) << std::endl;
    all &= r.passed;
  });
  if (ids.empty()) {
    // Criterion 10: the verify runner covers 1-9 and reports success.
    const bool covered = results.size() == cguide::criteria().size();
    std::cout << ((all && covered) ? "[PASS] " : "[FAIL] ") << "10 verify runner covers criteria 1-9 and succeeds"
              << std::endl;
    all &= covered;
  }
  return all ? 0 : 1;
}
