// Dedicated acceptance binary: runs every release criterion at its pinned
// tolerance and prints one pass/fail line each. Exit 0 iff all pass.
#include "acceptance_suite.hpp"

int main() {
  auto results = curvislice::acceptance::run_all(true);
  return curvislice::acceptance::report(results);
}
