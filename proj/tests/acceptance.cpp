#include <cstdlib>
#include <iostream>
#include <string>

#include "ealign/cli/acceptance.hpp"

// Usage: acceptance [--fast] [criterion ids...]
int main(int argc, char** argv) {
  ealign::acceptance::Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--fast") opt.fast = true;
    else opt.only.insert(std::atoi(a.c_str()));
  }
  opt.log = &std::cerr;
  const auto results = ealign::acceptance::run(opt);
  int failed = 0;
  for (const auto& r : results) {
    std::cout << "criterion " << r.id << ": " << (r.pass ? "PASS" : "FAIL") << " - " << r.name << " - " << r.detail
              << '\n';
    failed += !r.pass;
  }
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
